#include "sigdet/signal_model.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace sigdet {

// ---------------------------------------------------------------------------
// Index sets

std::int64_t integer_at(std::size_t position) {
  if (position == 0)
    return 0;
  const auto half = static_cast<std::int64_t>((position + 1) / 2);
  return position % 2 == 1 ? half : -half;
}

std::size_t tree_edge_count(int depth) {
  if (depth < 0 || depth > 62)
    throw SizeError("tree depth out of range");
  return (std::size_t{1} << (depth + 1)) - 2;
}

int tree_edge_level(std::size_t edge) {
  // Level-l edges occupy [2^l - 2, 2^(l+1) - 2).
  return static_cast<int>(std::bit_width(edge + 2)) - 1;
}

std::vector<std::int64_t> enumerate_index(const IndexSet &index_set, std::size_t k) {
  std::vector<std::int64_t> out;
  out.reserve(k);
  switch (index_set.kind) {
  case IndexSet::Kind::naturals:
    for (std::size_t i = 0; i < k; ++i)
      out.push_back(static_cast<std::int64_t>(i) + 1);
    break;
  case IndexSet::Kind::integers:
    for (std::size_t i = 0; i < k; ++i)
      out.push_back(integer_at(i));
    break;
  case IndexSet::Kind::tree_edges:
    if (k > tree_edge_count(index_set.depth))
      throw SizeError("requested more edges than the tree holds");
    for (std::size_t i = 0; i < k; ++i)
      out.push_back(static_cast<std::int64_t>(i));
    break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Amplitudes

Amplitude Amplitude::constant(double c) {
  Amplitude a;
  a.kind_ = Kind::constant;
  a.scale_ = c;
  return a;
}

Amplitude Amplitude::power_law(double scale, double exponent, double offset) {
  Amplitude a;
  a.kind_ = Kind::power_law;
  a.scale_ = scale;
  a.exponent_ = exponent;
  a.offset_ = offset;
  return a;
}

Amplitude Amplitude::explicit_list(std::vector<double> values, std::int64_t origin) {
  Amplitude a;
  a.kind_ = Kind::list;
  a.values_ = std::move(values);
  a.origin_ = origin;
  return a;
}

double Amplitude::operator()(std::int64_t n) const {
  const std::int64_t m = n < 0 ? -n : n;
  switch (kind_) {
  case Kind::constant:
    return scale_;
  case Kind::power_law: {
    const double base = static_cast<double>(m) + offset_;
    if (base <= 0.0)
      throw SizeError("power-law amplitude undefined at index " + std::to_string(n));
    return scale_ * std::pow(base, -exponent_);
  }
  case Kind::list: {
    const std::int64_t i = m - origin_;
    if (i < 0 || i >= static_cast<std::int64_t>(values_.size()))
      throw SizeError("amplitude list has no entry for index " + std::to_string(n));
    return values_[static_cast<std::size_t>(i)];
  }
  }
  return 0.0;
}

std::int64_t Amplitude::max_index() const {
  if (kind_ == Kind::list)
    return origin_ + static_cast<std::int64_t>(values_.size()) - 1;
  return -1;
}

std::string Amplitude::describe() const {
  std::ostringstream os;
  switch (kind_) {
  case Kind::constant:
    os << "const(" << scale_ << ")";
    break;
  case Kind::power_law:
    os << scale_ << "*(|n|+" << offset_ << ")^-" << exponent_;
    break;
  case Kind::list:
    os << "list[" << values_.size() << "]@" << origin_;
    break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Descriptors

SpaceDescriptor scaled(double c, SpaceDescriptor inner) {
  return {space::Scaled{c, std::make_shared<const SpaceDescriptor>(std::move(inner))}};
}

SpaceDescriptor union_of(std::vector<SpaceDescriptor> members) {
  return {space::Union{std::move(members)}};
}

SignalParams union_choice(std::size_t member, SignalParams inner) {
  return {params::UnionChoice{member, std::make_shared<const SignalParams>(std::move(inner))}};
}

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

void validate(const SpaceDescriptor &desc) {
  std::visit(overloaded{
                 [](const space::Scaled &s) {
                   if (!(s.c > 0.0))
                     throw ParameterError("scaled space requires c > 0");
                   if (!s.inner)
                     throw ParameterError("scaled space has no inner space");
                   validate(*s.inner);
                 },
                 [](const space::Union &u) {
                   if (u.members.empty())
                     throw ParameterError("union requires a nonempty member list");
                   for (const auto &m : u.members)
                     validate(m);
                   const IndexSet is = index_set(u.members.front());
                   const ScalarField f = field(u.members.front());
                   for (const auto &m : u.members)
                     if (!(index_set(m) == is) || field(m) != f)
                       throw ParameterError("union members must share index set and field");
                 },
                 [](const space::CantorMeasure &c) {
                   if (!(2 <= c.p && c.p < c.q))
                     throw ParameterError("cantor_measure requires 2 <= p < q");
                   if (c.depth < 0)
                     throw ParameterError("cantor_measure depth must be nonnegative");
                 },
                 [](const space::TreeTrail &t) {
                   if (!(t.delta > 0.0))
                     throw ParameterError("tree_trail requires delta > 0");
                   if (t.depth < 0)
                     throw ParameterError("tree_trail depth must be nonnegative");
                 },
                 [](const space::Periodic &p) {
                   if (p.period_bound == 0)
                     throw ParameterError("periodic space requires a positive period bound");
                 },
                 [](const auto &) {},
             },
             desc.variant);
}

IndexSet index_set(const SpaceDescriptor &desc) {
  return std::visit(overloaded{
                        [](const space::Trigonometric &) { return IndexSet::integers(); },
                        [](const space::TreeTrail &t) { return IndexSet::tree_edges(t.depth); },
                        [](const space::Scaled &s) { return index_set(*s.inner); },
                        [](const space::Union &u) { return index_set(u.members.front()); },
                        [](const auto &) { return IndexSet::naturals(); },
                    },
                    desc.variant);
}

ScalarField field(const SpaceDescriptor &desc) {
  return std::visit(overloaded{
                        [](const space::Singleton &s) { return s.x.field; },
                        [](const space::Trigonometric &) { return ScalarField::complex; },
                        [](const space::Lacunary &) { return ScalarField::complex; },
                        [](const space::CantorMeasure &) { return ScalarField::complex; },
                        [](const space::Periodic &p) { return p.field; },
                        [](const space::Scaled &s) { return field(*s.inner); },
                        [](const space::Union &u) { return field(u.members.front()); },
                        [](const auto &) { return ScalarField::real; },
                    },
                    desc.variant);
}

std::string name(const SpaceDescriptor &desc) {
  return std::visit(overloaded{
                        [](const space::Singleton &) { return std::string("singleton"); },
                        [](const space::Rademacher &) { return std::string("rademacher"); },
                        [](const space::Walsh &) { return std::string("walsh"); },
                        [](const space::Trigonometric &) { return std::string("trigonometric"); },
                        [](const space::Lacunary &) { return std::string("lacunary"); },
                        [](const space::TreeTrail &) { return std::string("tree_trail"); },
                        [](const space::Periodic &) { return std::string("periodic"); },
                        [](const space::CantorMeasure &) { return std::string("cantor_measure"); },
                        [](const space::Scaled &s) { return "scaled(" + name(*s.inner) + ")"; },
                        [](const space::Union &u) {
                          std::string s = "union(";
                          for (std::size_t i = 0; i < u.members.size(); ++i)
                            s += (i ? "," : "") + name(u.members[i]);
                          return s + ")";
                        },
                    },
                    desc.variant);
}

std::string describe(const SignalParams &p) {
  return std::visit(overloaded{
                        [](const params::None &) { return std::string("none"); },
                        [](const params::Signs &s) {
                          std::string r;
                          for (int e : s.eps)
                            r += e > 0 ? '+' : '-';
                          return r;
                        },
                        [](const params::WalshSigns &s) {
                          std::string r;
                          for (int e : s.eps)
                            r += e > 0 ? '+' : '-';
                          return r;
                        },
                        [](const params::Rotation &r) {
                          std::ostringstream os;
                          os.precision(17);
                          os << r.t;
                          return os.str();
                        },
                        [](const params::TreePath &t) {
                          std::string r;
                          for (auto b : t.bits)
                            r += b ? '1' : '0';
                          return r;
                        },
                        [](const params::PeriodVector &v) {
                          return "period" + std::to_string(v.values.size());
                        },
                        [](const params::CantorChoice &c) {
                          return "cantor_depth" + std::to_string(c.tree.depth);
                        },
                        [](const params::UnionChoice &u) {
                          return std::to_string(u.member) + ":" + describe(*u.inner);
                        },
                    },
                    p.variant);
}

// ---------------------------------------------------------------------------
// Generation

namespace {

template <class T> const T &expect(const SignalParams &p, const char *family) {
  if (const T *v = std::get_if<T>(&p.variant))
    return *v;
  throw ParameterError(std::string("parameter shape does not match ") + family + " space");
}

int sign_at(const std::vector<int> &eps, std::size_t i, const char *what) {
  if (i >= eps.size())
    throw ParameterError(std::string(what) + " sign vector too short");
  const int e = eps[i];
  if (e != 1 && e != -1)
    throw ParameterError(std::string(what) + " signs must be +1 or -1");
  return e;
}

cplx unit_phase(long double turns) {
  const long double frac = turns - std::floor(turns);
  const double angle = static_cast<double>(frac * 2.0L * static_cast<long double>(kPi));
  return {std::cos(angle), std::sin(angle)};
}

} // namespace

Signal generate_signal(const SpaceDescriptor &desc, const SignalParams &prm,
                       std::size_t horizon) {
  validate(desc);
  Signal out;
  out.field = field(desc);
  out.values.assign(horizon, cplx{});
  auto &x = out.values;

  std::visit(
      overloaded{
          [&](const space::Singleton &s) {
            if (horizon > s.x.size())
              throw SizeError("singleton signal shorter than horizon");
            std::copy_n(s.x.values.begin(), horizon, x.begin());
          },
          [&](const space::Rademacher &r) {
            const auto &eps = expect<params::Signs>(prm, "rademacher").eps;
            for (std::size_t i = 0; i < horizon; ++i) {
              const auto n = static_cast<std::int64_t>(i) + 1;
              x[i] = r.sigma(n) * sign_at(eps, i, "rademacher");
            }
          },
          [&](const space::Walsh &w) {
            const auto &eps = expect<params::WalshSigns>(prm, "walsh").eps;
            for (std::size_t n = 0; n < horizon; ++n) {
              int sign = 1;
              for (std::size_t bits = n, j = 0; bits != 0; bits >>= 1, ++j)
                if (bits & 1U)
                  sign *= sign_at(eps, j, "walsh");
              x[n] = w.sigma(static_cast<std::int64_t>(n)) * sign;
            }
          },
          [&](const space::Trigonometric &tr) {
            const double t = expect<params::Rotation>(prm, "trigonometric").t;
            for (std::size_t i = 0; i < horizon; ++i) {
              const std::int64_t n = integer_at(i);
              // n*t mod 1 in extended precision keeps phases accurate for large |n|.
              x[i] = tr.sigma(n) * unit_phase(static_cast<long double>(n) * t);
            }
          },
          [&](const space::Lacunary &l) {
            const double t = expect<params::Rotation>(prm, "lacunary").t;
            long double phase = t - std::floor(t);
            for (std::size_t i = 0; i < horizon; ++i) {
              phase *= 2.0L;
              phase -= std::floor(phase);
              x[i] = l.sigma(static_cast<std::int64_t>(i) + 1) * unit_phase(phase);
            }
          },
          [&](const space::TreeTrail &t) {
            const auto &bits = expect<params::TreePath>(prm, "tree_trail").bits;
            if (horizon > tree_edge_count(t.depth))
              throw SizeError("horizon exceeds the tree's edge count");
            if (bits.size() < static_cast<std::size_t>(t.depth))
              throw ParameterError("tree path shorter than the tree depth");
            std::size_t node = 0; // heap index; edges below node v are 2v, 2v + 1
            for (int level = 0; level < t.depth; ++level) {
              const std::size_t edge = 2 * node + (bits[level] ? 1 : 0);
              if (edge < horizon)
                x[edge] = t.delta;
              node = edge + 1;
            }
          },
          [&](const space::Periodic &p) {
            const auto &v = expect<params::PeriodVector>(prm, "periodic").values;
            if (v.empty() || v.size() > p.period_bound)
              throw ParameterError("period vector length must be in [1, period_bound]");
            for (std::size_t i = 0; i < horizon; ++i)
              x[i] = v[i % v.size()];
            if (p.field == ScalarField::real)
              for (auto &c : x)
                c = c.real();
          },
          [&](const space::CantorMeasure &c) {
            const auto &tree = expect<params::CantorChoice>(prm, "cantor_measure").tree;
            if (tree.q != c.q || tree.p != c.p || tree.depth != c.depth)
              throw ParameterError("cantor tree does not match the descriptor");
            x = cantor_walsh_coefficients(tree, horizon);
          },
          [&](const space::Scaled &s) {
            Signal inner = generate_signal(*s.inner, prm, horizon);
            for (std::size_t i = 0; i < horizon; ++i)
              x[i] = s.c * inner.values[i];
          },
          [&](const space::Union &u) {
            const auto &choice = expect<params::UnionChoice>(prm, "union");
            if (choice.member >= u.members.size() || !choice.inner)
              throw ParameterError("union choice out of range");
            x = generate_signal(u.members[choice.member], *choice.inner, horizon).values;
          },
      },
      desc.variant);
  return out;
}

DetectionMap combine_union_detector(std::vector<DetectionMap> detectors) {
  if (detectors.empty())
    throw ParameterError("union detector requires at least one member");
  return [ds = std::move(detectors)](const std::vector<cplx> &z) {
    // 1 - prod(1 - T_i) over {0,1}-valued maps is a logical or.
    for (const auto &d : ds)
      if (d(z))
        return true;
    return false;
  };
}

} // namespace sigdet
