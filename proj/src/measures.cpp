#include "sigdet/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "sigdet/signal_model.hpp"

namespace sigdet {

// ---------------------------------------------------------------------------
// Dyadic intervals and covers

double DyadicInterval::length() const { return std::ldexp(1.0, -rank); }

double DyadicInterval::left() const { return std::ldexp(static_cast<double>(position), -rank); }

bool DyadicInterval::contains(const DyadicInterval &other) const {
  return other.rank >= rank && (other.position >> (other.rank - rank)) == position;
}

DyadicCover::DyadicCover(std::vector<DyadicInterval> intervals) : intervals_(std::move(intervals)) {
  for (const auto &i : intervals_) {
    if (i.rank < 0 || i.rank > 60)
      throw ParameterError("dyadic rank out of range");
    if (i.position >= (std::uint64_t{1} << i.rank))
      throw ParameterError("dyadic position out of range");
  }
  for (std::size_t a = 0; a < intervals_.size(); ++a)
    for (std::size_t b = a + 1; b < intervals_.size(); ++b)
      if (intervals_[a].contains(intervals_[b]) || intervals_[b].contains(intervals_[a]))
        throw ParameterError("dyadic cover intervals must have disjoint interiors");
}

double DyadicCover::measure() const {
  double m = 0.0;
  for (const auto &i : intervals_)
    m += i.length();
  return m;
}

double DyadicCover::alpha_budget(double alpha) const {
  double b = 0.0;
  for (const auto &i : intervals_)
    b += std::pow(i.length(), alpha);
  return b;
}

int DyadicCover::min_rank() const {
  int r = std::numeric_limits<int>::max();
  for (const auto &i : intervals_)
    r = std::min(r, i.rank);
  return intervals_.empty() ? 0 : r;
}

int DyadicCover::max_rank() const {
  int r = 0;
  for (const auto &i : intervals_)
    r = std::max(r, i.rank);
  return r;
}

DyadicCover DyadicCover::prefix(int rank) { return DyadicCover({{rank, 0}}); }

DyadicCover DyadicCover::full() { return DyadicCover({{0, 0}}); }

// ---------------------------------------------------------------------------
// Cantor trees

void validate(const CantorTree &tree) {
  if (!(2 <= tree.p && tree.p < tree.q))
    throw ParameterError("cantor construction requires 2 <= p < q");
  if (tree.depth < 0 || static_cast<int>(tree.levels.size()) != tree.depth + 1)
    throw ParameterError("cantor tree levels do not match its depth");
  if (tree.levels[0] != std::vector<std::uint64_t>{0})
    throw ParameterError("cantor tree root level must be {0}");
  for (int k = 1; k <= tree.depth; ++k) {
    const auto &prev = tree.levels[k - 1];
    const auto &cur = tree.levels[k];
    if (cur.size() != prev.size() * static_cast<std::size_t>(tree.p))
      throw ParameterError("every chosen interval must keep exactly p children");
    if (!std::is_sorted(cur.begin(), cur.end()))
      throw ParameterError("cantor tree levels must be sorted");
    for (auto pos : cur)
      if (!std::binary_search(prev.begin(), prev.end(), pos / tree.q))
        throw ParameterError("cantor child without a chosen parent");
  }
}

std::vector<cplx> cantor_walsh_coefficients_at_rank(const CantorTree &tree, int rank) {
  validate(tree);
  if (rank < 0 || rank > tree.depth)
    throw SizeError("rank beyond the cantor tree depth");
  const std::uint64_t cells = ipow(tree.q, rank);
  std::vector<cplx> mass(cells, cplx{});
  const double w = std::pow(static_cast<double>(tree.p), -rank);
  for (auto pos : tree.levels[rank])
    mass[pos] = w;
  return walsh_analysis(tree.q, rank, mass);
}

std::vector<cplx> cantor_walsh_coefficients(const CantorTree &tree, std::size_t count) {
  auto coeffs = cantor_walsh_coefficients_at_rank(tree, tree.depth);
  coeffs.resize(count, cplx{});
  return coeffs;
}

CantorTree sample_random_cantor(int q, int p, int depth, const RngStream &stream) {
  if (!(2 <= p && p < q))
    throw ParameterError("random cantor requires 2 <= p < q");
  if (depth < 0)
    throw ParameterError("random cantor depth must be nonnegative");
  CantorTree tree;
  tree.q = q;
  tree.p = p;
  tree.depth = depth;
  tree.levels.assign(1, {0});
  auto eng = stream.engine();
  std::vector<int> digits(q);
  std::iota(digits.begin(), digits.end(), 0);
  std::vector<int> picked(p);
  for (int k = 1; k <= depth; ++k) {
    std::vector<std::uint64_t> next;
    next.reserve(tree.levels[k - 1].size() * p);
    for (auto parent : tree.levels[k - 1]) {
      std::sample(digits.begin(), digits.end(), picked.begin(), p, eng);
      for (int d : picked)
        next.push_back(parent * q + static_cast<std::uint64_t>(d));
    }
    // Parents are visited in order and std::sample keeps relative order.
    tree.levels.push_back(std::move(next));
  }
  return tree;
}

bool cantor_supercritical(int q, int p) { return p * p > q; }

Overlap gw_overlap(const CantorTree &a, const CantorTree &b, int k) {
  if (a.q != b.q || a.p != b.p)
    throw ParameterError("overlap needs constructions with the same (q, p)");
  if (k < 0 || k > a.depth || k > b.depth)
    throw SizeError("overlap rank exceeds a tree's depth");
  Overlap o;
  std::vector<std::uint64_t> common;
  std::set_intersection(a.levels[k].begin(), a.levels[k].end(), b.levels[k].begin(),
                        b.levels[k].end(), std::back_inserter(common));
  o.common = common.size();
  const auto x = cantor_walsh_coefficients_at_rank(a, k);
  const auto y = cantor_walsh_coefficients_at_rank(b, k);
  cplx s = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n)
    s += x[n] * std::conj(y[n]);
  o.inner = s.real();
  o.inner_imag = s.imag();
  return o;
}

// ---------------------------------------------------------------------------
// Transforms

namespace {

// integral over [a, a + h) of exp(-2 pi i n t) dt
cplx interval_fourier(std::int64_t n, double a, double h) {
  if (n == 0)
    return h;
  const double w = kTwoPi * static_cast<double>(n);
  const cplx e0 = std::polar(1.0, -w * a);
  const cplx e1 = std::polar(1.0, -w * (a + h));
  return (e0 - e1) / cplx(0.0, w);
}

cplx fourier_char_conj(std::int64_t n, double t) {
  const long double turns = static_cast<long double>(n) * t;
  const double frac = static_cast<double>(turns - std::floor(turns));
  return std::polar(1.0, -kTwoPi * frac);
}

} // namespace

CoefficientVector transform_measure(const MeasureModel &m, const Basis &basis, std::size_t count) {
  CoefficientVector out{basis, std::vector<cplx>(count)};
  if (basis.kind == BasisKind::walsh && basis.q < 2)
    throw ParameterError("walsh basis needs q >= 2");

  if (const auto *atomic = std::get_if<AtomicMeasure>(&m.variant)) {
    for (std::size_t i = 0; i < count; ++i) {
      cplx acc = 0.0;
      for (const auto &[t, w] : atomic->atoms) {
        if (basis.kind == BasisKind::walsh)
          acc += w * std::conj(walsh_function(basis.q, i, t));
        else
          acc += w * fourier_char_conj(integer_at(i), t);
      }
      out.values[i] = acc;
    }
    return out;
  }

  const auto &tree = std::get<CantorTree>(m.variant);
  validate(tree);
  if (basis.kind == BasisKind::walsh) {
    if (basis.q != tree.q)
      throw ParameterError("walsh base differs from the cantor construction base");
    out.values = cantor_walsh_coefficients(tree, count);
    return out;
  }
  // Uniform density on each chosen leaf.
  const double h = std::pow(static_cast<double>(tree.q), -tree.depth);
  const double mass = std::pow(static_cast<double>(tree.p), -tree.depth);
  for (std::size_t i = 0; i < count; ++i) {
    const std::int64_t n = integer_at(i);
    cplx acc = 0.0;
    for (auto pos : tree.levels[tree.depth])
      acc += interval_fourier(n, static_cast<double>(pos) * h, h);
    out.values[i] = acc * (mass / h);
  }
  return out;
}

CoefficientVector add_noise(const CoefficientVector &y, const RngStream &stream) {
  CoefficientVector out = y;
  const auto xi = sample_noise(stream, ScalarField::complex, y.values.size());
  for (std::size_t i = 0; i < xi.size(); ++i)
    out.values[i] += xi[i];
  return out;
}

std::vector<cplx> dyadic_partial_sums(const CoefficientVector &y, int rank) {
  if (y.basis.kind != BasisKind::walsh || y.basis.q != 2)
    throw ParameterError("dyadic partial sums need base-2 walsh coefficients");
  if (rank < 0 || rank > 40)
    throw SizeError("rank out of range");
  if (y.values.size() < (std::size_t{1} << rank))
    throw SizeError("need at least 2^rank walsh coefficients");
  return walsh_synthesis(2, rank, y.values);
}

cplx integrate_functional(const DyadicCover &cover, const CoefficientVector &y) {
  if (cover.empty())
    return 0.0;
  if (y.basis.kind == BasisKind::walsh) {
    std::map<int, std::vector<const DyadicInterval *>> by_rank;
    for (const auto &i : cover.intervals())
      by_rank[i.rank].push_back(&i);
    cplx total = 0.0;
    for (const auto &[rank, ivs] : by_rank) {
      const auto sums = dyadic_partial_sums(y, rank);
      cplx layer = 0.0;
      for (const auto *i : ivs)
        layer += sums[i->position];
      total += std::ldexp(1.0, -rank) * layer;
    }
    return total;
  }
  // Fejer-weighted partial sum over |n| <= K.
  std::int64_t kmax = 0;
  for (std::size_t i = 0; i < y.values.size(); ++i)
    kmax = std::max(kmax, std::abs(integer_at(i)));
  cplx total = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const std::int64_t n = integer_at(i);
    const double weight = 1.0 - static_cast<double>(std::abs(n)) / static_cast<double>(kmax + 1);
    cplx ind = 0.0;
    for (const auto &iv : cover.intervals())
      ind += interval_fourier(n, iv.left(), iv.length());
    total += weight * std::conj(ind) * y.values[i];
  }
  return total;
}

SupportRecovery known_support_recovery(const CoefficientVector &y,
                                       const std::vector<DyadicCover> &covers) {
  if (covers.empty())
    throw ParameterError("known-support recovery needs at least one cover");
  SupportRecovery r;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < covers.size(); ++j) {
    const double m = covers[j].measure();
    const double bound = 1.0 / static_cast<double>((j + 1) * (j + 1));
    if (m > bound * (1.0 + 1e-12))
      throw ParameterError("cover " + std::to_string(j + 1) + " violates mes(U_j) <= j^-2");
    if (m > prev)
      throw ParameterError("covers must be nested-decreasing in measure");
    prev = m;
    r.trajectory.push_back(integrate_functional(covers[j], y));
  }
  r.value = r.trajectory.back();
  return r;
}

// ---------------------------------------------------------------------------
// Omega_{N1,N2} optimizer

std::size_t dyadic_budget_cost(double alpha, int rank, std::size_t resolution) {
  const double c = std::round(std::pow(2.0, -alpha * rank) * static_cast<double>(resolution));
  return std::max<std::size_t>(1, static_cast<std::size_t>(c));
}

namespace {

struct DpCell {
  double score = 0.0;
  std::size_t count = 0; // intervals used
};

bool better(const DpCell &a, const DpCell &b) {
  return a.score > b.score || (a.score == b.score && a.count < b.count);
}

} // namespace

DimensionRecovery dimension_constrained_recovery(const CoefficientVector &y, double alpha,
                                                 int rank_min, int rank_max,
                                                 std::size_t resolution) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ParameterError("alpha must lie in (0, 1)");
  if (rank_min < 0 || rank_max < rank_min || rank_max > 20)
    throw ParameterError("need 0 <= rank_min <= rank_max <= 20");
  if (static_cast<double>(resolution) < std::pow(2.0, alpha * (rank_max - rank_min)))
    throw ParameterError("budget resolution too coarse for the rank range");

  const std::size_t units = resolution;
  // Real part of the integral over every admissible node.
  std::vector<std::vector<double>> node_score(rank_max + 1);
  for (int r = rank_min; r <= rank_max; ++r) {
    const auto sums = dyadic_partial_sums(y, r);
    node_score[r].resize(sums.size());
    for (std::size_t j = 0; j < sums.size(); ++j)
      node_score[r][j] = std::ldexp(sums[j].real(), -r);
  }

  // best[r][j][u]: optimum inside node (r, j) using at most u units.
  // choice: 0 = nothing, 1 = take node, 2 + a = split with a units to the left child.
  std::vector<std::vector<std::vector<DpCell>>> best(rank_max + 1);
  std::vector<std::vector<std::vector<std::size_t>>> choice(rank_max + 1);
  for (int r = rank_max; r >= 0; --r) {
    const std::size_t nodes = std::size_t{1} << r;
    best[r].assign(nodes, std::vector<DpCell>(units + 1));
    choice[r].assign(nodes, std::vector<std::size_t>(units + 1, 0));
    const bool takeable = r >= rank_min;
    const std::size_t cost = takeable ? dyadic_budget_cost(alpha, r, resolution) : 0;
    for (std::size_t j = 0; j < nodes; ++j) {
      for (std::size_t u = 0; u <= units; ++u) {
        DpCell cell{};
        std::size_t ch = 0;
        if (takeable && cost <= u) {
          const DpCell take{node_score[r][j], 1};
          if (better(take, cell)) {
            cell = take;
            ch = 1;
          }
        }
        if (r < rank_max) {
          const auto &left = best[r + 1][2 * j];
          const auto &right = best[r + 1][2 * j + 1];
          for (std::size_t a = 0; a <= u; ++a) {
            const DpCell split{left[a].score + right[u - a].score, left[a].count + right[u - a].count};
            if (better(split, cell)) {
              cell = split;
              ch = 2 + a;
            }
          }
        }
        best[r][j][u] = cell;
        choice[r][j][u] = ch;
      }
    }
  }

  DimensionRecovery out;
  out.value = best[0][0][units].score;
  out.in_regime = alpha < 0.5;
  std::vector<DyadicInterval> chosen;
  std::vector<std::tuple<int, std::size_t, std::size_t>> stack{{0, 0, units}};
  while (!stack.empty()) {
    auto [r, j, u] = stack.back();
    stack.pop_back();
    const std::size_t ch = choice[r][j][u];
    if (ch == 1) {
      chosen.push_back({r, j});
      out.units_used += dyadic_budget_cost(alpha, r, resolution);
    } else if (ch >= 2) {
      const std::size_t a = ch - 2;
      stack.emplace_back(r + 1, 2 * j, a);
      stack.emplace_back(r + 1, 2 * j + 1, u - a);
    }
  }
  out.cover = DyadicCover(std::move(chosen));
  return out;
}

std::array<double, 4> dimension_constrained_parts(const CoefficientVector &y, double alpha,
                                                  int rank_min, int rank_max,
                                                  std::size_t resolution) {
  const std::array<cplx, 4> rotations{cplx(1, 0), cplx(-1, 0), cplx(0, -1), cplx(0, 1)};
  std::array<double, 4> parts{};
  for (std::size_t i = 0; i < 4; ++i) {
    CoefficientVector rotated = y;
    for (auto &v : rotated.values)
      v *= rotations[i];
    parts[i] = dimension_constrained_recovery(rotated, alpha, rank_min, rank_max, resolution).value;
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Change of basis

std::vector<cplx> change_of_basis_row(int q, int s, std::int64_t n) {
  const std::uint64_t cells = ipow(q, s);
  const double h = 1.0 / static_cast<double>(cells);
  // a_J = integral over cell J of e_n = conj(integral of e_{-n}).
  std::vector<cplx> a(cells);
  for (std::uint64_t j = 0; j < cells; ++j)
    a[j] = std::conj(interval_fourier(n, static_cast<double>(j) * h, h));
  return walsh_analysis(q, s, a);
}

CoefficientVector fourier_walsh_change_of_basis(const CoefficientVector &y,
                                                BasisDirection direction, int s,
                                                const std::vector<std::int64_t> &indices) {
  if (direction == BasisDirection::walsh_to_fourier) {
    if (y.basis.kind != BasisKind::walsh)
      throw ParameterError("walsh_to_fourier expects walsh coefficients");
    const int q = y.basis.q;
    const std::uint64_t cells = ipow(q, s);
    CoefficientVector out{Basis::fourier(), {}};
    for (auto n : indices) {
      const auto row = change_of_basis_row(q, s, n);
      cplx acc = 0.0;
      for (std::uint64_t k = 0; k < cells && k < y.values.size(); ++k)
        acc += std::conj(row[k]) * y.values[k];
      out.values.push_back(acc);
    }
    return out;
  }
  if (y.basis.kind != BasisKind::fourier)
    throw ParameterError("fourier_to_walsh expects fourier coefficients");
  const int q = 2;
  const std::uint64_t cells = ipow(q, s);
  CoefficientVector out{Basis::walsh(q), std::vector<cplx>(indices.size())};
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const auto row = change_of_basis_row(q, s, integer_at(i));
    for (std::size_t o = 0; o < indices.size(); ++o) {
      const auto k = static_cast<std::uint64_t>(indices[o]);
      if (indices[o] < 0 || k >= cells)
        throw SizeError("walsh index outside q^s");
      out.values[o] += row[k] * y.values[i];
    }
  }
  return out;
}

} // namespace sigdet
