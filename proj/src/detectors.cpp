#include "sigdet/detectors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "sigdet/walsh.hpp"

namespace sigdet {

const char *to_string(Verdict v) { return v == Verdict::signal ? "signal" : "noise"; }

CheckpointSchedule::CheckpointSchedule(std::vector<std::size_t> checkpoints)
    : checkpoints_(std::move(checkpoints)) {
  if (checkpoints_.empty())
    throw ParameterError("checkpoint schedule must be nonempty");
  for (std::size_t i = 1; i < checkpoints_.size(); ++i)
    if (checkpoints_[i] <= checkpoints_[i - 1])
      throw ParameterError("checkpoints must be strictly increasing");
}

CheckpointSchedule CheckpointSchedule::single(std::size_t n) { return CheckpointSchedule({n}); }

CheckpointSchedule CheckpointSchedule::linear(std::size_t last, std::size_t count) {
  if (count == 0 || last < count)
    throw ParameterError("linear schedule needs 1 <= count <= last");
  std::vector<std::size_t> cps;
  for (std::size_t i = 1; i <= count; ++i)
    cps.push_back(last * i / count);
  return CheckpointSchedule(std::move(cps));
}

namespace {

void require_length(std::size_t have, const CheckpointSchedule &schedule, const char *what) {
  if (have < schedule.back())
    throw SizeError(std::string(what) + " shorter than the final checkpoint");
}

} // namespace

// ---------------------------------------------------------------------------

DetectorReport llr_one_point(std::span<const cplx> x, std::span<const cplx> z,
                             const CheckpointSchedule &schedule) {
  require_length(x.size(), schedule, "signal");
  require_length(z.size(), schedule, "observation");
  double energy = 0.0;
  for (std::size_t n = 0; n < schedule.back(); ++n)
    energy += std::norm(x[n]);
  if (energy == 0.0)
    throw PreconditionError("one-point test undefined for a zero-energy signal");

  DetectorReport report;
  report.rule = "S_N > 0 at final checkpoint";
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t cp : schedule.checkpoints()) {
    for (; n < cp; ++n)
      s += (std::conj(x[n]) * z[n]).real() - 0.5 * std::norm(x[n]);
    report.trajectory.emplace_back(cp, s);
  }
  report.verdict = s > 0.0 ? Verdict::signal : Verdict::noise;
  return report;
}

DetectorReport energy_detector(const Amplitude &sigma, const Observation &z,
                               const CheckpointSchedule &schedule) {
  if (z.field != ScalarField::complex)
    throw FieldError("energy detector centering assumes complex noise");
  require_length(z.values.size(), schedule, "observation");
  DetectorReport report;
  report.rule = "S_{N_k} >= 0 at final checkpoint";
  double s = 0.0;
  std::size_t i = 0;
  for (std::size_t cp : schedule.checkpoints()) {
    for (; i < cp; ++i) {
      const double sn = std::min(std::abs(sigma(static_cast<std::int64_t>(i) + 1)), 1.0);
      const double s2 = sn * sn;
      s += s2 * (std::norm(z.values[i]) - (2.0 + 0.5 * s2));
    }
    report.trajectory.emplace_back(cp, s);
  }
  report.verdict = s >= 0.0 ? Verdict::signal : Verdict::noise;
  return report;
}

CheckpointSchedule build_energy_schedule(const Amplitude &sigma, std::size_t k_max,
                                         std::size_t max_horizon) {
  if (k_max == 0)
    throw ParameterError("k_max must be positive");
  std::vector<std::size_t> cps;
  double partial = 0.0;
  std::size_t n = 0;
  const std::int64_t domain = sigma.max_index();
  auto advance = [&](double target) {
    if (n >= max_horizon || (domain >= 0 && static_cast<std::int64_t>(n) + 1 > domain))
      throw SizeError("sum of sigma^4 does not reach " + std::to_string(target) +
                      " within the available horizon");
    ++n;
    const double sn = std::min(std::abs(sigma(static_cast<std::int64_t>(n))), 1.0);
    partial += sn * sn * sn * sn;
  };
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double target = static_cast<double>(k) * static_cast<double>(k);
    while (partial < target)
      advance(target);
    // Keep the schedule strictly increasing when one term clears several targets.
    if (!cps.empty() && n == cps.back())
      advance(target);
    cps.push_back(n);
  }
  return CheckpointSchedule(std::move(cps));
}

// ---------------------------------------------------------------------------

CandidateSet::CandidateSet(const std::vector<Signal> &signals) {
  entries_.reserve(signals.size());
  for (const auto &s : signals) {
    Entry e;
    e.length = s.size();
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.values[i] != cplx{})
        e.nonzeros.emplace_back(i, s.values[i]);
    entries_.push_back(std::move(e));
  }
}

double CandidateSet::distance_to_zero(std::size_t i) const {
  double d = 0.0;
  for (const auto &[n, v] : entries_[i].nonzeros) {
    if (n >= 1100)
      break; // 2^-1100 underflows; remaining terms are zero in double
    d += std::ldexp(std::min(1.0, std::abs(v)), -static_cast<int>(n + 1));
  }
  return d;
}

DetectorReport generalized_llr_detector(const CandidateSet &grid, std::span<const cplx> z,
                                        const CheckpointSchedule &schedule,
                                        double neighborhood_radius,
                                        std::size_t min_checkpoint_index) {
  if (grid.empty())
    throw ParameterError("generalized likelihood test needs a nonempty grid");
  if (!(neighborhood_radius > 0.0))
    throw ParameterError("neighborhood radius must be positive");
  require_length(z.size(), schedule, "observation");

  const auto &cps = schedule.checkpoints();
  std::vector<double> best(cps.size(), std::numeric_limits<double>::infinity());
  bool any_outside = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid.distance_to_zero(g) < neighborhood_radius)
      continue;
    const auto &entry = grid[g];
    if (entry.length < schedule.back())
      throw SizeError("grid element shorter than the final checkpoint");
    any_outside = true;
    double d = 0.0;
    auto it = entry.nonzeros.begin();
    for (std::size_t c = 0; c < cps.size(); ++c) {
      for (; it != entry.nonzeros.end() && it->first < cps[c]; ++it) {
        const auto &[n, y] = *it;
        d += std::norm(y) - 2.0 * (std::conj(y) * z[n]).real();
      }
      best[c] = std::min(best[c], d);
    }
  }
  if (!any_outside)
    throw ParameterError("every grid element lies inside the excluded neighbourhood");

  DetectorReport report;
  report.rule = "noise iff min D_k > 0 at some checkpoint index >= " +
                std::to_string(min_checkpoint_index);
  bool noise = false;
  for (std::size_t c = 0; c < cps.size(); ++c) {
    report.trajectory.emplace_back(cps[c], best[c]);
    if (c >= min_checkpoint_index && best[c] > 0.0)
      noise = true;
  }
  report.verdict = noise ? Verdict::noise : Verdict::signal;
  return report;
}

// ---------------------------------------------------------------------------

namespace {

struct CertificateFamily {
  enum class Kind { rademacher, walsh, tree } kind;
  Amplitude sigma = Amplitude::constant(0.0);
  double delta = 0.0;
  int depth = 0;
  double scale = 1.0;
};

CertificateFamily certificate_family(const SpaceDescriptor &desc) {
  if (const auto *r = std::get_if<space::Rademacher>(&desc.variant))
    return {CertificateFamily::Kind::rademacher, r->sigma};
  if (const auto *w = std::get_if<space::Walsh>(&desc.variant))
    return {CertificateFamily::Kind::walsh, w->sigma};
  if (const auto *t = std::get_if<space::TreeTrail>(&desc.variant))
    return {CertificateFamily::Kind::tree, Amplitude::constant(0.0), t->delta, t->depth};
  if (const auto *s = std::get_if<space::Scaled>(&desc.variant)) {
    CertificateFamily f = certificate_family(*s->inner);
    f.scale *= s->c;
    return f;
  }
  throw UnsupportedError("volume-growth certificate needs finitely many values per coordinate (" +
                         name(desc) + ")");
}

} // namespace

std::vector<VolumeGrowthRow> volume_growth_certificate(const SpaceDescriptor &desc,
                                                       const std::vector<std::size_t> &horizons) {
  validate(desc);
  const CertificateFamily fam = certificate_family(desc);
  const double ln2 = std::log(2.0);
  std::vector<VolumeGrowthRow> rows;
  for (std::size_t k : horizons) {
    if (k == 0)
      throw ParameterError("certificate horizons must be positive");
    VolumeGrowthRow row;
    row.k = k;
    double log2_count = 0.0;
    double energy = 0.0;
    switch (fam.kind) {
    case CertificateFamily::Kind::rademacher: {
      // One free sign per coordinate with sigma_n != 0.
      std::size_t free = 0;
      for (std::size_t n = 1; n <= k; ++n) {
        const double s = fam.sigma(static_cast<std::int64_t>(n));
        energy += s * s;
        free += s != 0.0;
      }
      log2_count = static_cast<double>(free);
      break;
    }
    case CertificateFamily::Kind::walsh: {
      // Indices 0..k-1 involve exactly the bits below bit_width(k-1).
      for (std::size_t n = 0; n < k; ++n) {
        const double s = fam.sigma(static_cast<std::int64_t>(n));
        energy += s * s;
      }
      log2_count = static_cast<double>(std::bit_width(k - 1));
      break;
    }
    case CertificateFamily::Kind::tree: {
      if (k > tree_edge_count(fam.depth))
        throw SizeError("certificate horizon exceeds the tree");
      // Full levels 1..h are covered; r edges of level h+1 are present.
      int h = 0;
      while (tree_edge_count(h + 1) <= k)
        ++h;
      const std::size_t r = k - tree_edge_count(h);
      const std::size_t level_nodes = std::size_t{1} << h;
      const std::size_t count = r + (level_nodes - (r + 1) / 2);
      log2_count = std::log2(static_cast<double>(count));
      energy = fam.delta * fam.delta * h;
      break;
    }
    }
    energy *= fam.scale * fam.scale;
    row.log_proj_count = log2_count * ln2;
    row.min_energy = energy;
    row.ratio = energy > 0.0 ? row.log_proj_count / energy : std::numeric_limits<double>::infinity();
    rows.push_back(row);
  }
  return rows;
}

bool certificate_holds(const std::vector<VolumeGrowthRow> &rows) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto &r : rows)
    m = std::min(m, r.ratio);
  return m < 0.125;
}

// ---------------------------------------------------------------------------

int tree_depth_of(std::size_t edge_count) {
  int h = 0;
  while (h < 62 && tree_edge_count(h) < edge_count)
    ++h;
  if (tree_edge_count(h) != edge_count)
    throw SizeError("tree observation length is not 2^(h+1) - 2");
  return h;
}

namespace {

void require_tree_depth(std::span<const cplx> z, int h) {
  if (h < 0)
    throw ParameterError("tree depth must be nonnegative");
  if (h > 62 || tree_edge_count(h) > z.size())
    throw SizeError("depth exceeds the tree observation");
}

} // namespace

double tree_max_path_sum(std::span<const cplx> z, int h) {
  require_tree_depth(z, h);
  if (h == 0)
    return 0.0;
  // best[v] for nodes at the current level, heap order within the level.
  std::vector<double> best(std::size_t{1} << h, 0.0);
  for (int level = h; level >= 1; --level) {
    const std::size_t first_edge = tree_edge_count(level - 1);
    const std::size_t parents = std::size_t{1} << (level - 1);
    for (std::size_t v = 0; v < parents; ++v) {
      const double left = z[first_edge + 2 * v].real() + best[2 * v];
      const double right = z[first_edge + 2 * v + 1].real() + best[2 * v + 1];
      best[v] = std::max(left, right);
    }
  }
  return best[0];
}

double tree_union_bound_threshold(int h, double alpha) {
  if (h <= 0)
    throw ParameterError("union-bound threshold needs h >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ParameterError("alpha must lie in (0, 1)");
  // Phibar(x) = p  <=>  x = sqrt(2) erfc^-1(2p)
  const double p = std::ldexp(alpha, -h);
  return std::sqrt(static_cast<double>(h)) * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

DetectorReport tree_max_path_detector(std::span<const cplx> z, double delta,
                                      const std::vector<int> &depths,
                                      const TreeDetectorOptions &options) {
  if (!(delta > 0.0))
    throw ParameterError("tree detector requires delta > 0");
  if (depths.empty())
    throw ParameterError("tree detector needs at least one depth");
  DetectorReport report;
  for (int h : depths)
    report.trajectory.emplace_back(static_cast<std::size_t>(h), tree_max_path_sum(z, h));
  const int h = depths.back();
  double threshold = delta * h;
  if (options.rule == TreeDetectorOptions::Rule::union_bound && h > 0) {
    threshold = std::min(threshold, tree_union_bound_threshold(h, options.alpha));
    report.rule = "max path sum >= min(delta h, union-bound level alpha=" +
                  std::to_string(options.alpha) + ")";
  } else {
    report.rule = "max path sum >= delta h";
  }
  report.verdict = report.final_statistic() >= threshold ? Verdict::signal : Verdict::noise;
  return report;
}

double tree_log_likelihood(std::span<const cplx> z, double delta, int h) {
  require_tree_depth(z, h);
  if (h == 0)
    return 0.0;
  const double log_half = -std::log(2.0);
  std::vector<double> lg(std::size_t{1} << h, 0.0); // log g at the current level
  for (int level = h; level >= 1; --level) {
    const std::size_t first_edge = tree_edge_count(level - 1);
    const std::size_t parents = std::size_t{1} << (level - 1);
    for (std::size_t v = 0; v < parents; ++v) {
      const double a = delta * z[first_edge + 2 * v].real() + lg[2 * v];
      const double b = delta * z[first_edge + 2 * v + 1].real() + lg[2 * v + 1];
      const double m = std::max(a, b);
      lg[v] = log_half + m + std::log1p(std::exp(-std::abs(a - b)));
    }
  }
  return lg[0] - 0.5 * delta * delta * h;
}

double tree_likelihood_martingale(std::span<const cplx> z, double delta, int h) {
  return std::exp(tree_log_likelihood(z, delta, h));
}

// ---------------------------------------------------------------------------

MonteCarloEstimate mean_of_exp(const std::vector<double> &log_terms) {
  const std::size_t m = log_terms.size();
  if (m < 2)
    throw ParameterError("Monte Carlo mean needs at least two terms");
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  if (!std::isfinite(top))
    throw NumericError("non-finite log term in Monte Carlo mean");
  std::vector<double> w(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    sum += (w[i] = std::exp(log_terms[i] - top));
  const double mean = sum / m;
  // Jackknife over leave-one-out means; for a plain mean this reduces to the
  // sample standard deviation over sqrt(m).
  double ss = 0.0;
  for (double v : w)
    ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (m - 1) / m);
  const double scale = std::exp(top);
  return {mean * scale, se * scale, 1.0 / sum};
}

MonteCarloEstimate martingale_fk_monte_carlo(const PriorSampler &prior, std::span<const cplx> z,
                                             std::size_t k, std::size_t m,
                                             const RngStream &stream) {
  if (m < 2)
    throw ParameterError("f_k estimate needs m >= 2 prior draws");
  if (z.size() < k)
    throw SizeError("observation shorter than k");
  auto engine = stream.engine();
  std::vector<double> logs(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto x = prior(engine, k);
    if (x.size() < k)
      throw SizeError("prior draw shorter than k");
    double l = 0.0;
    for (std::size_t n = 0; n < k; ++n)
      l += -0.5 * std::norm(x[n]) + (std::conj(x[n]) * z[n]).real();
    logs[j] = l;
  }
  return mean_of_exp(logs);
}

double rademacher_likelihood(const Amplitude &sigma, std::span<const cplx> z, std::size_t k) {
  if (z.size() < k)
    throw SizeError("observation shorter than k");
  double log_f = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double s = sigma(static_cast<std::int64_t>(i) + 1);
    const double a = std::abs(s * z[i].real());
    // log cosh(a) = a + log1p(e^{-2a}) - log 2
    log_f += -0.5 * s * s + a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
  }
  return std::exp(log_f);
}

PriorSampler rademacher_prior(Amplitude sigma) {
  return [sigma = std::move(sigma)](std::mt19937_64 &eng, std::size_t k) {
    std::vector<cplx> x(k);
    for (std::size_t i = 0; i < k; ++i) {
      const int eps = (eng() >> 63) ? 1 : -1;
      x[i] = sigma(static_cast<std::int64_t>(i) + 1) * eps;
    }
    return x;
  };
}

PriorSampler tree_path_prior(double delta, int depth) {
  return [delta, depth](std::mt19937_64 &eng, std::size_t k) {
    std::vector<cplx> x(k);
    std::size_t node = 0;
    for (int level = 0; level < depth; ++level) {
      const std::size_t edge = 2 * node + ((eng() >> 63) ? 1 : 0);
      if (edge < k)
        x[edge] = delta;
      node = edge + 1;
    }
    return x;
  };
}

PriorSampler point_mass_prior(std::vector<cplx> x) {
  return [x = std::move(x)](std::mt19937_64 &, std::size_t k) {
    if (x.size() < k)
      throw SizeError("point-mass prior shorter than k");
    return std::vector<cplx>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k));
  };
}

// ---------------------------------------------------------------------------

DetectorReport walsh_gllr_detector(const Amplitude &sigma, std::span<const cplx> z, std::size_t k) {
  if (k == 0 || !std::has_single_bit(k))
    throw ParameterError("walsh detector horizon must be a power of two");
  if (z.size() < k)
    throw SizeError("observation shorter than k");
  const int m = std::bit_width(k) - 1;
  std::vector<cplx> a(k);
  double energy = 0.0;
  for (std::size_t n = 0; n < k; ++n) {
    const double s = sigma(static_cast<std::int64_t>(n));
    a[n] = s * z[n].real();
    energy += s * s;
  }
  if (energy == 0.0)
    throw PreconditionError("zero-energy walsh amplitudes");
  // Rows of the Hadamard matrix are the sign patterns, up to a permutation.
  const auto corr = walsh_analysis(2, m, a);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto &c : corr)
    best = std::max(best, c.real());
  DetectorReport report;
  report.rule = "max pattern correlation - energy/2 >= 0";
  report.trajectory.emplace_back(k, best - 0.5 * energy);
  report.verdict = best - 0.5 * energy >= 0.0 ? Verdict::signal : Verdict::noise;
  return report;
}

DetectorReport shell_energy_detector(std::span<const cplx> z, std::size_t n,
                                     std::optional<double> margin) {
  if (n == 0)
    throw ParameterError("shell detector needs N > 0");
  if (z.size() < n)
    throw SizeError("observation shorter than N");
  const double m = margin.value_or(3.0 / std::sqrt(static_cast<double>(n)));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += z[i].real() * z[i].real();
  const double mean = s / static_cast<double>(n);
  DetectorReport report;
  report.rule = "mean square > 1 + " + std::to_string(m);
  report.trajectory.emplace_back(n, mean);
  report.verdict = mean > 1.0 + m ? Verdict::signal : Verdict::noise;
  return report;
}

} // namespace sigdet
