#include "sigdet/recoverers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

#include <fftw3.h>

namespace sigdet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t default_burn_in(const CheckpointSchedule &s) { return s.size() / 2; }

// FFTW planning is not thread-safe; execution is.
std::mutex &fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// RAII wrapper for a one-shot complex FFT.
class Fft {
public:
  Fft(std::size_t n, int sign) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, sign, FFTW_ESTIMATE);
    if (!plan_)
      throw NumericError("fftw plan creation failed");
  }
  ~Fft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  Fft(const Fft &) = delete;
  Fft &operator=(const Fft &) = delete;

  std::vector<cplx> run(const std::vector<cplx> &input) {
    for (std::size_t i = 0; i < n_; ++i) {
      const cplx v = i < input.size() ? input[i] : cplx{};
      in_[i][0] = v.real();
      in_[i][1] = v.imag();
    }
    fftw_execute(plan_);
    std::vector<cplx> out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      out[i] = {out_[i][0], out_[i][1]};
    return out;
  }

private:
  std::size_t n_;
  fftw_complex *in_ = nullptr;
  fftw_complex *out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

// Real in-place Walsh-Hadamard transform: out[b] = sum_n a[n] (-1)^popcount(n & b).
void fwht(std::vector<double> &a) {
  for (std::size_t len = 1; len < a.size(); len <<= 1)
    for (std::size_t i = 0; i < a.size(); i += 2 * len)
      for (std::size_t j = i; j < i + len; ++j) {
        const double u = a[j], v = a[j + len];
        a[j] = u + v;
        a[j + len] = u - v;
      }
}

} // namespace

// ---------------------------------------------------------------------------

RecoveryReport candidate_recovery(const std::vector<Candidate> &grid, std::span<const cplx> z,
                                  const CheckpointSchedule &schedule,
                                  std::optional<std::size_t> burn_in_index) {
  if (grid.empty())
    throw ParameterError("candidate recovery needs a nonempty grid");
  if (z.size() < schedule.back())
    throw SizeError("observation shorter than the final checkpoint");
  for (const auto &c : grid)
    if (c.signal.size() < schedule.back())
      throw SizeError("candidate shorter than the final checkpoint");

  const auto &cps = schedule.checkpoints();
  const std::size_t burn_in = burn_in_index.value_or(default_burn_in(schedule));
  std::vector<double> score(grid.size(), 0.0);
  std::size_t n = 0;
  RecoveryReport report;
  bool stable = true;
  std::size_t final_best = 0;
  bool tie = false;
  for (std::size_t c = 0; c < cps.size(); ++c) {
    for (std::size_t g = 0; g < grid.size(); ++g)
      for (std::size_t i = n; i < cps[c]; ++i)
        score[g] -= std::norm(z[i] - grid[g].signal.values[i]);
    n = cps[c];

    std::size_t best = 0;
    double runner = -kInf;
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (score[g] > score[best]) {
        runner = score[best];
        best = g;
      } else {
        runner = std::max(runner, score[g]);
      }
    }
    report.trajectory.push_back({cps[c], best, score[best], runner});
    if (c + 1 == cps.size()) {
      final_best = best;
      tie = grid.size() > 1 && runner == score[best];
    }
  }
  for (std::size_t c = burn_in; c < cps.size(); ++c)
    if (report.trajectory[c].best_index != final_best)
      stable = false;

  const auto &last = report.trajectory.back();
  report.score_margin = grid.size() > 1 ? last.best_score - last.runner_up_score : kInf;
  if (tie) {
    report.diagnostic = "tie at final checkpoint";
  } else if (!stable) {
    report.diagnostic = "argmax changed after burn-in";
  } else {
    report.recovered = grid[final_best].params;
  }
  return report;
}

// ---------------------------------------------------------------------------

RecoveryReport walsh_recovery(const Amplitude &sigma, std::span<const cplx> z, std::size_t k,
                              std::size_t num_bits, const WalshRecoveryOptions &options) {
  if (k == 0 || !std::has_single_bit(k))
    throw ParameterError("walsh recovery horizon must be a power of two");
  if (num_bits == 0 || num_bits > 62 || (std::size_t{1} << num_bits) > k)
    throw SizeError("num_bits too large for the horizon");
  if (z.size() < k)
    throw SizeError("observation shorter than the horizon");

  const std::size_t used =
      options.mode == WalshRecoveryOptions::Mode::full ? k : (std::size_t{1} << num_bits);
  double energy = 0.0, prev = kInf;
  for (std::size_t n = 0; n < used; ++n) {
    const double s = std::abs(sigma(static_cast<std::int64_t>(n)));
    if (s > prev)
      throw ParameterError("walsh recovery requires non-increasing |sigma_n|");
    prev = s;
    energy += s * s;
  }
  if (energy == 0.0)
    throw PreconditionError("degenerate walsh space: sigma vanishes on the horizon");

  // Checkpoints 2^j from 2^num_bits up to `used`.
  std::vector<std::size_t> cps;
  for (std::size_t c = std::size_t{1} << num_bits; c <= used; c <<= 1)
    cps.push_back(c);
  const std::size_t burn_in = options.burn_in_index.value_or(cps.size() / 2);
  const std::size_t low_mask = (std::size_t{1} << num_bits) - 1;

  RecoveryReport report;
  std::size_t final_low = 0;
  double final_margin = 0.0;
  for (std::size_t c = 0; c < cps.size(); ++c) {
    // Correlation with every sign pattern b (eps_j = -1 iff bit j of b set):
    // sum_n sigma_n chi_b(n) Re z_n. Distances differ by -2 * correlation.
    std::vector<double> a(cps[c]);
    for (std::size_t n = 0; n < cps[c]; ++n)
      a[n] = sigma(static_cast<std::int64_t>(n)) * z[n].real();
    fwht(a);
    std::size_t best = 0;
    for (std::size_t b = 1; b < a.size(); ++b)
      if (a[b] > a[best])
        best = b;
    double runner = -kInf;
    for (std::size_t b = 0; b < a.size(); ++b)
      if ((b & low_mask) != (best & low_mask))
        runner = std::max(runner, a[b]);
    report.trajectory.push_back({cps[c], best & low_mask, 2.0 * a[best], 2.0 * runner});
    final_low = best & low_mask;
    final_margin = 2.0 * (a[best] - runner);
  }
  report.score_margin = final_margin;
  for (std::size_t c = burn_in; c < cps.size(); ++c)
    if (report.trajectory[c].best_index != final_low) {
      report.diagnostic = "low bits changed after burn-in";
      return report;
    }
  params::WalshSigns signs;
  for (std::size_t j = 0; j < num_bits; ++j)
    signs.eps.push_back((final_low >> j) & 1U ? -1 : 1);
  report.recovered = SignalParams{signs};
  return report;
}

// ---------------------------------------------------------------------------

double circle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 1.0);
  return std::min(d, 1.0 - d);
}

namespace {

// Re sum_{|n|<k} sigma_n z_n exp(-2 pi i n t), evaluated directly.
double trig_score(const std::vector<cplx> &weighted, const std::vector<std::int64_t> &ns,
                  double t) {
  double s = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const long double turns = static_cast<long double>(ns[i]) * t;
    const double angle =
        -static_cast<double>((turns - std::floor(turns)) * 2.0L * static_cast<long double>(kPi));
    s += weighted[i].real() * std::cos(angle) - weighted[i].imag() * std::sin(angle);
  }
  return s;
}

} // namespace

RecoveryReport trig_recovery(const Amplitude &sigma, std::span<const cplx> z, std::size_t k,
                             std::size_t grid_size, int refine_rounds,
                             const TrigRecoveryOptions &options) {
  if (grid_size < 2)
    throw ParameterError("trig recovery needs grid_size >= 2");
  if (k < 2)
    throw ParameterError("trig recovery needs k >= 2");
  if (refine_rounds < 0 || options.refine_points < 1)
    throw ParameterError("invalid refinement settings");
  const std::size_t count = 2 * k - 1; // |n| < k in the integer enumeration
  if (z.size() < count)
    throw SizeError("observation does not cover |n| < k");

  std::vector<cplx> weighted(count);
  std::vector<std::int64_t> ns(count);
  double energy = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    ns[i] = integer_at(i);
    const double s = sigma(ns[i]);
    weighted[i] = s * z[i];
    energy += s * s;
  }
  if (energy / std::log(static_cast<double>(k)) <= options.min_energy_ratio)
    throw PreconditionError("sum sigma^2 / log k below the configured recovery factor");

  // Grid scores through one FFT: fold coefficients by n mod G.
  std::vector<cplx> folded(grid_size);
  const auto g = static_cast<std::int64_t>(grid_size);
  for (std::size_t i = 0; i < count; ++i)
    folded[static_cast<std::size_t>(((ns[i] % g) + g) % g)] += weighted[i];
  Fft fft(grid_size, FFTW_FORWARD);
  const auto spectrum = fft.run(folded);

  std::size_t best = 0;
  for (std::size_t j = 1; j < grid_size; ++j)
    if (spectrum[j].real() > spectrum[best].real())
      best = j;
  // Runner-up: best grid score at least two grid steps away from the winner.
  double runner = -kInf;
  for (std::size_t j = 0; j < grid_size; ++j) {
    const std::size_t dj = j > best ? j - best : best - j;
    if (std::min(dj, grid_size - dj) >= 2)
      runner = std::max(runner, spectrum[j].real());
  }

  RecoveryReport report;
  double t = static_cast<double>(best) / static_cast<double>(grid_size);
  double score = trig_score(weighted, ns, t);
  report.trajectory.push_back({grid_size, best, 2.0 * score, 2.0 * runner});
  double step = 1.0 / static_cast<double>(grid_size);
  const int r = options.refine_points;
  for (int round = 0; round < refine_rounds; ++round) {
    const double h = step / r;
    double best_t = t, best_s = score;
    for (int i = -r; i <= r; ++i) {
      if (i == 0)
        continue;
      double cand = t + i * h;
      cand -= std::floor(cand);
      const double s = trig_score(weighted, ns, cand);
      if (s > best_s) {
        best_s = s;
        best_t = cand;
      }
    }
    t = best_t;
    score = best_s;
    step = h;
    report.trajectory.push_back({grid_size, static_cast<std::size_t>(round + 1), 2.0 * score,
                                 2.0 * runner});
  }
  report.score_margin = 2.0 * (score - runner);
  report.recovered = SignalParams{params::Rotation{t}};
  return report;
}

// ---------------------------------------------------------------------------

namespace {

// Max over downward paths of `levels` edges starting with `edge`.
double subtree_path_max(std::span<const cplx> z, std::size_t edge, int levels) {
  double here = z[edge].real();
  if (levels <= 1)
    return here;
  const std::size_t child = 2 * edge + 2;
  return here + std::max(subtree_path_max(z, child, levels - 1),
                         subtree_path_max(z, child + 1, levels - 1));
}

} // namespace

RecoveryReport tree_path_recovery(std::span<const cplx> z, double delta, int depth, int subdepth,
                                  int bits) {
  if (delta < 0.0)
    throw ParameterError("tree recovery needs delta >= 0");
  if (subdepth < 1 || bits < 1)
    throw ParameterError("tree recovery needs subdepth >= 1 and bits >= 1");
  if (bits > depth - subdepth)
    throw SizeError("requested path length exceeds depth - subdepth");
  if (depth > 62 || z.size() < tree_edge_count(depth))
    throw SizeError("tree observation shallower than depth");

  RecoveryReport report;
  params::TreePath path;
  std::size_t node = 0;
  double min_margin = kInf;
  for (int level = 0; level < bits; ++level) {
    const std::size_t left = 2 * node;
    const double sl = subtree_path_max(z, left, subdepth);
    const double sr = subtree_path_max(z, left + 1, subdepth);
    const bool go_right = sr > sl;
    path.bits.push_back(go_right ? 1 : 0);
    report.trajectory.push_back({static_cast<std::size_t>(level + 1), go_right ? 1u : 0u,
                                 std::max(sl, sr), std::min(sl, sr)});
    min_margin = std::min(min_margin, std::abs(sl - sr));
    node = left + (go_right ? 1 : 0) + 1;
  }
  report.score_margin = min_margin;
  report.recovered = SignalParams{path};
  return report;
}

// ---------------------------------------------------------------------------

AutocorrelationEstimate estimate_autocorrelation(const SymmetricWindow &g, std::int64_t k) {
  const std::int64_t n = g.half_width;
  if (static_cast<std::int64_t>(g.size()) != 2 * n + 1)
    throw SizeError("window size does not match its half-width");
  if (std::abs(k) >= n)
    throw SizeError("lag out of range for the window");
  cplx acc = 0.0;
  std::int64_t count = 0;
  for (std::int64_t i = -n; i <= n; ++i) {
    const std::int64_t j = i - k;
    if (j < -n || j > n)
      continue;
    acc += g.at(i) * std::conj(g.at(j));
    ++count;
  }
  return {k, acc / static_cast<double>(count), n};
}

std::vector<cplx> autocorrelation_all(const SymmetricWindow &g, std::int64_t max_lag) {
  const auto w = static_cast<std::int64_t>(g.size());
  if (w != 2 * g.half_width + 1)
    throw SizeError("window size does not match its half-width");
  if (max_lag < 0 || max_lag >= g.half_width)
    throw SizeError("lag out of range for the window");
  std::size_t len = 1;
  while (len < static_cast<std::size_t>(2 * w))
    len <<= 1;
  Fft forward(len, FFTW_FORWARD);
  auto spec = forward.run(g.values);
  for (auto &v : spec)
    v = std::norm(v);
  Fft backward(len, FFTW_BACKWARD);
  const auto corr = backward.run(spec);
  // corr[k] / len = sum_n g(n + k) conj(g(n)) over W - k overlapping pairs.
  std::vector<cplx> out(static_cast<std::size_t>(max_lag + 1));
  for (std::int64_t k = 0; k <= max_lag; ++k)
    out[static_cast<std::size_t>(k)] =
        corr[static_cast<std::size_t>(k)] / static_cast<double>(len) / static_cast<double>(w - k);
  return out;
}

AlmostPeriodicResult almost_periodic_recovery(const SymmetricWindow &z, int j_max, int m,
                                              std::int64_t search_bound,
                                              const AlmostPeriodicOptions &options) {
  if (j_max < 1 || m < 1 || search_bound < 1)
    throw ParameterError("almost-periodic recovery needs j_max, m, search_bound >= 1");
  if (search_bound >= z.half_width)
    throw SizeError("search bound does not fit inside the window");
  const auto a = autocorrelation_all(z, search_bound);
  double shift = 0.0;
  switch (options.rule) {
  case AlmostPeriodicOptions::LagRule::shifted_plus: shift = 2.0; break;
  case AlmostPeriodicOptions::LagRule::printed_minus: shift = -2.0; break;
  case AlmostPeriodicOptions::LagRule::noiseless: break;
  }

  AlmostPeriodicResult result;
  std::int64_t k = 0;
  for (int j = 1; j <= m; ++j) {
    const double tol = 1.0 / std::min(j, j_max);
    bool found = false;
    for (++k; k <= search_bound; ++k) {
      if (std::abs(a[static_cast<std::size_t>(k)] - a[0] + shift) <= tol) {
        found = true;
        break;
      }
    }
    if (!found)
      throw PreconditionError("insufficient almost periods: found " + std::to_string(j - 1) +
                              " of " + std::to_string(m) + " qualifying lags");
    result.lags.push_back(k);
  }
  cplx acc = 0.0;
  for (auto lag : result.lags)
    acc += z.at(lag);
  result.estimate = acc / static_cast<double>(m);
  return result;
}

cplx poly_phase_mean(const SymmetricWindow &z, std::span<const double> coeffs, std::int64_t n) {
  if (coeffs.empty())
    throw ParameterError("polynomial phase needs degree >= 1 (use a plain mean for d = 0)");
  if (n < 0 || n > z.half_width || static_cast<std::int64_t>(z.size()) != 2 * z.half_width + 1)
    throw SizeError("window does not cover [-N, N]");
  cplx acc = 0.0;
  for (std::int64_t i = -n; i <= n; ++i) {
    long double phase = 0.0L;
    long double power = 1.0L;
    for (double a : coeffs) {
      power *= static_cast<long double>(i);
      const long double term = static_cast<long double>(a) * power;
      phase += term - std::floor(term);
    }
    phase -= std::floor(phase);
    const double angle = -static_cast<double>(phase * 2.0L * static_cast<long double>(kPi));
    acc += z.at(i) * cplx(std::cos(angle), std::sin(angle));
  }
  return acc / static_cast<double>(2 * n + 1);
}

} // namespace sigdet
