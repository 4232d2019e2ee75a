#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigdet/core.hpp"
#include "sigdet/detectors.hpp"
#include "sigdet/signal_model.hpp"

namespace sigdet {

struct RecoveryCheckpoint {
  std::size_t checkpoint = 0;
  std::size_t best_index = 0; // grid index, or pattern / step number
  double best_score = 0.0;
  double runner_up_score = 0.0;
};

/// Recovered parameter (none when the decision rule was not met), the score
/// gap to the runner-up, and per-checkpoint diagnostics.
struct RecoveryReport {
  std::optional<SignalParams> recovered;
  double score_margin = 0.0;
  std::vector<RecoveryCheckpoint> trajectory;
  std::string diagnostic;
};

struct Candidate {
  SignalParams params;
  Signal signal;
};

/// Scores f_k(x, z) = -sum_{n<k} |z_n - x_n|^2. Recovers the argmax at the
/// final checkpoint if it is also the argmax at every checkpoint from
/// `burn_in_index` on (default: half the schedule). Exact ties at the final
/// checkpoint give no recovery.
RecoveryReport candidate_recovery(const std::vector<Candidate> &grid, std::span<const cplx> z,
                                  const CheckpointSchedule &schedule,
                                  std::optional<std::size_t> burn_in_index = std::nullopt);

struct WalshRecoveryOptions {
  enum class Mode {
    // Fast Walsh-Hadamard search over all 2^log2(k) sign patterns using every
    // index n < k; the first num_bits bits are reported.
    full,
    // Search over 2^num_bits patterns using only indices n < 2^num_bits.
    restricted,
  };
  Mode mode = Mode::full;
  std::optional<std::size_t> burn_in_index;
};

/// Recovers eps_0 .. eps_{num_bits-1} of a Walsh-space signal with
/// non-increasing |sigma_n| (n = 0, 1, ...). z[n] is coordinate n, k is a
/// power of two.
RecoveryReport walsh_recovery(const Amplitude &sigma, std::span<const cplx> z, std::size_t k,
                              std::size_t num_bits, const WalshRecoveryOptions &options = {});

struct TrigRecoveryOptions {
  // Precondition: sum_{|n|<k} sigma_n^2 / log k must exceed this factor.
  double min_energy_ratio = 1.0;
  // Points on each side of the incumbent in one refinement round.
  int refine_points = 8;
};

/// Recovers the rotation t in [0,1) of a trigonometric-space signal. z holds
/// the integer enumeration 0, 1, -1, 2, -2, ... and indices |n| < k are used.
/// Grid search over t = j / grid_size followed by refine_rounds rounds of
/// local subdivision.
RecoveryReport trig_recovery(const Amplitude &sigma, std::span<const cplx> z, std::size_t k,
                             std::size_t grid_size, int refine_rounds,
                             const TrigRecoveryOptions &options = {});

/// Distance on the circle R/Z.
double circle_distance(double a, double b);

/// Recovers the first `bits` edges of a tree-trail path: at each node the
/// child whose subtree (explored `subdepth` levels, counting the child edge)
/// has the larger max-path sum is taken.
RecoveryReport tree_path_recovery(std::span<const cplx> z, double delta, int depth,
                                  int subdepth, int bits);

// ---------------------------------------------------------------------------
// Sequences on Z

/// Samples g(n) for |n| <= half_width; values[n + half_width] holds g(n).
struct SymmetricWindow {
  std::int64_t half_width = 0;
  std::vector<cplx> values;

  cplx at(std::int64_t n) const { return values[static_cast<std::size_t>(n + half_width)]; }
  std::size_t size() const { return values.size(); }
};

/// Build a window by evaluating f on [-half_width, half_width].
template <class F> SymmetricWindow make_window(std::int64_t half_width, F &&f) {
  SymmetricWindow w;
  w.half_width = half_width;
  w.values.reserve(static_cast<std::size_t>(2 * half_width + 1));
  for (std::int64_t n = -half_width; n <= half_width; ++n)
    w.values.push_back(f(n));
  return w;
}

struct AutocorrelationEstimate {
  std::int64_t lag = 0;
  cplx value;
  std::int64_t window = 0; // half-width N
};

/// Mean of g(n) conj(g(n - k)) over the n with both n and n - k inside the window.
AutocorrelationEstimate estimate_autocorrelation(const SymmetricWindow &g, std::int64_t k);

/// Same estimate for every lag 0..max_lag, via FFT.
std::vector<cplx> autocorrelation_all(const SymmetricWindow &g, std::int64_t max_lag);

struct AlmostPeriodicOptions {
  enum class LagRule {
    // |A_k - A_0 + 2| <= 1/j: the noise shift A_0(f + xi) = A_0(f) + 2 removed
    shifted_plus,
    // |A_k - A_0 - 2| <= 1/j as printed
    printed_minus,
    // |A_k - A_0| <= 1/j, for noise-free input
    noiseless,
  };
  LagRule rule = LagRule::shifted_plus;
};

struct AlmostPeriodicResult {
  cplx estimate;
  std::vector<std::int64_t> lags; // L_1 < L_2 < ... < L_m
};

/// Estimates f(0) from z = f + xi: qualifying lags L_j satisfy the lag rule
/// with tolerance 1/min(j, j_max); the estimate is the mean of z(L_j) over
/// the first m of them, searching lags up to search_bound.
AlmostPeriodicResult almost_periodic_recovery(const SymmetricWindow &z, int j_max, int m,
                                              std::int64_t search_bound,
                                              const AlmostPeriodicOptions &options = {});

/// M_N = (1/(2N+1)) sum_{|n|<=N} z(n) exp(-2 pi i p(n)), p(n) = sum_j a_j n^j
/// with coeffs = (a_1, ..., a_d). Phases are reduced mod 1 in long double.
cplx poly_phase_mean(const SymmetricWindow &z, std::span<const double> coeffs, std::int64_t n);

} // namespace sigdet
