#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sigdet/core.hpp"
#include "sigdet/noise_channel.hpp"
#include "sigdet/signal_model.hpp"

namespace sigdet {

enum class Verdict { noise, signal };

const char *to_string(Verdict v);

/// Verdict plus the statistic at every checkpoint. The verdict is a pure
/// function of the trajectory and the rule.
struct DetectorReport {
  Verdict verdict = Verdict::noise;
  std::vector<std::pair<std::size_t, double>> trajectory;
  std::string rule;

  double final_statistic() const { return trajectory.empty() ? 0.0 : trajectory.back().second; }
};

/// Strictly increasing, nonempty list of horizons N_k.
class CheckpointSchedule {
public:
  CheckpointSchedule() = default;
  explicit CheckpointSchedule(std::vector<std::size_t> checkpoints);

  /// Single checkpoint at N.
  static CheckpointSchedule single(std::size_t n);
  /// `count` checkpoints evenly spaced up to `last` (inclusive).
  static CheckpointSchedule linear(std::size_t last, std::size_t count);

  const std::vector<std::size_t> &checkpoints() const { return checkpoints_; }
  std::size_t back() const { return checkpoints_.back(); }
  std::size_t size() const { return checkpoints_.size(); }

private:
  std::vector<std::size_t> checkpoints_;
};

// ---------------------------------------------------------------------------
// Sequence detectors

/// One-point likelihood test for a fixed signal x:
///   S_N = sum_{n<=N} Re(conj(x_n) z_n - |x_n|^2 / 2),
/// verdict signal iff S > 0 at the final checkpoint.
DetectorReport llr_one_point(std::span<const cplx> x, std::span<const cplx> z,
                             const CheckpointSchedule &schedule);

/// Energy detector for Rademacher-type spaces with complex noise:
///   S_N = sum_{n<=N} s_n^2 (|z_n|^2 - (2 + s_n^2 / 2)),  s_n = min(|sigma_n|, 1),
/// over n = 1..N with z[n-1] holding coordinate n. Signal iff S >= 0 at the
/// final checkpoint.
DetectorReport energy_detector(const Amplitude &sigma, const Observation &z,
                               const CheckpointSchedule &schedule);

/// N_k = least N with sum_{n<=N} min(sigma_n,1)^4 >= k^2, k = 1..k_max.
/// SizeError if some target is not reached by max_horizon.
CheckpointSchedule build_energy_schedule(const Amplitude &sigma, std::size_t k_max,
                                         std::size_t max_horizon = std::size_t{1} << 26);

/// Finite family of candidate signals stored sparsely (zeros are skipped),
/// so tree-trail grids with thousands of paths stay cheap to score.
class CandidateSet {
public:
  CandidateSet() = default;
  explicit CandidateSet(const std::vector<Signal> &signals);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  struct Entry {
    std::vector<std::pair<std::size_t, cplx>> nonzeros; // sorted by index
    std::size_t length = 0;
  };
  const Entry &operator[](std::size_t i) const { return entries_[i]; }

  /// Product-metric distance to the zero sequence:
  ///   d(y, 0) = sum_n 2^-(n+1) min(1, |y_n|), n = 0-based coordinate.
  double distance_to_zero(std::size_t i) const;

private:
  std::vector<Entry> entries_;
};

/// Generalized likelihood test over a finite grid. Let
///   D_k(y) = sum_{n<k} (|y_n|^2 - 2 Re(conj(y_n) z_n)).
/// Verdict noise iff min over grid elements outside the neighbourhood
/// {d(y,0) < radius} of D_k is > 0 at some checkpoint with index >=
/// min_checkpoint_index; otherwise signal. The trajectory holds that minimum.
DetectorReport generalized_llr_detector(const CandidateSet &grid, std::span<const cplx> z,
                                        const CheckpointSchedule &schedule,
                                        double neighborhood_radius,
                                        std::size_t min_checkpoint_index = 0);

struct VolumeGrowthRow {
  std::size_t k = 0;
  double log_proj_count = 0.0;
  double min_energy = 0.0;
  double ratio = 0.0;
};

/// log|Proj_k(X)|, min_y sum_{n<k} |y_n|^2 and their ratio per horizon, for
/// families with finitely many values per coordinate (rademacher, walsh,
/// tree_trail and scalings of them). For tree_trail the horizons are edge
/// counts in BFS order.
std::vector<VolumeGrowthRow> volume_growth_certificate(const SpaceDescriptor &desc,
                                                       const std::vector<std::size_t> &horizons);

/// Certificate holds iff the smallest reported ratio is below 1/8.
bool certificate_holds(const std::vector<VolumeGrowthRow> &rows);

// ---------------------------------------------------------------------------
// Tree-trail detectors. A tree observation holds one value per edge in BFS
// order (see IndexSet::tree_edges); only real parts are used.

/// Depth of the complete tree stored in a tree observation.
int tree_depth_of(std::size_t edge_count);

/// max over root-to-level-h paths of the path sum, by the bottom-up
/// recursion best(node) = max over children of z(edge) + best(child).
double tree_max_path_sum(std::span<const cplx> z, int h);

struct TreeDetectorOptions {
  enum class Rule {
    // threshold min(delta h, tau_alpha(h)), tau_alpha from 2^h Phibar(tau/sqrt h) = alpha
    union_bound,
    // threshold delta h
    plain,
  };
  Rule rule = Rule::union_bound;
  double alpha = 0.05;
};

/// Level of the union bound: tau with 2^h * P(N(0,h) >= tau) = alpha.
double tree_union_bound_threshold(int h, double alpha);

/// Max-path detector. Trajectory: (h, max path sum) for each requested depth;
/// verdict from the final depth.
DetectorReport tree_max_path_detector(std::span<const cplx> z, double delta,
                                      const std::vector<int> &depths,
                                      const TreeDetectorOptions &options = {});

/// log f_h with f_h = exp(-delta^2 h / 2) * mean over level-h paths of
/// exp(delta * S_{p,h}(z)); exact, O(2^h), computed in log space.
double tree_log_likelihood(std::span<const cplx> z, double delta, int h);

/// exp(tree_log_likelihood(z, delta, h)).
double tree_likelihood_martingale(std::span<const cplx> z, double delta, int h);

// ---------------------------------------------------------------------------
// Likelihood martingale f_k

/// Draws a signal prefix of length k from a prior.
using PriorSampler = std::function<std::vector<cplx>(std::mt19937_64 &, std::size_t k)>;

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  // Largest single term divided by the sum of terms; near 1 flags a run
  // dominated by one draw.
  double max_term_share = 0.0;
};

/// Jackknife mean of exp(log_terms) computed in scaled (log-sum-exp) form.
MonteCarloEstimate mean_of_exp(const std::vector<double> &log_terms);

/// f_k(z) = E_x exp(sum_{n<k} (-|x_n|^2/2 + Re(conj(x_n) z_n))) estimated
/// from m prior draws.
MonteCarloEstimate martingale_fk_monte_carlo(const PriorSampler &prior, std::span<const cplx> z,
                                             std::size_t k, std::size_t m,
                                             const RngStream &stream);

/// Exact f_k for the Rademacher prior with real amplitudes sigma_n (n = 1..k):
///   prod_n exp(-sigma_n^2 / 2) cosh(sigma_n Re z_n).
double rademacher_likelihood(const Amplitude &sigma, std::span<const cplx> z, std::size_t k);

/// Priors used across modules.
PriorSampler rademacher_prior(Amplitude sigma);
PriorSampler tree_path_prior(double delta, int depth);
PriorSampler point_mass_prior(std::vector<cplx> x);

/// Generalized likelihood test over the 2^m Walsh sign patterns of a Walsh
/// space at k = 2^m: signal iff max over patterns of
/// sum_{n<k} sigma_n w_n Re z_n >= (1/2) sum_{n<k} sigma_n^2. One fast
/// Walsh-Hadamard transform per call.
DetectorReport walsh_gllr_detector(const Amplitude &sigma, std::span<const cplx> z, std::size_t k);

// ---------------------------------------------------------------------------

/// Signal iff (1/N) sum_{n<N} |z_n|^2 > 1 + margin; default margin 3/sqrt(N).
DetectorReport shell_energy_detector(std::span<const cplx> z, std::size_t n,
                                     std::optional<double> margin = std::nullopt);

} // namespace sigdet
