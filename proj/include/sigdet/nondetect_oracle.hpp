#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sigdet/core.hpp"
#include "sigdet/detectors.hpp"
#include "sigdet/noise_channel.hpp"
#include "sigdet/signal_model.hpp"

namespace sigdet {

enum class MomentMethod { monte_carlo, closed_form, exact_sum };

const char *to_string(MomentMethod m);

/// E exp(Re sum_{n<k} x_n conj(y_n)) for independent prior draws x, y.
/// std_error is zero unless the value was estimated by Monte Carlo.
struct MomentEstimate {
  std::size_t k = 0;
  double value = 0.0;
  double std_error = 0.0;
  MomentMethod method = MomentMethod::closed_form;
  double max_term_share = 0.0; // monte carlo only
};

/// Monte Carlo over m_pairs independent prior pairs.
MomentEstimate second_moment(const PriorSampler &prior, std::size_t k, std::size_t m_pairs,
                             const RngStream &stream);

/// prod_{n=1..k} cosh(sigma_n^2).
MomentEstimate rademacher_second_moment_exact(const Amplitude &sigma, std::size_t k);

/// E exp(delta^2 min(N, h)) where N is the number of shared edges of two
/// independent uniform root paths:
///   sum_{i<h} 2^-(i+1) e^{delta^2 i} + 2^-h e^{delta^2 h}.
MomentEstimate tree_overlap_moment(double delta, int h);

struct QuadratureSpec {
  double lower = -20.0;
  double upper = 20.0;
  double tolerance = 1e-12; // relative
  unsigned max_depth = 20;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// integral of f(z - x) f(z - y) / f(z) dz over the quadrature window,
/// adaptive 61-point Gauss-Kronrod. NumericError (with the residual) if the
/// error estimate stays above tolerance or f is not positive on the window.
QuadratureResult general_noise_overlap(const std::function<double(double)> &density, double x,
                                       double y, const QuadratureSpec &quad = {});

/// Standard normal density.
double gaussian_density(double z);

/// Smallest delta with overlap(delta, delta) = 2 under the given density, by
/// bisection on [0, upper]. For the Gaussian this is sqrt(log 2).
double overlap_threshold(const std::function<double(double)> &density, double upper = 2.0,
                         const QuadratureSpec &quad = {});

struct DivergenceRow {
  std::size_t horizon = 0;
  double partial_sum = 0.0;
};

/// sum_{n<horizon} |x(n)|^2 at each horizon (increasing). x is called with
/// 0-based coordinates.
std::vector<DivergenceRow> l2_divergence_report(const std::function<cplx(std::size_t)> &x,
                                                const std::vector<std::size_t> &horizons);

/// Z_0, ..., Z_k of the shared-interval process of two independent random
/// Cantor constructions, simulated directly: each shared interval has as many
/// shared children as the intersection of two uniform p-subsets of q digits.
std::vector<std::uint64_t> sample_overlap_process(int q, int p, int k, const RngStream &stream);

/// Monte Carlo E exp(W_k), W_k = Z_k / (p^2/q)^k, over `pairs` draws.
MomentEstimate gw_exp_moment(int q, int p, int k, std::size_t pairs, const RngStream &stream);

} // namespace sigdet
