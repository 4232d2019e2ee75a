#pragma once

#include <limits>
#include <span>
#include <vector>

#include "sigdet/core.hpp"
#include "sigdet/noise_channel.hpp"

namespace sigdet {

/// Two standard normals with xi2 = -xi1 on |xi1| < t(c) and xi2 = xi1 otherwise.
struct CoupledPair {
  double xi1 = 0.0;
  double xi2 = 0.0;
};

/// y1 + xi1 == y2 + xi2 exactly (bitwise).
struct CoupledQuad {
  int y1 = 1;
  int y2 = 1;
  double xi1 = 0.0;
  double xi2 = 0.0;
};

/// Full flip (c = 2).
inline constexpr double kFlipAlways = std::numeric_limits<double>::infinity();

/// t >= 0 with E[(2Z)^2; |Z| < t] = c^2, i.e. 4(2 Phi(t) - 1 - 2 t phi(t)) = c^2,
/// by bisection to 1e-10. Returns kFlipAlways at c = 2.
double solve_flip_threshold(double c);

std::vector<CoupledPair> sample_uniform_detection_coupling(double c, std::size_t n,
                                                           const RngStream &stream);

/// Largest p keeping the residual density (phi - (p/4) 1_(-2,2)) / (1 - p) nonnegative.
double max_partial_recovery_p();

/// Y1 = I Z1 + (1-I) Z3, Y2 = I Z2 + (1-I) Z3, xi1 = I (Z2 + U) + (1-I) W,
/// xi2 = I (Z1 + U) + (1-I) W with Z uniform +-1, U uniform [-1,1), W from
/// the residual density, I ~ Bernoulli(p). U lives on the grid 2^-52 Z so
/// every sum above is exact.
std::vector<CoupledQuad> sample_partial_recovery_coupling(double p, std::size_t n,
                                                          const RngStream &stream);

/// sqrt((1/N) sum_{n<N} |x_n - y_n|^2).
double besicovitch_distance(std::span<const cplx> x, std::span<const cplx> y, std::size_t n);

/// Two-sided Kolmogorov-Smirnov statistic of a sample against N(0,1).
double ks_statistic_normal(std::vector<double> sample);

/// Asymptotic 1% critical value 1.6276 / sqrt(n).
double ks_critical_1pct(std::size_t n);

} // namespace sigdet
