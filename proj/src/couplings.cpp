#include "sigdet/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sigdet {

namespace {

double flip_energy(double t) {
  return 4.0 * (2.0 * normal_cdf(t) - 1.0 - 2.0 * t * normal_pdf(t));
}

} // namespace

double solve_flip_threshold(double c) {
  if (!(c >= 0.0 && c <= 2.0))
    throw ParameterError("c must lie in [0, 2]");
  if (c == 0.0)
    return 0.0;
  if (c == 2.0)
    return kFlipAlways;
  const double target = c * c;
  double lo = 0.0, hi = 1.0;
  while (flip_energy(hi) < target)
    hi *= 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (flip_energy(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<CoupledPair> sample_uniform_detection_coupling(double c, std::size_t n,
                                                           const RngStream &stream) {
  const double t = solve_flip_threshold(c);
  auto eng = stream.engine();
  std::normal_distribution<double> g;
  std::vector<CoupledPair> out(n);
  for (auto &pr : out) {
    pr.xi1 = g(eng);
    pr.xi2 = std::abs(pr.xi1) < t ? -pr.xi1 : pr.xi1;
  }
  return out;
}

double max_partial_recovery_p() { return 4.0 * normal_pdf(2.0); }

std::vector<CoupledQuad> sample_partial_recovery_coupling(double p, std::size_t n,
                                                          const RngStream &stream) {
  if (!(p > 0.0 && p <= max_partial_recovery_p()))
    throw ParameterError("p must lie in (0, 4 phi(2)]");
  auto eng = stream.engine();
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5), indicator(p);
  auto sign = [&] { return coin(eng) ? 1 : -1; };
  auto residual = [&] {
    for (;;) {
      const double x = g(eng);
      if (std::abs(x) >= 2.0 || unit(eng) < 1.0 - (p / 4.0) / normal_pdf(x))
        return x;
    }
  };
  std::vector<CoupledQuad> out(n);
  for (auto &q : out) {
    const int z1 = sign(), z2 = sign(), z3 = sign();
    const double u = std::ldexp(static_cast<double>(eng() >> 11), -52) - 1.0;
    if (indicator(eng)) {
      q = {z1, z2, z2 + u, z1 + u};
    } else {
      const double w = residual();
      q = {z3, z3, w, w};
    }
  }
  return out;
}

double besicovitch_distance(std::span<const cplx> x, std::span<const cplx> y, std::size_t n) {
  if (n == 0)
    throw ParameterError("besicovitch distance needs N >= 1");
  if (x.size() < n || y.size() < n)
    throw SizeError("sequences shorter than N");
  long double s = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    s += std::norm(x[i] - y[i]);
  return std::sqrt(static_cast<double>(s / n));
}

double ks_statistic_normal(std::vector<double> sample) {
  if (sample.empty())
    throw ParameterError("empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

} // namespace sigdet
