#include "sigdet/nondetect_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace sigdet {

const char *to_string(MomentMethod m) {
  switch (m) {
  case MomentMethod::monte_carlo:
    return "monte_carlo";
  case MomentMethod::closed_form:
    return "closed_form";
  case MomentMethod::exact_sum:
    return "exact_sum";
  }
  return "?";
}

MomentEstimate second_moment(const PriorSampler &prior, std::size_t k, std::size_t m_pairs,
                             const RngStream &stream) {
  if (m_pairs < 2)
    throw ParameterError("second_moment needs at least two prior pairs");
  auto eng = stream.engine();
  std::vector<double> logs(m_pairs);
  for (auto &l : logs) {
    const auto x = prior(eng, k);
    const auto y = prior(eng, k);
    double s = 0.0;
    for (std::size_t n = 0; n < k; ++n)
      s += (x[n] * std::conj(y[n])).real();
    l = s;
  }
  const auto mc = mean_of_exp(logs);
  MomentEstimate out{k, mc.estimate, mc.std_error, MomentMethod::monte_carlo, mc.max_term_share};
  // A degenerate prior gives identical terms; report it as exact.
  if (std::all_of(logs.begin(), logs.end(), [&](double v) { return v == logs.front(); })) {
    out.std_error = 0.0;
    out.value = std::exp(logs.front());
  }
  return out;
}

MomentEstimate rademacher_second_moment_exact(const Amplitude &sigma, std::size_t k) {
  // log cosh keeps long products finite.
  double log_value = 0.0;
  for (std::size_t n = 1; n <= k; ++n) {
    const double s = sigma(static_cast<std::int64_t>(n));
    const double s2 = s * s;
    log_value += s2 + std::log1p(std::exp(-2.0 * s2)) - std::log(2.0);
  }
  return {k, std::exp(log_value), 0.0, MomentMethod::closed_form};
}

MomentEstimate tree_overlap_moment(double delta, int h) {
  if (delta < 0.0)
    throw ParameterError("delta must be nonnegative");
  if (h < 0)
    throw ParameterError("depth must be nonnegative");
  const double d2 = delta * delta;
  double v = 0.0;
  for (int i = 0; i < h; ++i)
    v += std::exp(d2 * i - (i + 1) * std::log(2.0));
  v += std::exp(d2 * h - h * std::log(2.0));
  return {static_cast<std::size_t>(h), v, 0.0, MomentMethod::exact_sum};
}

double gaussian_density(double z) { return normal_pdf(z); }

QuadratureResult general_noise_overlap(const std::function<double(double)> &density, double x,
                                       double y, const QuadratureSpec &quad) {
  if (!(quad.lower < quad.upper))
    throw ParameterError("quadrature window is empty");
  bool bad = false;
  auto integrand = [&](double z) {
    const double fz = density(z);
    if (!(fz > 0.0)) {
      bad = true;
      return 0.0;
    }
    return density(z - x) * density(z - y) / fz;
  };
  QuadratureResult r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, quad.lower, quad.upper, quad.max_depth, quad.tolerance, &r.error_estimate);
  if (bad)
    throw NumericError("density is not positive on the quadrature window");
  if (!std::isfinite(r.value) || r.error_estimate > 1e3 * quad.tolerance * std::max(1.0, std::abs(r.value)))
    throw NumericError("overlap quadrature did not converge, residual estimate " +
                       std::to_string(r.error_estimate));
  return r;
}

double overlap_threshold(const std::function<double(double)> &density, double upper,
                         const QuadratureSpec &quad) {
  auto g = [&](double d) { return general_noise_overlap(density, d, d, quad).value - 2.0; };
  double lo = 0.0, hi = upper;
  if (g(hi) < 0.0)
    throw NumericError("overlap stays below 2 on the bracket");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<DivergenceRow> l2_divergence_report(const std::function<cplx(std::size_t)> &x,
                                                const std::vector<std::size_t> &horizons) {
  if (!std::is_sorted(horizons.begin(), horizons.end()))
    throw ParameterError("horizons must be non-decreasing");
  std::vector<DivergenceRow> rows;
  long double sum = 0.0L;
  std::size_t n = 0;
  for (auto h : horizons) {
    for (; n < h; ++n)
      sum += std::norm(x(n));
    rows.push_back({h, static_cast<double>(sum)});
  }
  return rows;
}

std::vector<std::uint64_t> sample_overlap_process(int q, int p, int k, const RngStream &stream) {
  if (!(2 <= p && p < q))
    throw ParameterError("overlap process requires 2 <= p < q");
  if (k < 0)
    throw ParameterError("k must be nonnegative");
  auto eng = stream.engine();
  std::vector<int> digits(q), a(p), b(p), common;
  std::iota(digits.begin(), digits.end(), 0);
  std::vector<std::uint64_t> z{1};
  for (int level = 1; level <= k; ++level) {
    std::uint64_t next = 0;
    for (std::uint64_t i = 0; i < z.back(); ++i) {
      std::sample(digits.begin(), digits.end(), a.begin(), p, eng);
      std::sample(digits.begin(), digits.end(), b.begin(), p, eng);
      common.clear();
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      next += common.size();
    }
    z.push_back(next);
  }
  return z;
}

MomentEstimate gw_exp_moment(int q, int p, int k, std::size_t pairs, const RngStream &stream) {
  if (pairs < 2)
    throw ParameterError("need at least two pairs");
  const double scale = std::pow(static_cast<double>(p * p) / q, k);
  std::vector<double> logs(pairs);
  for (std::size_t i = 0; i < pairs; ++i)
    logs[i] = static_cast<double>(sample_overlap_process(q, p, k, stream.fork(i)).back()) / scale;
  const auto mc = mean_of_exp(logs);
  return {static_cast<std::size_t>(k), mc.estimate, mc.std_error, MomentMethod::monte_carlo,
          mc.max_term_share};
}

} // namespace sigdet
