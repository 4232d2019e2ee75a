#include "sigdet/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sigdet {

const char *to_string(ScalarField field) {
  return field == ScalarField::real ? "real" : "complex";
}

double log_sum_exp(const std::vector<double> &v) {
  if (v.empty())
    return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m))
    return m;
  double s = 0.0;
  for (double x : v)
    s += std::exp(x - m);
  return m + std::log(s);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

} // namespace sigdet
