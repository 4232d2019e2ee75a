#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigdet {

using cplx = std::complex<double>;

enum class ScalarField { real, complex };

const char *to_string(ScalarField field);

/// A finite prefix of a signal or observation. Real-field values keep a zero
/// imaginary part so every statistic can be written once over complex scalars.
struct Signal {
  ScalarField field = ScalarField::real;
  std::vector<cplx> values;

  std::size_t size() const { return values.size(); }
};

// Error taxonomy. The CLI maps ValidationError to exit code 2 and every other
// sigdet::Error to exit code 3.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
public:
  using Error::Error;
};

class SizeError : public Error {
public:
  using Error::Error;
};

class FieldError : public Error {
public:
  using Error::Error;
};

class PreconditionError : public Error {
public:
  using Error::Error;
};

class NumericError : public Error {
public:
  using Error::Error;
};

class UnsupportedError : public Error {
public:
  using Error::Error;
};

// A sweep range that does not bracket the requested crossing.
class RangeError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// log(sum(exp(v))) without overflow; returns -inf for an empty input.
double log_sum_exp(const std::vector<double> &v);

// Standard normal density and upper tail.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);

} // namespace sigdet
