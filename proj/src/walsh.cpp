#include "sigdet/walsh.hpp"

#include <cmath>
#include <limits>

namespace sigdet {

namespace {

cplx unit_root(int q, std::uint64_t m) {
  const double angle = kTwoPi * static_cast<double>(m % static_cast<std::uint64_t>(q)) / q;
  return {std::cos(angle), std::sin(angle)};
}

// Reverses the order of the s base-q digits of x.
std::uint64_t digit_reverse(std::uint64_t x, int q, int s) {
  std::uint64_t r = 0;
  for (int i = 0; i < s; ++i) {
    r = r * q + x % q;
    x /= q;
  }
  return r;
}

// In-place q-point DFT along every digit axis. sign = -1 gives conj(w_k).
void transform_axes(std::vector<cplx> &a, int q, int sign) {
  std::vector<cplx> roots(q);
  for (int m = 0; m < q; ++m) {
    const cplx r = unit_root(q, m);
    roots[m] = sign < 0 ? std::conj(r) : r;
  }
  std::vector<cplx> buf(q);
  const std::uint64_t n = a.size();
  for (std::uint64_t stride = 1; stride < n; stride *= q) {
    const std::uint64_t block = stride * q;
    for (std::uint64_t base = 0; base < n; base += block) {
      for (std::uint64_t off = 0; off < stride; ++off) {
        if (q == 2) {
          cplx &u = a[base + off];
          cplx &v = a[base + off + stride];
          const cplx x = u;
          u = x + v;
          v = x - v;
          continue;
        }
        for (int k = 0; k < q; ++k) {
          cplx acc = 0.0;
          for (int t = 0; t < q; ++t)
            acc += a[base + off + t * stride] * roots[(k * t) % q];
          buf[k] = acc;
        }
        for (int k = 0; k < q; ++k)
          a[base + off + k * stride] = buf[k];
      }
    }
  }
}

} // namespace

std::uint64_t ipow(std::uint64_t q, int s) {
  std::uint64_t r = 1;
  for (int i = 0; i < s; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / q)
      throw SizeError("q^s overflows 64 bits");
    r *= q;
  }
  return r;
}

cplx walsh_function(int q, std::uint64_t n, double t) {
  if (q < 2)
    throw ParameterError("walsh base must be >= 2");
  std::uint64_t phase = 0;
  double frac = t - std::floor(t);
  while (n != 0) {
    frac *= q;
    const double digit = std::floor(frac);
    frac -= digit;
    phase += (n % q) * static_cast<std::uint64_t>(digit);
    n /= q;
  }
  return unit_root(q, phase);
}

cplx walsh_on_cell(int q, int s, std::uint64_t k, std::uint64_t cell) {
  // Digit t_i of the cell sits at position s - i (most significant first).
  std::uint64_t phase = 0;
  const std::uint64_t rev = digit_reverse(cell, q, s);
  std::uint64_t kk = k, rr = rev;
  for (int i = 0; i < s && kk != 0; ++i) {
    phase += (kk % q) * (rr % q);
    kk /= q;
    rr /= q;
  }
  return unit_root(q, phase);
}

std::vector<cplx> walsh_analysis(int q, int s, std::span<const cplx> cell_values) {
  const std::uint64_t n = ipow(q, s);
  if (cell_values.size() != n)
    throw SizeError("walsh_analysis expects q^s cell values");
  std::vector<cplx> a(cell_values.begin(), cell_values.end());
  transform_axes(a, q, -1);
  std::vector<cplx> out(n);
  for (std::uint64_t j = 0; j < n; ++j)
    out[digit_reverse(j, q, s)] = a[j];
  return out;
}

std::vector<cplx> walsh_synthesis(int q, int s, std::span<const cplx> coeffs) {
  const std::uint64_t n = ipow(q, s);
  std::vector<cplx> a(n, cplx{});
  for (std::uint64_t k = 0; k < n && k < coeffs.size(); ++k)
    a[digit_reverse(k, q, s)] = coeffs[k];
  transform_axes(a, q, +1);
  return a;
}

} // namespace sigdet
