#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sigdet/core.hpp"

namespace sigdet {

// Base-q Walsh functions on [0,1):
//   w_n(t) = exp((2*pi*i/q) * sum_j n_j t_j)
// with n = sum_j n_j q^(j-1) (least significant digit first) and
// t = sum_j t_j q^(-j). Digits of t are taken with floor, which makes w_n
// right-continuous at q-adic rationals.
cplx walsh_function(int q, std::uint64_t n, double t);

// Integer power q^s, throws SizeError on overflow.
std::uint64_t ipow(std::uint64_t q, int s);

// Position of a rank-s q-adic cell: cell j covers [j/q^s, (j+1)/q^s).
// Every w_k with k < q^s is constant on a rank-s cell.
cplx walsh_on_cell(int q, int s, std::uint64_t k, std::uint64_t cell);

// Analysis over rank-s cells: out[k] = sum_J cell_values[J] * conj(w_k(J))
// for k < q^s, computed with a mixed-radix fast transform in O(s q^(s+1)).
std::vector<cplx> walsh_analysis(int q, int s, std::span<const cplx> cell_values);

// Synthesis: out[J] = sum_{k < q^s} coeffs[k] * w_k(J). Only the first q^s
// coefficients are used; missing trailing coefficients count as zero.
std::vector<cplx> walsh_synthesis(int q, int s, std::span<const cplx> coeffs);

} // namespace sigdet
