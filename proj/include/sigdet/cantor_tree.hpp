#pragma once

#include <cstdint>
#include <vector>

#include "sigdet/core.hpp"

namespace sigdet {

/// Interval tree of a random Cantor construction in base q: every chosen
/// q-adic interval of rank k keeps p of its q children at rank k + 1.
///
/// levels[k] holds the sorted positions j of the chosen rank-k intervals
/// [j/q^k, (j+1)/q^k); levels[0] == {0}. Each chosen rank-k interval carries
/// mass p^-k.
struct CantorTree {
  int q = 3;
  int p = 2;
  int depth = 0;
  std::vector<std::vector<std::uint64_t>> levels{{0}};

  bool operator==(const CantorTree &) const = default;
};

// Throws ParameterError unless 2 <= p < q and the levels are consistent.
void validate(const CantorTree &tree);

// Walsh coefficients <mu, w_n> for n < count of the Cantor measure carried by
// the tree (mass p^-depth on every chosen leaf, uniform inside it). Exact up
// to rounding: coefficients with n >= q^depth vanish.
std::vector<cplx> cantor_walsh_coefficients(const CantorTree &tree, std::size_t count);

} // namespace sigdet
