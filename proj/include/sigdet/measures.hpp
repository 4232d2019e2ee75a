#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "sigdet/cantor_tree.hpp"
#include "sigdet/core.hpp"
#include "sigdet/noise_channel.hpp"
#include "sigdet/walsh.hpp"

namespace sigdet {

/// [j / 2^rank, (j + 1) / 2^rank)
struct DyadicInterval {
  int rank = 0;
  std::uint64_t position = 0;

  double length() const;
  double left() const;
  bool contains(const DyadicInterval &other) const;
  bool operator==(const DyadicInterval &) const = default;
};

/// Union of dyadic intervals with disjoint interiors.
class DyadicCover {
public:
  DyadicCover() = default;
  explicit DyadicCover(std::vector<DyadicInterval> intervals);

  const std::vector<DyadicInterval> &intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  double measure() const;
  /// sum |I|^alpha; a cover belongs to Omega when this is <= 1.
  double alpha_budget(double alpha) const;
  int min_rank() const;
  int max_rank() const;

  /// [0, 2^-rank) as a single interval.
  static DyadicCover prefix(int rank);
  /// Whole circle.
  static DyadicCover full();

private:
  std::vector<DyadicInterval> intervals_;
};

struct AtomicMeasure {
  std::vector<std::pair<double, cplx>> atoms; // (position in [0,1), weight)
};

/// Either finitely many weighted atoms or a Cantor construction.
struct MeasureModel {
  std::variant<AtomicMeasure, CantorTree> variant;
};

enum class BasisKind { fourier, walsh };

struct Basis {
  BasisKind kind = BasisKind::walsh;
  int q = 2; // walsh only

  static Basis fourier() { return {BasisKind::fourier, 0}; }
  static Basis walsh(int q = 2) { return {BasisKind::walsh, q}; }
};

/// Coefficients over the canonical enumeration: n = 0, 1, ... (walsh) or
/// n = 0, 1, -1, 2, -2, ... (fourier).
struct CoefficientVector {
  Basis basis;
  std::vector<cplx> values;
};

/// <mu, basis_n> = integral of conj(basis_n) d mu for the first `count` indices.
CoefficientVector transform_measure(const MeasureModel &m, const Basis &basis, std::size_t count);

/// Adds independent complex Gaussian noise to every coefficient.
CoefficientVector add_noise(const CoefficientVector &y, const RngStream &stream);

/// T_E(y) = sum_n conj(<1_E, basis_n>) y_n. In the base-2 Walsh basis this is
/// exact once y has 2^max_rank coefficients (indicators of rank-N dyadic sets
/// have Walsh support below 2^N). In the Fourier basis the indicator
/// coefficients are Fejer-weighted.
cplx integrate_functional(const DyadicCover &cover, const CoefficientVector &y);

/// Rank-N Walsh partial sums S_N[j] = sum_{n < 2^N} y_n w_n(j / 2^N). The
/// integral over the rank-N interval j is 2^-N S_N[j].
std::vector<cplx> dyadic_partial_sums(const CoefficientVector &y, int rank);

struct SupportRecovery {
  cplx value;
  std::vector<cplx> trajectory; // T_{U_j}(y) for every j
};

/// Evaluates T_{U_j}(y) along nested covers with mes(U_j) <= j^-2 and returns
/// the last one.
SupportRecovery known_support_recovery(const CoefficientVector &y,
                                       const std::vector<DyadicCover> &covers);

struct DimensionRecovery {
  double value = 0.0;      // max Re T_E(y) over admissible covers
  DyadicCover cover;       // an optimal cover
  std::size_t units_used = 0;
  bool in_regime = true;   // alpha < 1/2
};

/// Budget units of a rank-N interval: max(1, round(2^(-alpha N) * resolution)).
std::size_t dyadic_budget_cost(double alpha, int rank, std::size_t resolution);

/// Maximizes Re T_E(y) over covers with ranks in [rank_min, rank_max] and
/// sum |I|^alpha <= 1, by exact dynamic programming over the dyadic tree with
/// the budget discretized into `resolution` units. Ties prefer fewer intervals.
DimensionRecovery dimension_constrained_recovery(const CoefficientVector &y, double alpha,
                                                 int rank_min, int rank_max,
                                                 std::size_t resolution);

/// Estimates of the four positive parts of a complex measure: maximizes
/// Re(w T_E(y)) for w = 1, -1, -i, i.
std::array<double, 4> dimension_constrained_parts(const CoefficientVector &y, double alpha,
                                                  int rank_min, int rank_max,
                                                  std::size_t resolution);

/// Random Cantor construction: each chosen interval keeps p of its q children,
/// uniformly without replacement, independently across intervals.
CantorTree sample_random_cantor(int q, int p, int depth, const RngStream &stream);

/// p^2 > q: the regime where the construction has dimension above 1/2.
bool cantor_supercritical(int q, int p);

/// Walsh coefficients <mu, w_n>, n < q^rank, of the rank-`rank` stage.
std::vector<cplx> cantor_walsh_coefficients_at_rank(const CantorTree &tree, int rank);

struct Overlap {
  std::uint64_t common = 0; // Z_k
  double inner = 0.0;       // Re sum_{n<q^k} x_n conj(y_n)
  double inner_imag = 0.0;
};

/// Z_k and the Walsh inner product of two Cantor constructions; the two
/// satisfy inner = (q / p^2)^k Z_k.
Overlap gw_overlap(const CantorTree &a, const CantorTree &b, int k);

/// c_{nk} = <e_n, w_k> for k < q^s: exact integrals of e_n over rank-s cells.
std::vector<cplx> change_of_basis_row(int q, int s, std::int64_t n);

enum class BasisDirection { walsh_to_fourier, fourier_to_walsh };

/// walsh_to_fourier: y'_n = sum_{k<q^s} conj(c_{nk}) y_k for n in `indices`.
/// fourier_to_walsh (q = 2): y'_k = sum_n c_{nk} y_n for k in `indices`, with
/// y over the integer enumeration 0, 1, -1, 2, ...
CoefficientVector fourier_walsh_change_of_basis(const CoefficientVector &y,
                                                BasisDirection direction, int s,
                                                const std::vector<std::int64_t> &indices);

} // namespace sigdet
