#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "sigdet/cantor_tree.hpp"
#include "sigdet/core.hpp"

namespace sigdet {

// ---------------------------------------------------------------------------
// Index sets
// ---------------------------------------------------------------------------

/// Countable index set with a canonical enumeration:
///  - naturals:   1, 2, 3, ...
///  - integers:   0, 1, -1, 2, -2, ...
///  - tree_edges: breadth-first over a binary tree of the given depth, left
///                child before right. Edge e ends at heap node e + 1; its
///                children are edges 2e + 2 and 2e + 3.
struct IndexSet {
  enum class Kind { naturals, integers, tree_edges };
  Kind kind = Kind::naturals;
  int depth = 0; // tree_edges only

  static IndexSet naturals() { return {Kind::naturals, 0}; }
  static IndexSet integers() { return {Kind::integers, 0}; }
  static IndexSet tree_edges(int depth) { return {Kind::tree_edges, depth}; }

  bool operator==(const IndexSet &) const = default;
};

std::vector<std::int64_t> enumerate_index(const IndexSet &index_set, std::size_t k);

// Integer at a position of the 0, 1, -1, 2, -2, ... enumeration.
std::int64_t integer_at(std::size_t position);

// Number of edges of a binary tree of the given depth: 2^(depth+1) - 2.
std::size_t tree_edge_count(int depth);

// Level (1-based) of an edge in BFS order.
int tree_edge_level(std::size_t edge);

// ---------------------------------------------------------------------------
// Amplitude sequences
// ---------------------------------------------------------------------------

/// Closed-form amplitude sequence sigma_n. Evaluated at the family's own
/// index n (possibly negative for integer-indexed families, where |n| is used).
class Amplitude {
public:
  /// sigma_n = c.
  static Amplitude constant(double c);
  /// sigma_n = scale * (|n| + offset)^(-exponent).
  static Amplitude power_law(double scale, double exponent, double offset = 0.0);
  /// sigma_n = values[|n| - origin]; indices outside the list are a SizeError.
  static Amplitude explicit_list(std::vector<double> values, std::int64_t origin = 1);

  double operator()(std::int64_t n) const;

  // Largest |n| the sequence is defined for, or -1 when unbounded.
  std::int64_t max_index() const;

  std::string describe() const;

private:
  enum class Kind { constant, power_law, list };
  Kind kind_ = Kind::constant;
  double scale_ = 0.0;
  double exponent_ = 0.0;
  double offset_ = 0.0;
  std::vector<double> values_;
  std::int64_t origin_ = 1;
};

// ---------------------------------------------------------------------------
// Space descriptors and parameters
// ---------------------------------------------------------------------------

struct SpaceDescriptor;

namespace space {
struct Singleton {
  Signal x;
};
// x_n = sigma_n eps_n, n = 1, 2, ...
struct Rademacher {
  Amplitude sigma;
};
// x_n = sigma_n prod_{j : bit j of n set} eps_j, n = 0, 1, ...
struct Walsh {
  Amplitude sigma;
};
// x_n = sigma_n exp(2 pi i n t), n over the integer enumeration.
struct Trigonometric {
  Amplitude sigma;
};
// x_n = sigma_n exp(2 pi i 2^n t), n = 1, 2, ...
struct Lacunary {
  Amplitude sigma;
};
// x_e = delta on the edges of one root path, 0 elsewhere.
struct TreeTrail {
  double delta = 1.0;
  int depth = 0;
};
// x_n = v[(n - 1) mod P], P <= period_bound, n = 1, 2, ...
struct Periodic {
  std::size_t period_bound = 1;
  ScalarField field = ScalarField::real;
};
// Walsh coefficients <mu, w_n>, n = 0, 1, ..., of a base-q Cantor measure.
struct CantorMeasure {
  int q = 3;
  int p = 2;
  int depth = 0;
};
struct Scaled {
  double c = 1.0;
  std::shared_ptr<const SpaceDescriptor> inner;
};
struct Union {
  std::vector<SpaceDescriptor> members;
};
} // namespace space

struct SpaceDescriptor {
  std::variant<space::Singleton, space::Rademacher, space::Walsh, space::Trigonometric,
               space::Lacunary, space::TreeTrail, space::Periodic, space::CantorMeasure,
               space::Scaled, space::Union>
      variant;
};

SpaceDescriptor scaled(double c, SpaceDescriptor inner);
SpaceDescriptor union_of(std::vector<SpaceDescriptor> members);

// Throws ParameterError when the descriptor violates its invariants.
void validate(const SpaceDescriptor &desc);

IndexSet index_set(const SpaceDescriptor &desc);
ScalarField field(const SpaceDescriptor &desc);
std::string name(const SpaceDescriptor &desc);

struct SignalParams;

namespace params {
struct None {};
struct Signs {
  std::vector<int> eps; // entries +1 / -1, eps[n-1] for index n
};
struct WalshSigns {
  std::vector<int> eps; // eps[j] for bit j
};
struct Rotation {
  double t = 0.0;
};
struct TreePath {
  std::vector<std::uint8_t> bits; // 0 = left, 1 = right, root first
};
struct PeriodVector {
  std::vector<cplx> values;
};
struct CantorChoice {
  CantorTree tree;
};
struct UnionChoice {
  std::size_t member = 0;
  std::shared_ptr<const SignalParams> inner;
};
} // namespace params

struct SignalParams {
  std::variant<params::None, params::Signs, params::WalshSigns, params::Rotation,
               params::TreePath, params::PeriodVector, params::CantorChoice,
               params::UnionChoice>
      variant;
};

SignalParams union_choice(std::size_t member, SignalParams inner);

std::string describe(const SignalParams &params);

/// First `horizon` coordinates of the signal selected by `params` from `desc`.
Signal generate_signal(const SpaceDescriptor &desc, const SignalParams &params,
                       std::size_t horizon);

// ---------------------------------------------------------------------------
// Detection maps
// ---------------------------------------------------------------------------

/// A detection map on observation prefixes: true declares "signal".
using DetectionMap = std::function<bool(const std::vector<cplx> &)>;

/// T(z) = 1 - prod_i (1 - T_i(z)): signal iff any member declares signal.
DetectionMap combine_union_detector(std::vector<DetectionMap> detectors);

} // namespace sigdet
