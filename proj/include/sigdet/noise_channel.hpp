#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "sigdet/core.hpp"
#include "sigdet/signal_model.hpp"

namespace sigdet {

/// Counter-style random stream: (seed, stream_id) fully determines the
/// generated values. Distinct stream ids give statistically independent
/// streams, so trials can run in any order.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::mt19937_64 engine() const;

  /// Child stream for a sub-task (e.g. the noise of trial t vs. its prior draw).
  RngStream fork(std::uint64_t salt) const;

  bool operator==(const RngStream &) const = default;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stream id for Monte Carlo trial `trial` of experiment `experiment` at
/// parameter index `param_index`.
std::uint64_t stream_id_for(std::uint64_t experiment, std::uint64_t trial,
                            std::uint64_t param_index = 0);

/// Hash of an experiment name into a 64-bit id (FNV-1a).
std::uint64_t experiment_hash(std::string_view name);

struct Observation {
  std::vector<cplx> values;
  ScalarField field = ScalarField::real;
  std::size_t horizon = 0;
  RngStream stream;
  // Scoring only. Detectors and recoverers never read it.
  std::optional<SignalParams> truth;
};

/// i.i.d. N(0,1) (real) or N(0,1) + i N(0,1) (complex, so E|xi|^2 = 2).
std::vector<cplx> sample_noise(const RngStream &stream, ScalarField field, std::size_t count);

/// Same as sample_noise, drawing from an existing engine.
std::vector<cplx> sample_noise(std::mt19937_64 &engine, ScalarField field, std::size_t count);

/// values = signal + fresh noise from `stream`. Pass a zero signal for pure noise.
Observation observe(const Signal &signal, const RngStream &stream, ScalarField field);

/// Pure-noise observation of the given length.
Observation observe_noise(std::size_t horizon, const RngStream &stream, ScalarField field);

/// z'_n = (z_n + sqrt(c^2 - 1) xi'_n) / c. If z = c x + xi then z' ~ x + xi.
Observation augment_noise(const Observation &obs, double c, const RngStream &aux_stream);

} // namespace sigdet
