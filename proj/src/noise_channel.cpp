#include "sigdet/noise_channel.hpp"

#include <cmath>

namespace sigdet {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_id_for(std::uint64_t experiment, std::uint64_t trial,
                            std::uint64_t param_index) {
  std::uint64_t h = splitmix64(experiment);
  h = splitmix64(h ^ trial);
  h = splitmix64(h ^ (param_index * 0xd6e8feb86659fd93ULL));
  return h;
}

std::uint64_t experiment_hash(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::mt19937_64 RngStream::engine() const {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

RngStream RngStream::fork(std::uint64_t salt) const {
  return {seed, splitmix64(stream_id ^ splitmix64(salt + 0x2545f4914f6cdd1dULL))};
}

std::vector<cplx> sample_noise(std::mt19937_64 &engine, ScalarField field, std::size_t count) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cplx> out(count);
  if (field == ScalarField::real) {
    for (auto &v : out)
      v = gauss(engine);
  } else {
    for (auto &v : out) {
      const double re = gauss(engine);
      const double im = gauss(engine);
      v = {re, im};
    }
  }
  return out;
}

std::vector<cplx> sample_noise(const RngStream &stream, ScalarField field, std::size_t count) {
  auto engine = stream.engine();
  return sample_noise(engine, field, count);
}

Observation observe(const Signal &signal, const RngStream &stream, ScalarField field) {
  if (signal.field != field)
    throw ParameterError("signal field does not match noise field");
  Observation obs;
  obs.field = field;
  obs.horizon = signal.size();
  obs.stream = stream;
  obs.values = sample_noise(stream, field, signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i)
    obs.values[i] += signal.values[i];
  return obs;
}

Observation observe_noise(std::size_t horizon, const RngStream &stream, ScalarField field) {
  Signal zero{field, std::vector<cplx>(horizon)};
  return observe(zero, stream, field);
}

Observation augment_noise(const Observation &obs, double c, const RngStream &aux_stream) {
  if (!(c >= 1.0))
    throw ParameterError("augment_noise requires c >= 1");
  Observation out = obs;
  if (c == 1.0)
    return out;
  const double extra = std::sqrt(c * c - 1.0);
  const auto aux = sample_noise(aux_stream, obs.field, obs.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = (obs.values[i] + extra * aux[i]) / c;
  return out;
}

} // namespace sigdet
