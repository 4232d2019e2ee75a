#include "sigdet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "sigdet/couplings.hpp"
#include "sigdet/detectors.hpp"
#include "sigdet/nondetect_oracle.hpp"
#include "sigdet/recoverers.hpp"
#include "sigdet/signal_model.hpp"

namespace sigdet {

using nlohmann::json;

const char *to_string(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::detect:
    return "detect";
  case ExperimentKind::recover:
    return "recover";
  case ExperimentKind::oracle:
    return "oracle";
  case ExperimentKind::coupling:
    return "coupling";
  case ExperimentKind::sweep:
    return "sweep";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string &s) {
  for (auto k : {ExperimentKind::detect, ExperimentKind::recover, ExperimentKind::oracle,
                 ExperimentKind::coupling, ExperimentKind::sweep})
    if (s == to_string(k))
      return k;
  throw ValidationError("kind: unknown experiment kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config schema

namespace {

enum class KeyType { integer, number, string, boolean };

struct KeySpec {
  const char *name;
  KeyType type;
  bool required;
  json fallback; // used when absent and not required
};

struct ModelSpec {
  ExperimentKind kind; // sweep shares the detect table
  const char *type;
  const char *param; // grid name
  std::vector<KeySpec> keys;
};

const std::vector<ModelSpec> &model_specs() {
  using K = KeyType;
  static const std::vector<ModelSpec> specs = {
      {ExperimentKind::detect,
       "tree_trail",
       "delta",
       {{"depth", K::integer, true, {}},
        {"rule", K::string, false, "union_bound"},
        {"alpha", K::number, false, 0.05}}},
      {ExperimentKind::detect,
       "rademacher",
       "scale",
       {{"exponent", K::number, true, {}},
        {"offset", K::number, false, 0.0},
        {"horizon", K::integer, true, {}}}},
      {ExperimentKind::detect,
       "walsh",
       "scale",
       {{"exponent", K::number, false, 0.5},
        {"offset", K::number, false, 1.0},
        {"horizon", K::integer, true, {}}}},
      {ExperimentKind::recover,
       "trigonometric",
       "scale",
       {{"exponent", K::number, false, 0.5},
        {"offset", K::number, false, 1.0},
        {"k", K::integer, true, {}},
        {"grid_size", K::integer, false, 0},
        {"refine_rounds", K::integer, false, 3},
        {"tolerance", K::number, false, 0.0},
        {"min_energy_ratio", K::number, false, 1.0},
        {"noise", K::boolean, false, true}}},
      {ExperimentKind::recover,
       "walsh",
       "scale",
       {{"exponent", K::number, false, 0.5},
        {"offset", K::number, false, 1.0},
        {"k", K::integer, true, {}},
        {"num_bits", K::integer, true, {}},
        {"mode", K::string, false, "full"},
        {"noise", K::boolean, false, true}}},
      {ExperimentKind::recover,
       "tree_trail",
       "delta",
       {{"depth", K::integer, true, {}},
        {"subdepth", K::integer, true, {}},
        {"bits", K::integer, true, {}},
        {"noise", K::boolean, false, true}}},
      {ExperimentKind::oracle, "tree_overlap_moment", "delta", {{"depth", K::integer, true, {}}}},
      {ExperimentKind::oracle,
       "rademacher_second_moment",
       "scale",
       {{"exponent", K::number, true, {}},
        {"offset", K::number, false, 0.0},
        {"k", K::integer, true, {}}}},
      {ExperimentKind::oracle, "gaussian_overlap", "x", {{"y", K::number, false, {}}}},
      {ExperimentKind::oracle,
       "second_moment_monte_carlo",
       "scale",
       {{"exponent", K::number, true, {}},
        {"offset", K::number, false, 0.0},
        {"k", K::integer, true, {}},
        {"pairs", K::integer, true, {}}}},
      {ExperimentKind::coupling, "uniform_detection", "c", {{"samples", K::integer, true, {}}}},
      {ExperimentKind::coupling, "partial_recovery", "p", {{"samples", K::integer, true, {}}}},
      {ExperimentKind::coupling, "besicovitch", "scale", {{"samples", K::integer, true, {}}}},
  };
  return specs;
}

const ModelSpec *find_spec(ExperimentKind kind, const std::string &type) {
  const auto k = kind == ExperimentKind::sweep ? ExperimentKind::detect : kind;
  for (const auto &s : model_specs())
    if (s.kind == k && type == s.type)
      return &s;
  return nullptr;
}

bool has_type(const json &v, KeyType t) {
  switch (t) {
  case KeyType::integer:
    return v.is_number_integer();
  case KeyType::number:
    return v.is_number();
  case KeyType::string:
    return v.is_string();
  case KeyType::boolean:
    return v.is_boolean();
  }
  return false;
}

const char *type_name(KeyType t) {
  switch (t) {
  case KeyType::integer:
    return "integer";
  case KeyType::number:
    return "number";
  case KeyType::string:
    return "string";
  case KeyType::boolean:
    return "boolean";
  }
  return "?";
}

} // namespace

ExperimentConfig parse_config(const json &j) {
  std::vector<std::string> problems;
  auto problem = [&](std::string s) { problems.push_back(std::move(s)); };
  if (!j.is_object())
    throw ValidationError("config: top level must be an object");

  static const std::vector<std::string> allowed = {"schema_version", "id",    "kind",  "seed",
                                                   "trials",         "threads", "out",  "wall_time",
                                                   "model",          "grid",  "level", "bootstrap",
                                                   "description"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      problem(it.key() + ": unknown key");

  ExperimentConfig c;
  auto need = [&](const char *key, KeyType t) -> const json * {
    if (!j.contains(key)) {
      problem(std::string(key) + ": missing");
      return nullptr;
    }
    if (!has_type(j.at(key), t)) {
      problem(std::string(key) + ": expected " + type_name(t));
      return nullptr;
    }
    return &j.at(key);
  };
  auto optional = [&](const char *key, KeyType t) -> const json * {
    if (!j.contains(key))
      return nullptr;
    if (!has_type(j.at(key), t)) {
      problem(std::string(key) + ": expected " + type_name(t));
      return nullptr;
    }
    return &j.at(key);
  };

  if (const auto *v = need("schema_version", KeyType::integer)) {
    c.schema_version = v->get<int>();
    if (c.schema_version != kConfigSchemaVersion)
      problem("schema_version: unsupported version " + std::to_string(c.schema_version));
  }
  if (const auto *v = need("id", KeyType::string)) {
    c.id = v->get<std::string>();
    if (c.id.empty())
      problem("id: must be nonempty");
  }
  bool kind_ok = false;
  if (const auto *v = need("kind", KeyType::string)) {
    try {
      c.kind = parse_kind(v->get<std::string>());
      kind_ok = true;
    } catch (const ValidationError &e) {
      problem(e.what());
    }
  }
  if (const auto *v = need("seed", KeyType::integer)) {
    if (v->is_number_unsigned() || v->get<std::int64_t>() >= 0)
      c.seed = v->get<std::uint64_t>();
    else
      problem("seed: must be nonnegative");
  }
  if (const auto *v = need("trials", KeyType::integer)) {
    if (v->get<std::int64_t>() < 1)
      problem("trials: must be >= 1");
    else
      c.trials = v->get<std::size_t>();
  }
  if (const auto *v = optional("threads", KeyType::integer)) {
    if (v->get<std::int64_t>() < 0)
      problem("threads: must be >= 0");
    else
      c.threads = v->get<std::size_t>();
  }
  if (const auto *v = optional("out", KeyType::string))
    c.out = v->get<std::string>();
  if (const auto *v = optional("wall_time", KeyType::boolean))
    c.wall_time = v->get<bool>();
  if (const auto *v = optional("level", KeyType::number)) {
    c.level = v->get<double>();
    if (!(c.level > 0.0 && c.level < 1.0))
      problem("level: must lie in (0, 1)");
  }
  if (const auto *v = optional("bootstrap", KeyType::integer)) {
    if (v->get<std::int64_t>() < 0)
      problem("bootstrap: must be >= 0");
    else
      c.bootstrap = v->get<std::size_t>();
  }

  // grid
  if (!j.contains("grid") || !j.at("grid").is_object()) {
    problem("grid: missing or not an object");
  } else {
    const auto &g = j.at("grid");
    for (auto it = g.begin(); it != g.end(); ++it)
      if (it.key() != "name" && it.key() != "values" && it.key() != "from" && it.key() != "to" &&
          it.key() != "step")
        problem("grid." + it.key() + ": unknown key");
    if (!g.contains("name") || !g.at("name").is_string())
      problem("grid.name: missing or not a string");
    else
      c.grid.name = g.at("name").get<std::string>();
    const bool list = g.contains("values");
    const bool range = g.contains("from") || g.contains("to") || g.contains("step");
    if (list == range) {
      problem("grid: give either values or from/to/step");
    } else if (list) {
      const auto &vals = g.at("values");
      if (!vals.is_array() || vals.empty())
        problem("grid.values: expected a nonempty array of numbers");
      else
        for (const auto &v : vals) {
          if (!v.is_number()) {
            problem("grid.values: expected numbers");
            break;
          }
          c.grid.values.push_back(v.get<double>());
        }
    } else {
      bool ok = true;
      for (const char *k : {"from", "to", "step"})
        if (!g.contains(k) || !g.at(k).is_number()) {
          problem(std::string("grid.") + k + ": missing or not a number");
          ok = false;
        }
      if (ok) {
        const double from = g.at("from").get<double>(), to = g.at("to").get<double>(),
                     step = g.at("step").get<double>();
        if (!(step > 0.0))
          problem("grid.step: must be positive");
        else if (to < from)
          problem("grid.to: must be >= grid.from");
        else {
          const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
          for (std::size_t i = 0; i < n; ++i)
            c.grid.values.push_back(from + static_cast<double>(i) * step);
        }
      }
    }
  }

  // model
  if (!j.contains("model") || !j.at("model").is_object()) {
    problem("model: missing or not an object");
  } else if (!j.at("model").contains("type") || !j.at("model").at("type").is_string()) {
    problem("model.type: missing or not a string");
  } else if (kind_ok) {
    const std::string type = j.at("model").at("type").get<std::string>();
    const ModelSpec *spec = find_spec(c.kind, type);
    if (!spec) {
      problem("model.type: '" + type + "' is not available for kind " + to_string(c.kind));
    } else {
      c.model = json::object();
      c.model["type"] = type;
      const auto &m = j.at("model");
      for (auto it = m.begin(); it != m.end(); ++it) {
        if (it.key() == "type")
          continue;
        const auto ks = std::find_if(spec->keys.begin(), spec->keys.end(),
                                     [&](const KeySpec &k) { return it.key() == k.name; });
        if (ks == spec->keys.end())
          problem("model." + it.key() + ": unknown key for type " + type);
      }
      for (const auto &k : spec->keys) {
        if (m.contains(k.name)) {
          if (!has_type(m.at(k.name), k.type))
            problem(std::string("model.") + k.name + ": expected " + type_name(k.type));
          else if (k.type == KeyType::integer && m.at(k.name).get<std::int64_t>() < 0)
            problem(std::string("model.") + k.name + ": must be nonnegative");
          else
            c.model[k.name] = m.at(k.name);
        } else if (k.required) {
          problem(std::string("model.") + k.name + ": missing");
        } else if (!k.fallback.is_null()) {
          c.model[k.name] = k.fallback;
        }
      }
      if (!c.grid.name.empty() && c.grid.name != spec->param)
        problem("grid.name: expected '" + std::string(spec->param) + "' for model " + type);
    }
  }

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto &p : problems)
      msg += "\n  " + p;
    throw ValidationError(msg);
  }
  return c;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ValidationError("config: malformed JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Tasks

namespace {

struct Task {
  std::size_t param_index = 0;
  double value = 0.0;
  std::size_t trial = 0;
  RngStream stream;
};

std::string bit_string(const std::vector<int> &eps) {
  std::string s;
  for (int e : eps)
    s += e < 0 ? '1' : '0';
  return s;
}

std::string bit_string(const std::vector<std::uint8_t> &bits) {
  std::string s;
  for (auto b : bits)
    s += b ? '1' : '0';
  return s;
}

std::vector<int> random_signs(std::size_t n, std::mt19937_64 &eng) {
  std::vector<int> eps(n);
  for (auto &e : eps)
    e = (eng() >> 63) ? -1 : 1;
  return eps;
}

Amplitude amplitude_of(const json &m, double scale) {
  return Amplitude::power_law(scale, m.at("exponent").get<double>(), m.at("offset").get<double>());
}

std::int64_t verdict_error(Verdict got, Verdict want) { return got == want ? 0 : 1; }

std::vector<std::string> specific_columns(ExperimentKind kind, const std::string &type) {
  if (kind == ExperimentKind::detect || kind == ExperimentKind::sweep)
    return {"truth",         "signal_statistic", "noise_statistic", "signal_verdict",
            "noise_verdict", "signal_error",     "noise_error"};
  if (kind == ExperimentKind::recover) {
    if (type == "trigonometric")
      return {"truth", "recovered", "distance", "score_margin", "error"};
    return {"truth", "recovered", "score_margin", "error"};
  }
  if (kind == ExperimentKind::oracle)
    return {"value", "std_error", "method", "reference"};
  if (type == "uniform_detection")
    return {"flip_threshold", "mean_sq_diff", "mean_sq_diff_se", "ks_statistic", "ks_critical",
            "identity_ok"};
  if (type == "partial_recovery")
    return {"flip_rate", "flip_rate_se", "y1_positive_rate", "ks_statistic", "ks_critical",
            "identity_ok"};
  return {"distance"};
}

std::vector<Cell> run_detect(const json &m, const Task &t) {
  const std::string type = m.at("type");
  auto eng = t.stream.fork(0).engine();
  const RngStream sig_stream = t.stream.fork(1), noise_stream = t.stream.fork(2);
  DetectorReport sig, noise;
  std::string truth;

  if (type == "tree_trail") {
    const int h = m.at("depth").get<int>();
    if (h < 1 || h > 24)
      throw SizeError("tree depth must lie in [1, 24]");
    if (!(t.value > 0.0))
      throw ParameterError("delta must be positive");
    TreeDetectorOptions opts;
    const std::string rule = m.at("rule");
    if (rule == "plain")
      opts.rule = TreeDetectorOptions::Rule::plain;
    else if (rule != "union_bound")
      throw ValidationError("model.rule: expected union_bound or plain");
    opts.alpha = m.at("alpha").get<double>();
    params::TreePath path;
    path.bits.resize(h);
    for (auto &b : path.bits)
      b = static_cast<std::uint8_t>(eng() >> 63);
    truth = bit_string(path.bits);
    const SpaceDescriptor desc{space::TreeTrail{t.value, h}};
    const auto x = generate_signal(desc, SignalParams{path}, tree_edge_count(h));
    const auto zs = observe(x, sig_stream, ScalarField::real);
    const auto zn = observe_noise(tree_edge_count(h), noise_stream, ScalarField::real);
    sig = tree_max_path_detector(zs.values, t.value, {h}, opts);
    noise = tree_max_path_detector(zn.values, t.value, {h}, opts);
  } else if (type == "rademacher") {
    const auto n = m.at("horizon").get<std::size_t>();
    const auto sigma = amplitude_of(m, t.value);
    const SpaceDescriptor desc{space::Rademacher{sigma}};
    auto x = generate_signal(desc, SignalParams{params::Signs{random_signs(n, eng)}}, n);
    // Real signs observed in complex noise.
    x.field = ScalarField::complex;
    truth = "-";
    const auto schedule = CheckpointSchedule::single(n);
    sig = energy_detector(sigma, observe(x, sig_stream, ScalarField::complex), schedule);
    noise = energy_detector(sigma, observe_noise(n, noise_stream, ScalarField::complex), schedule);
  } else { // walsh
    const auto k = m.at("horizon").get<std::size_t>();
    if (k == 0 || !std::has_single_bit(k))
      throw ValidationError("model.horizon: must be a power of two");
    const auto sigma = amplitude_of(m, t.value);
    const auto eps = random_signs(static_cast<std::size_t>(std::bit_width(k) - 1), eng);
    truth = bit_string(eps);
    const SpaceDescriptor desc{space::Walsh{sigma}};
    const auto x = generate_signal(desc, SignalParams{params::WalshSigns{eps}}, k);
    sig = walsh_gllr_detector(sigma, observe(x, sig_stream, ScalarField::real).values, k);
    noise = walsh_gllr_detector(sigma, observe_noise(k, noise_stream, ScalarField::real).values, k);
  }
  return {truth,
          sig.final_statistic(),
          noise.final_statistic(),
          std::string(to_string(sig.verdict)),
          std::string(to_string(noise.verdict)),
          verdict_error(sig.verdict, Verdict::signal),
          verdict_error(noise.verdict, Verdict::noise)};
}

std::vector<Cell> run_recover(const json &m, const Task &t) {
  const std::string type = m.at("type");
  auto eng = t.stream.fork(0).engine();
  const RngStream noise_stream = t.stream.fork(1);
  const bool noisy = m.at("noise").get<bool>();

  if (type == "trigonometric") {
    const auto k = m.at("k").get<std::size_t>();
    if (k < 2)
      throw ValidationError("model.k: must be >= 2");
    auto grid = m.at("grid_size").get<std::size_t>();
    if (grid == 0)
      grid = 4 * k;
    double tol = m.at("tolerance").get<double>();
    if (tol <= 0.0)
      tol = 2.0 / static_cast<double>(k);
    const auto sigma = amplitude_of(m, t.value);
    const double truth = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    const SpaceDescriptor desc{space::Trigonometric{sigma}};
    const auto x = generate_signal(desc, SignalParams{params::Rotation{truth}}, 2 * k - 1);
    const auto z = noisy ? observe(x, noise_stream, ScalarField::complex).values : x.values;
    TrigRecoveryOptions opts;
    opts.min_energy_ratio = m.at("min_energy_ratio").get<double>();
    const auto rep = trig_recovery(sigma, z, k, grid, m.at("refine_rounds").get<int>(), opts);
    double got = std::nan("");
    double dist = std::nan("");
    if (rep.recovered) {
      got = std::get<params::Rotation>(rep.recovered->variant).t;
      dist = circle_distance(got, truth);
    }
    const std::int64_t err = rep.recovered && dist <= tol ? 0 : 1;
    return {truth, got, dist, rep.score_margin, err};
  }
  if (type == "walsh") {
    const auto k = m.at("k").get<std::size_t>();
    if (k == 0 || !std::has_single_bit(k))
      throw ValidationError("model.k: must be a power of two");
    const auto bits = m.at("num_bits").get<std::size_t>();
    WalshRecoveryOptions opts;
    const std::string mode = m.at("mode");
    if (mode == "restricted")
      opts.mode = WalshRecoveryOptions::Mode::restricted;
    else if (mode != "full")
      throw ValidationError("model.mode: expected full or restricted");
    const auto sigma = amplitude_of(m, t.value);
    const auto eps = random_signs(static_cast<std::size_t>(std::bit_width(k) - 1), eng);
    const SpaceDescriptor desc{space::Walsh{sigma}};
    const auto x = generate_signal(desc, SignalParams{params::WalshSigns{eps}}, k);
    const auto z = noisy ? observe(x, noise_stream, ScalarField::real).values : x.values;
    const auto rep = walsh_recovery(sigma, z, k, bits, opts);
    const std::vector<int> want(eps.begin(), eps.begin() + static_cast<std::ptrdiff_t>(bits));
    std::string got = "-";
    std::int64_t err = 1;
    if (rep.recovered) {
      const auto &r = std::get<params::WalshSigns>(rep.recovered->variant).eps;
      got = bit_string(r);
      err = r == want ? 0 : 1;
    }
    return {bit_string(want), got, rep.score_margin, err};
  }
  // tree_trail
  const int h = m.at("depth").get<int>();
  const int sub = m.at("subdepth").get<int>();
  const int nbits = m.at("bits").get<int>();
  if (h < 1 || h > 24)
    throw SizeError("tree depth must lie in [1, 24]");
  params::TreePath path;
  path.bits.resize(h);
  for (auto &b : path.bits)
    b = static_cast<std::uint8_t>(eng() >> 63);
  const SpaceDescriptor desc{space::TreeTrail{t.value, h}};
  const auto x = generate_signal(desc, SignalParams{path}, tree_edge_count(h));
  const auto z = noisy ? observe(x, noise_stream, ScalarField::real).values : x.values;
  const auto rep = tree_path_recovery(z, t.value, h, sub, nbits);
  const std::vector<std::uint8_t> want(path.bits.begin(), path.bits.begin() + nbits);
  std::string got = "-";
  std::int64_t err = 1;
  if (rep.recovered) {
    const auto &r = std::get<params::TreePath>(rep.recovered->variant).bits;
    got = bit_string(r);
    err = r == want ? 0 : 1;
  }
  return {bit_string(want), got, rep.score_margin, err};
}

std::vector<Cell> run_oracle(const json &m, const Task &t) {
  const std::string type = m.at("type");
  const double nan = std::nan("");
  if (type == "tree_overlap_moment") {
    const auto r = tree_overlap_moment(t.value, m.at("depth").get<int>());
    return {r.value, r.std_error, std::string(to_string(r.method)), nan};
  }
  if (type == "rademacher_second_moment") {
    const auto r = rademacher_second_moment_exact(amplitude_of(m, t.value), m.at("k").get<std::size_t>());
    return {r.value, r.std_error, std::string(to_string(r.method)), nan};
  }
  if (type == "gaussian_overlap") {
    const double y = m.contains("y") ? m.at("y").get<double>() : t.value;
    const auto r = general_noise_overlap(gaussian_density, t.value, y);
    return {r.value, r.error_estimate, std::string("quadrature"), std::exp(t.value * y)};
  }
  // second_moment_monte_carlo over the rademacher prior
  const auto sigma = amplitude_of(m, t.value);
  const auto k = m.at("k").get<std::size_t>();
  const auto r = second_moment(rademacher_prior(sigma), k, m.at("pairs").get<std::size_t>(), t.stream);
  return {r.value, r.std_error, std::string(to_string(r.method)),
          rademacher_second_moment_exact(sigma, k).value};
}

std::vector<Cell> run_coupling(const json &m, const Task &t) {
  const std::string type = m.at("type");
  const auto n = m.at("samples").get<std::size_t>();
  if (n < 2)
    throw ValidationError("model.samples: must be >= 2");
  if (type == "uniform_detection") {
    const double thr = solve_flip_threshold(t.value);
    const auto pairs = sample_uniform_detection_coupling(t.value, n, t.stream);
    double s = 0.0, s2 = 0.0;
    std::int64_t ok = 1;
    std::vector<double> xi2(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto &p = pairs[i];
      const double d = (p.xi1 - p.xi2) * (p.xi1 - p.xi2);
      s += d;
      s2 += d * d;
      xi2[i] = p.xi2;
      const bool flipped = std::abs(p.xi1) < thr;
      if (!(flipped ? p.xi2 == -p.xi1 : p.xi2 == p.xi1))
        ok = 0;
    }
    const double mean = s / n;
    const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1));
    return {std::isinf(thr) ? std::numeric_limits<double>::infinity() : thr, mean, se,
            ks_statistic_normal(xi2), ks_critical_1pct(n), ok};
  }
  if (type == "partial_recovery") {
    const auto quads = sample_partial_recovery_coupling(t.value, n, t.stream);
    std::size_t flips = 0, positive = 0;
    std::int64_t ok = 1;
    std::vector<double> xi1(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto &q = quads[i];
      flips += q.y1 != q.y2;
      positive += q.y1 > 0;
      xi1[i] = q.xi1;
      if (!(q.y1 + q.xi1 == q.y2 + q.xi2))
        ok = 0;
    }
    const double rate = static_cast<double>(flips) / n;
    return {rate, std::sqrt(rate * (1.0 - rate) / n), static_cast<double>(positive) / n,
            ks_statistic_normal(xi1), ks_critical_1pct(n), ok};
  }
  // besicovitch: d(x + xi, x) for a +-scale sign sequence
  auto eng = t.stream.fork(0).engine();
  std::vector<cplx> x(n), y(n);
  const auto xi = sample_noise(t.stream.fork(1), ScalarField::real, n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (eng() >> 63) ? -t.value : t.value;
    y[i] = x[i] + xi[i];
  }
  return {besicovitch_distance(y, x, n)};
}

double as_double(const Cell &c) {
  if (const auto *d = std::get_if<double>(&c))
    return *d;
  if (const auto *i = std::get_if<std::int64_t>(&c))
    return static_cast<double>(*i);
  return std::nan("");
}

json summary_for(const ExperimentConfig &cfg, const ResultTable &table) {
  json s;
  s["schema_version"] = cfg.schema_version;
  s["experiment"] = cfg.id;
  s["kind"] = to_string(cfg.kind);
  s["model"] = cfg.model;
  s["seed"] = cfg.seed;
  s["trials"] = cfg.trials;
  s["parameter"] = cfg.grid.name;
  s["rows"] = json::array();
  const auto ncol = table.columns.size();
  const std::size_t first_specific = 6; // after experiment..stream_id
  for (std::size_t pi = 0; pi < cfg.grid.values.size(); ++pi) {
    json row;
    row["param_index"] = pi;
    row[cfg.grid.name] = cfg.grid.values[pi];
    row["trials"] = cfg.trials;
    const auto begin = table.rows.begin() + static_cast<std::ptrdiff_t>(pi * cfg.trials);
    const auto end = begin + static_cast<std::ptrdiff_t>(cfg.trials);
    auto total = [&](const std::string &col) {
      const auto c = table.column(col);
      std::size_t sum = 0;
      for (auto it = begin; it != end; ++it)
        sum += static_cast<std::size_t>(std::get<std::int64_t>((*it)[c]));
      return sum;
    };
    if (cfg.kind == ExperimentKind::detect || cfg.kind == ExperimentKind::sweep) {
      const auto se = total("signal_error"), ne = total("noise_error");
      const auto w = wilson_interval(se + ne, 2 * cfg.trials);
      row["signal_errors"] = se;
      row["noise_errors"] = ne;
      row["errors"] = se + ne;
      row["error_rate"] = static_cast<double>(se + ne) / (2.0 * cfg.trials);
      row["error_rate_low"] = w.low;
      row["error_rate_high"] = w.high;
      row["miss_rate"] = static_cast<double>(se) / cfg.trials;
      row["false_alarm_rate"] = static_cast<double>(ne) / cfg.trials;
    } else if (cfg.kind == ExperimentKind::recover) {
      const auto e = total("error");
      const auto w = wilson_interval(e, cfg.trials);
      row["errors"] = e;
      row["error_rate"] = static_cast<double>(e) / cfg.trials;
      row["error_rate_low"] = w.low;
      row["error_rate_high"] = w.high;
    } else {
      // Mean of every numeric column.
      for (std::size_t c = first_specific; c < ncol; ++c) {
        const auto &name = table.columns[c];
        if (name == "wall_time_s" || std::holds_alternative<std::string>((*begin)[c]))
          continue;
        double sum = 0.0;
        for (auto it = begin; it != end; ++it)
          sum += as_double((*it)[c]);
        row["mean_" + name] = sum / static_cast<double>(cfg.trials);
      }
    }
    s["rows"].push_back(row);
  }
  return s;
}

} // namespace

std::size_t ResultTable::column(const std::string &name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw ParameterError("no column named " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

ResultTable run_experiment(const ExperimentConfig &cfg) {
  const std::string type = cfg.model.at("type");
  if (cfg.grid.values.empty())
    throw ValidationError("grid: no parameter values");
  ResultTable table;
  table.columns = {"experiment", "trial", "param_index", cfg.grid.name, "seed", "stream_id"};
  for (auto &c : specific_columns(cfg.kind, type))
    table.columns.push_back(c);
  if (cfg.wall_time)
    table.columns.push_back("wall_time_s");

  const std::uint64_t exp_id = experiment_hash(cfg.id);
  std::vector<Task> tasks;
  tasks.reserve(cfg.grid.values.size() * cfg.trials);
  for (std::size_t pi = 0; pi < cfg.grid.values.size(); ++pi)
    for (std::size_t tr = 0; tr < cfg.trials; ++tr)
      tasks.push_back({pi, cfg.grid.values[pi], tr, RngStream{cfg.seed, stream_id_for(exp_id, tr, pi)}});

  auto run_one = [&](const Task &t) -> std::vector<Cell> {
    const auto start = std::chrono::steady_clock::now();
    std::vector<Cell> row{cfg.id,
                          static_cast<std::int64_t>(t.trial),
                          static_cast<std::int64_t>(t.param_index),
                          t.value,
                          static_cast<std::int64_t>(cfg.seed),
                          fmt::format("{:016x}", t.stream.stream_id)};
    std::vector<Cell> specific;
    switch (cfg.kind) {
    case ExperimentKind::detect:
    case ExperimentKind::sweep:
      specific = run_detect(cfg.model, t);
      break;
    case ExperimentKind::recover:
      specific = run_recover(cfg.model, t);
      break;
    case ExperimentKind::oracle:
      specific = run_oracle(cfg.model, t);
      break;
    case ExperimentKind::coupling:
      specific = run_coupling(cfg.model, t);
      break;
    }
    row.insert(row.end(), specific.begin(), specific.end());
    if (cfg.wall_time)
      row.emplace_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return row;
  };

  table.rows.resize(tasks.size());
  std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size())
        return;
      try {
        table.rows[i] = run_one(tasks[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next = tasks.size();
        return;
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(worker);
    for (auto &th : pool)
      th.join();
  }
  if (failure)
    std::rethrow_exception(failure);

  table.summary = summary_for(cfg, table);

  if (cfg.kind == ExperimentKind::sweep) {
    std::vector<std::vector<int>> errors(cfg.grid.values.size());
    const auto se = table.column("signal_error"), ne = table.column("noise_error");
    for (std::size_t pi = 0; pi < errors.size(); ++pi)
      for (std::size_t tr = 0; tr < cfg.trials; ++tr) {
        const auto &row = table.rows[pi * cfg.trials + tr];
        errors[pi].push_back(static_cast<int>(std::get<std::int64_t>(row[se]) +
                                              std::get<std::int64_t>(row[ne])));
      }
    const auto c = sweep_crossover(cfg.grid.values, errors, 2, cfg.level, cfg.bootstrap,
                                   RngStream{cfg.seed, stream_id_for(exp_id, 0, ~std::uint64_t{0})});
    table.summary["crossover"] = {{"level", cfg.level},
                                  {"value", c.value},
                                  {"low", c.low},
                                  {"high", c.high},
                                  {"bootstrap", cfg.bootstrap},
                                  {"bootstrap_crossed", c.replicates}};
  }
  return table;
}

// ---------------------------------------------------------------------------
// Output

std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

namespace {

std::string csv_field(const Cell &c) {
  if (const auto *i = std::get_if<std::int64_t>(&c))
    return std::to_string(*i);
  if (const auto *d = std::get_if<double>(&c))
    return format_double(*d);
  const auto &s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"')
      q += '"';
    q += ch;
  }
  return q + "\"";
}

} // namespace

std::string to_csv(const ResultTable &table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out += (i ? "," : "") + table.columns[i];
  out += '\n';
  for (const auto &row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i)
        out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string summary_path(const std::string &csv_path) {
  const auto slash = csv_path.find_last_of('/');
  const auto dot = csv_path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    return csv_path.substr(0, dot) + ".summary.json";
  return csv_path + ".summary.json";
}

void write_outputs(const ResultTable &table, const std::string &csv_path) {
  auto write = [](const std::string &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
      throw Error("cannot write " + path);
    f << text;
  };
  write(csv_path, to_csv(table));
  write(summary_path(csv_path), table.summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Statistics

WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0)
    return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The exact endpoints at 0 and n; the formula only reaches them up to rounding.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == n ? 1.0 : std::min(1.0, centre + half)};
}

std::optional<double> interpolate_crossing(const std::vector<double> &x,
                                           const std::vector<double> &y, double level) {
  if (x.size() != y.size())
    throw SizeError("x and y lengths differ");
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = y[i] - level, b = y[i + 1] - level;
    if (a == 0.0)
      return x[i];
    if ((a < 0.0) != (b < 0.0) && b != 0.0)
      return x[i] + (x[i + 1] - x[i]) * a / (a - b);
    if (b == 0.0)
      return x[i + 1];
  }
  return std::nullopt;
}

Crossover sweep_crossover(const std::vector<double> &x, const std::vector<std::vector<int>> &errors,
                          int per_trial, double level, std::size_t bootstrap,
                          const RngStream &stream) {
  if (x.size() != errors.size())
    throw SizeError("grid and error table differ in length");
  if (x.size() < 2)
    throw RangeError("sweep needs at least two distinct grid points");
  auto rates = [&](const std::vector<std::vector<int>> &e) {
    std::vector<double> r;
    for (const auto &row : e) {
      if (row.empty())
        throw SizeError("no trials at a grid point");
      r.push_back(static_cast<double>(std::accumulate(row.begin(), row.end(), 0)) /
                  (static_cast<double>(per_trial) * static_cast<double>(row.size())));
    }
    return r;
  };
  const auto point = interpolate_crossing(x, rates(errors), level);
  if (!point)
    throw RangeError("error-rate curve does not cross " + format_double(level) + " in the sweep range");

  Crossover out;
  out.value = *point;
  out.low = out.high = *point;
  auto eng = stream.engine();
  std::vector<double> reps;
  std::vector<std::vector<int>> resample(errors.size());
  for (std::size_t b = 0; b < bootstrap; ++b) {
    for (std::size_t i = 0; i < errors.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, errors[i].size() - 1);
      resample[i].resize(errors[i].size());
      for (auto &v : resample[i])
        v = errors[i][pick(eng)];
    }
    if (const auto c = interpolate_crossing(x, rates(resample), level))
      reps.push_back(*c);
  }
  out.replicates = reps.size();
  if (!reps.empty()) {
    std::sort(reps.begin(), reps.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(reps.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, reps.size() - 1);
      return reps[lo] + (pos - static_cast<double>(lo)) * (reps[hi] - reps[lo]);
    };
    out.low = std::min(quantile(0.025), out.value);
    out.high = std::max(quantile(0.975), out.value);
  }
  return out;
}

} // namespace sigdet
