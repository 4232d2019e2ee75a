// Command-line front end: one subcommand per experiment kind.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sigdet/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<std::string> out;
  std::optional<std::int64_t> threads;
};

int run(const std::string &subcommand, const Overrides &o) {
  nlohmann::json j;
  {
    std::ifstream in(o.config);
    if (!in)
      throw sigdet::ValidationError("config: cannot open " + o.config);
    try {
      in >> j;
    } catch (const nlohmann::json::exception &e) {
      throw sigdet::ValidationError("config: malformed JSON: " + std::string(e.what()));
    }
  }
  if (!j.is_object())
    throw sigdet::ValidationError("config: top level must be an object");
  if (o.seed)
    j["seed"] = *o.seed;
  if (o.trials)
    j["trials"] = *o.trials;
  if (o.out)
    j["out"] = *o.out;
  if (o.threads)
    j["threads"] = *o.threads;

  const auto cfg = sigdet::parse_config(j);
  if (sigdet::to_string(cfg.kind) != subcommand)
    throw sigdet::ValidationError("kind: config is '" + std::string(sigdet::to_string(cfg.kind)) +
                                  "' but the subcommand is '" + subcommand + "'");
  const auto table = sigdet::run_experiment(cfg);
  const std::string out = cfg.out.empty() ? cfg.id + ".csv" : cfg.out;
  sigdet::write_outputs(table, out);

  std::cout << cfg.id << ": " << table.rows.size() << " rows -> " << out << "\n";
  for (const auto &row : table.summary["rows"]) {
    std::cout << "  " << cfg.grid.name << "=" << sigdet::format_double(row[cfg.grid.name].get<double>());
    if (row.contains("error_rate"))
      std::cout << "  error_rate=" << sigdet::format_double(row["error_rate"].get<double>()) << " ["
                << sigdet::format_double(row["error_rate_low"].get<double>()) << ", "
                << sigdet::format_double(row["error_rate_high"].get<double>()) << "]";
    std::cout << "\n";
  }
  if (table.summary.contains("crossover")) {
    const auto &c = table.summary["crossover"];
    std::cout << "  crossover=" << sigdet::format_double(c["value"].get<double>()) << " ["
              << sigdet::format_double(c["low"].get<double>()) << ", "
              << sigdet::format_double(c["high"].get<double>()) << "]\n";
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Seeded Monte Carlo experiments for signal detection and recovery in Gaussian noise"};
  app.require_subcommand(1);

  Overrides o;
  std::string chosen;
  for (const char *name : {"detect", "recover", "oracle", "coupling", "sweep"}) {
    auto *sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
    sub->add_option("--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--trials", o.trials, "override the number of trials");
    sub->add_option("--out", o.out, "CSV output path (summary written alongside)");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return run(chosen, o);
  } catch (const sigdet::ValidationError &e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
