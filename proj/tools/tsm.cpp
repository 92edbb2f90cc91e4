#include <glob.h>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsm/error.hpp"
#include "tsm/harness.hpp"
#include "tsm/oracle.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw tsm::ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw tsm::ConfigError(path + ": " + e.what());
  }
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeated two-sided market simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment over one or more seeds");
  std::string config_path, algo, seeds, seed_range, out;
  std::size_t horizon = 0, jobs = 0;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--algo", algo, "sbb | gbb | saep-synthetic | maxrev-only | grid-only");
  run->add_option("--t", horizon, "Horizon T");
  run->add_option("--seeds", seeds, "Comma-separated seeds, or a..b");
  run->add_option("--seed-range", seed_range, "Inclusive seed range a..b");
  run->add_option("--jobs", jobs, "Worker threads");
  run->add_option("--out", out, "Output directory");

  auto* oracle = app.add_subcommand("oracle", "Exact expected values of fixed prices");
  std::string oracle_config;
  double p = 0.0, q = 0.0;
  oracle->add_option("--config", oracle_config, "Config or distribution spec (JSON)")->required();
  oracle->add_option("--p", p, "Seller price")->required();
  oracle->add_option("--q", q, "Reserve price")->required();

  auto* fit = app.add_subcommand("fit", "Log-log regret slope over summary files");
  std::string pattern, fit_out = "fit.json";
  std::size_t min_seeds = 5;
  fit->add_option("--glob", pattern, "Glob of summary.json files")->required();
  fit->add_option("--out", fit_out, "Output file");
  fit->add_option("--min-seeds", min_seeds, "Seeds required per horizon");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = tsm::ExperimentConfig::from_json(read_json(config_path));
      if (!algo.empty()) cfg.algorithm = tsm::parse_algorithm(algo);
      if (horizon) cfg.T = horizon;
      if (!seeds.empty()) cfg.seeds = tsm::parse_seed_list(seeds);
      if (!seed_range.empty()) cfg.seeds = tsm::parse_seed_range(seed_range);
      if (jobs) cfg.jobs = jobs;
      if (!out.empty()) cfg.out_dir = out;
      auto results = tsm::run_experiment(cfg);
      tsm::write_outputs(cfg, results);
      for (const auto& r : results) std::cout << r.summary.to_json().dump() << '\n';
    } else if (*oracle) {
      auto j = read_json(oracle_config);
      auto cfg_env = j.contains("environment") ? j["environment"] : j;
      auto dist = tsm::MarketDistribution::from_json(cfg_env);
      auto exact = dist.to_discrete();
      if (!exact) throw tsm::ConfigError("oracle needs a finite-support distribution");
      tsm::Oracle o(*exact);
      auto sbb = o.sbb_opt();
      auto gbb = o.gbb_opt();
      nlohmann::json report{{"p", p},
                            {"q", q},
                            {"values", tsm::to_json(o.expected_values(p, q))},
                            {"sbb_opt", {{"q", sbb.q}, {"value", sbb.value}}},
                            {"gbb_opt", {{"p", gbb.p}, {"q", gbb.q}, {"value", gbb.value}, {"rev", gbb.rev}}}};
      std::cout << report.dump(2) << '\n';
    } else if (*fit) {
      std::vector<tsm::SummaryRecord> runs;
      auto files = expand_glob(pattern);
      if (files.empty()) throw tsm::ConfigError("no files match " + pattern);
      for (const auto& f : files)
        for (const auto& r : read_json(f).at("runs")) runs.push_back(tsm::SummaryRecord::from_json(r));
      auto result = tsm::slope_fit(runs, min_seeds);
      nlohmann::json j = result.to_json();
      j["files"] = files;
      std::ofstream os(fit_out);
      os << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
    }
  } catch (const tsm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
