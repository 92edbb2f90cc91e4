#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tsm/environment.hpp"
#include "tsm/gbb_learner.hpp"
#include "tsm/learner.hpp"
#include "tsm/line_bandit.hpp"
#include "tsm/oracle.hpp"
#include "tsm/sbb_learner.hpp"

namespace tsm {

enum class Algorithm { Sbb, Gbb, SaepSynthetic, MaxRevOnly, GridOnly };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct ExperimentConfig {
  nlohmann::json environment;  // distribution spec
  nlohmann::json bandit;       // synthetic instance for saep-synthetic
  Algorithm algorithm = Algorithm::Sbb;
  std::size_t T = 1000;
  std::size_t K = 0;   // 0: default for T
  std::size_t T0 = 0;  // 0: default for T
  double delta = 0.05;
  std::optional<double> beta;
  double c_beta = 1.0;
  ZetaMode zeta_mode = ZetaMode::Auto;
  double zeta_fixed = 0.0;
  std::vector<std::uint64_t> seeds{0};
  bool sbb_union_uniform = true;
  bool restrict_q_le_p = false;
  std::string out_dir = "out";
  std::size_t jobs = 1;
  // Samples of the fixed proxy that scores continuous environments.
  std::size_t oracle_samples = 20000;
  std::uint64_t oracle_seed = 0;

  std::size_t effective_t0() const { return T0 ? T0 : default_t0(T); }
  std::size_t effective_k() const { return K ? K : default_k(T); }
  // Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// "a..b" inclusive, or a comma-separated list.
std::vector<std::uint64_t> parse_seed_range(const std::string& s);
std::vector<std::uint64_t> parse_seed_list(const std::string& s);

struct RoundRecord {
  std::size_t t = 0;
  Phase phase = Phase::Grid;
  double q = 0.0;
  double p = 0.0;
  double gft = 0.0;
  double rev = 0.0;
  double cum_gft = 0.0;
  double cum_rev = 0.0;
  std::size_t safe_set_size = 0;
};

struct SummaryRecord {
  std::uint64_t seed = 0;
  std::size_t T = 0;
  double regret = 0.0;           // T opt - sum of expected GFT of played mechanisms
  double realized_regret = 0.0;  // T opt - sum of realized GFT
  double cum_rev = 0.0;
  double cum_gft = 0.0;
  double opt_value = 0.0;
  double oracle_half_width = 0.0;  // nonzero when scored against a sampled proxy
  double wall_time = 0.0;          // seconds; not reproducible
  std::string algorithm;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static SummaryRecord from_json(const nlohmann::json& j);
};

struct RunResult {
  std::vector<RoundRecord> rounds;
  std::vector<SaepRound> saep_rounds;
  SummaryRecord summary;
};

struct RunOptions {
  bool keep_rounds = true;
  // Called after every market round with the learner state.
  std::function<void(const Learner&, const RoundRecord&)> on_round;
};

// Builds the learner for a market algorithm.
std::unique_ptr<Learner> make_learner(const ExperimentConfig& cfg, const MarketDistribution& dist,
                                      std::uint64_t seed);

// Exact oracle, or the oracle of a fixed sampled proxy for continuous kinds.
struct ScoringOracle {
  std::shared_ptr<Oracle> oracle;
  double half_width = 0.0;
  double opt_value = 0.0;
};
ScoringOracle make_scoring_oracle(const ExperimentConfig& cfg, const MarketDistribution& dist);

RunResult run_single(const ExperimentConfig& cfg, const MarketDistribution& dist, const ScoringOracle& scoring,
                     std::uint64_t seed, const RunOptions& opts = {});

RunResult run_synthetic_seed(const ExperimentConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});

// All seeds of the config, in seed order, using cfg.jobs worker threads.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

void write_rounds_csv(std::ostream& os, const std::vector<RoundRecord>& rounds, bool with_safe_set);
void write_saep_csv(std::ostream& os, const std::vector<SaepRound>& rounds);
// rounds_seed<k>.csv per seed and summary.json into cfg.out_dir.
void write_outputs(const ExperimentConfig& cfg, const std::vector<RunResult>& results);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool clipped = false;  // some mean regret was <= 0 and replaced by 1
  std::vector<std::pair<double, double>> points;  // (T, mean regret)
  nlohmann::json to_json() const;
};

// OLS of log(mean regret) on log(T). Needs >= 3 horizons with >= 5 seeds each
// (throws ContractViolation otherwise).
SlopeFit slope_fit(const std::vector<SummaryRecord>& runs, std::size_t min_seeds = 5);

}  // namespace tsm
