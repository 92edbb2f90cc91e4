#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsm/error.hpp"
#include "tsm/harness.hpp"

using namespace tsm;

namespace {

nlohmann::json point_mass_env() {
  return nlohmann::json::parse(R"({"kind": "discrete", "atoms": [[0.2, [0.9, 0.6], 1.0]]})");
}

ExperimentConfig small_sbb() {
  ExperimentConfig c;
  c.environment = point_mass_env();
  c.algorithm = Algorithm::Sbb;
  c.T = 10;
  c.T0 = 2;
  c.K = 2;
  return c;
}

std::string csv(const RunResult& r, bool safe) {
  std::ostringstream os;
  write_rounds_csv(os, r.rounds, safe);
  return os.str();
}

SummaryRecord fake(std::size_t T, double regret) {
  SummaryRecord s;
  s.T = T;
  s.regret = regret;
  return s;
}

}  // namespace

TEST_CASE("pseudo-regret arithmetic") {
  auto cfg = small_sbb();
  auto dist = MarketDistribution::from_json(cfg.environment);
  auto scoring = make_scoring_oracle(cfg, dist);
  CHECK(scoring.opt_value == doctest::Approx(0.7));
  CHECK(scoring.half_width == 0.0);
  auto r = run_single(cfg, dist, scoring, 7);
  REQUIRE(r.rounds.size() == 10);
  Oracle o(dist);
  double expected = 0, realized = 0;
  for (const auto& rec : r.rounds) {
    // SBB rounds score as SBB mechanisms, exploration rounds as fixed pairs.
    expected += rec.phase == Phase::Explore ? o.expected_values(rec.p, rec.q).gft : o.sbb_gft(rec.q);
    realized += rec.gft;
  }
  CHECK(r.summary.regret == doctest::Approx(10 * 0.7 - expected));
  CHECK(r.summary.realized_regret == doctest::Approx(10 * 0.7 - realized));
  CHECK(r.summary.cum_gft == doctest::Approx(realized));
  CHECK(r.summary.seed == 7);
  CHECK(r.summary.algorithm == "sbb");
}

TEST_CASE("round records are prefix sums and sbb revenue stays nonnegative") {
  auto cfg = small_sbb();
  cfg.T = 3000;
  cfg.T0 = 0;
  cfg.K = 0;
  cfg.environment = nlohmann::json::parse(
      R"({"kind": "discrete", "atoms": [[0.1, [0.8, 0.3], 0.4], [0.5, [0.6, 0.55], 0.35], [0.7, [0.4, 0.2], 0.25]]})");
  auto dist = MarketDistribution::from_json(cfg.environment);
  auto r = run_single(cfg, dist, make_scoring_oracle(cfg, dist), 3);
  double g = 0, v = 0;
  for (std::size_t k = 0; k < r.rounds.size(); ++k) {
    const auto& rec = r.rounds[k];
    CHECK(rec.t == k + 1);
    g += rec.gft;
    v += rec.rev;
    CHECK(rec.cum_gft == doctest::Approx(g).epsilon(1e-12));
    CHECK(rec.cum_rev == doctest::Approx(v).epsilon(1e-12));
    CHECK(rec.cum_rev >= -1e-12);
    if (rec.phase == Phase::Ucb) CHECK(rec.rev == 0.0);
  }
}

TEST_CASE("runs are byte-identical per seed") {
  auto cfg = small_sbb();
  cfg.T = 2000;
  cfg.T0 = 0;
  cfg.K = 0;
  cfg.seeds = {1, 2, 3, 4};
  auto a = run_experiment(cfg);
  cfg.jobs = 3;
  auto b = run_experiment(cfg);
  REQUIRE(a.size() == 4);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(csv(a[k], false) == csv(b[k], false));
    CHECK(a[k].summary.regret == b[k].summary.regret);
  }
  CHECK(csv(a[0], false) != csv(a[1], false));
  auto header = csv(a[0], false).substr(0, csv(a[0], false).find('\n'));
  CHECK(header == "t,phase,q_t,p_t,gft,rev,cum_gft,cum_rev");

  cfg.algorithm = Algorithm::Gbb;
  cfg.jobs = 1;
  cfg.T = 3000;
  cfg.seeds = {5};
  auto g1 = run_experiment(cfg);
  auto g2 = run_experiment(cfg);
  CHECK(csv(g1[0], true) == csv(g2[0], true));
  CHECK(csv(g1[0], true).rfind("t,phase,q_t,p_t,gft,rev,cum_gft,cum_rev,safe_set_size", 0) == 0);
}

TEST_CASE("gbb keeps its budget on a bounded-density environment") {
  ExperimentConfig cfg;
  cfg.environment = nlohmann::json::parse(
      R"({"kind": "bounded_density", "family": "correlated_uniform", "n": 2, "rho": 0.8, "lattice": 10})");
  cfg.algorithm = Algorithm::Gbb;
  cfg.T = 5000;
  cfg.seeds = parse_seed_range("0..19");
  auto runs = run_experiment(cfg);
  int ok = 0;
  for (const auto& r : runs) ok += r.summary.cum_rev >= 0.0;
  CHECK(ok >= 18);
  CHECK(runs[0].summary.extra.contains("beta"));
  CHECK(runs[0].summary.extra.contains("zeta_bar"));
}

TEST_CASE("synthetic bandit runs through the harness") {
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::SaepSynthetic;
  cfg.bandit = nlohmann::json::parse(R"({"rewards": [[0.9, 0.2], [0.6, 0.5]], "costs": [[0.5, -0.1], [-0.2, -0.3]]})");
  cfg.T = 2000;
  cfg.seeds = {1, 2};
  auto runs = run_experiment(cfg);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].saep_rounds.size() == 2000);
  std::ostringstream os;
  write_saep_csv(os, runs[0].saep_rounds);
  CHECK(os.str().rfind("t,line,arm,reward_mean,cost_mean,cum_regret,cum_violation", 0) == 0);
}

TEST_CASE("outputs on disk") {
  auto dir = std::filesystem::temp_directory_path() / "tsm_harness_test";
  std::filesystem::remove_all(dir);
  auto cfg = small_sbb();
  cfg.seeds = {0, 1};
  cfg.out_dir = dir.string();
  write_outputs(cfg, run_experiment(cfg));
  CHECK(std::filesystem::exists(dir / "rounds_seed0.csv"));
  CHECK(std::filesystem::exists(dir / "rounds_seed1.csv"));
  std::ifstream in(dir / "summary.json");
  auto j = nlohmann::json::parse(in);
  CHECK(j["runs"].size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config parsing and validation") {
  CHECK(parse_seed_range("3..6") == std::vector<std::uint64_t>{3, 4, 5, 6});
  CHECK(parse_seed_list("1,4,9") == std::vector<std::uint64_t>{1, 4, 9});
  CHECK(parse_seed_list("2..3") == std::vector<std::uint64_t>{2, 3});
  CHECK_THROWS_AS(parse_seed_range("6..3"), ConfigError);
  CHECK_THROWS_AS(parse_seed_range("x..3"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("1,,2"), ConfigError);
  CHECK(parse_algorithm("maxrev-only") == Algorithm::MaxRevOnly);
  CHECK_THROWS_AS(parse_algorithm("nope"), ConfigError);

  auto cfg = small_sbb();
  CHECK_NOTHROW(cfg.validate());
  cfg.T0 = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.algorithm = Algorithm::GridOnly;
  CHECK_NOTHROW(cfg.validate());
  cfg = small_sbb();
  cfg.seeds = {1, 1};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.seeds = {1};
  cfg.delta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  auto j = nlohmann::json::parse(R"({"algorithm": "gbb", "T": 5000, "seed_range": "0..4", "zeta": 0.1,
                                     "environment": {"kind": "discrete", "atoms": [[0.2, [0.9], 1.0]]}})");
  auto c = ExperimentConfig::from_json(j);
  CHECK(c.algorithm == Algorithm::Gbb);
  CHECK(c.seeds.size() == 5);
  CHECK(c.zeta_mode == ZetaMode::Fixed);
  auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.T == 5000);
  CHECK(back.zeta_fixed == 0.1);
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"T": "many"})")), ConfigError);
}

TEST_CASE("slope fits") {
  std::vector<SummaryRecord> runs;
  for (double T : {1e3, 1e4, 1e5})
    for (int s = 0; s < 5; ++s) runs.push_back(fake(static_cast<std::size_t>(T), std::pow(T, 2.0 / 3.0)));
  auto f = slope_fit(runs);
  CHECK(std::fabs(f.slope - 2.0 / 3.0) <= 1e-9);
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK_FALSE(f.clipped);

  runs.clear();
  for (std::size_t T : {100u, 200u, 400u})
    for (int s = 0; s < 5; ++s) runs.push_back(fake(T, 42.0));
  CHECK(std::fabs(slope_fit(runs).slope) <= 1e-12);

  runs.clear();
  for (std::size_t T : {100u, 200u, 400u})
    for (int s = 0; s < 5; ++s) runs.push_back(fake(T, T == 100 ? -3.0 : 10.0));
  CHECK(slope_fit(runs).clipped);

  runs.pop_back();
  CHECK_THROWS_AS(slope_fit(runs), ContractViolation);
  runs.clear();
  for (std::size_t T : {100u, 200u})
    for (int s = 0; s < 5; ++s) runs.push_back(fake(T, 1.0));
  CHECK_THROWS_AS(slope_fit(runs), ContractViolation);
}

TEST_CASE("summary json round trip") {
  SummaryRecord s = fake(100, 3.5);
  s.seed = 9;
  s.extra["beta"] = 12.0;
  auto back = SummaryRecord::from_json(s.to_json());
  CHECK(back.seed == 9);
  CHECK(back.regret == 3.5);
}
