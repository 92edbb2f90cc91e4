#include "tsm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "tsm/error.hpp"

namespace tsm {

namespace {

// Plays the grid-estimation mechanism (q = 0, p = b̲) for the whole horizon.
class GridOnlyLearner final : public Learner {
 public:
  explicit GridOnlyLearner(std::size_t T) : T_(T) {}
  Mechanism act() override {
    if (t_ >= T_) throw HorizonExhausted("horizon exhausted");
    return Mechanism::strong_budget_balanced(0.0);
  }
  void observe(const Observation&) override { ++t_; }
  Phase phase() const override { return Phase::Grid; }
  std::size_t round() const override { return t_; }
  std::size_t horizon() const override { return T_; }

 private:
  std::size_t T_;
  std::size_t t_ = 0;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char* zeta_mode_name(ZetaMode m) {
  switch (m) {
    case ZetaMode::Auto:
      return "auto";
    case ZetaMode::Independent:
      return "independent";
    case ZetaMode::BoundedDensity:
      return "bounded_density";
    case ZetaMode::Fixed:
      return "fixed";
  }
  return "auto";
}

ZetaMode parse_zeta_mode(const std::string& s) {
  if (s == "auto") return ZetaMode::Auto;
  if (s == "independent") return ZetaMode::Independent;
  if (s == "bounded_density") return ZetaMode::BoundedDensity;
  if (s == "fixed") return ZetaMode::Fixed;
  throw ConfigError("unknown zeta mode '" + s + "'");
}

bool is_market(Algorithm a) { return a != Algorithm::SaepSynthetic; }

struct MechanismKey {
  int kind;
  double p, q, delta;
  bool operator<(const MechanismKey& o) const {
    return std::tie(kind, p, q, delta) < std::tie(o.kind, o.p, o.q, o.delta);
  }
};

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Sbb:
      return "sbb";
    case Algorithm::Gbb:
      return "gbb";
    case Algorithm::SaepSynthetic:
      return "saep-synthetic";
    case Algorithm::MaxRevOnly:
      return "maxrev-only";
    case Algorithm::GridOnly:
      return "grid-only";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::Sbb, Algorithm::Gbb, Algorithm::SaepSynthetic, Algorithm::MaxRevOnly,
                      Algorithm::GridOnly})
    if (s == algorithm_name(a)) return a;
  throw ConfigError("unknown algorithm '" + s + "'");
}

std::vector<std::uint64_t> parse_seed_range(const std::string& s) {
  auto dots = s.find("..");
  if (dots == std::string::npos) throw ConfigError("seed range must look like a..b");
  try {
    std::uint64_t a = std::stoull(s.substr(0, dots));
    std::uint64_t b = std::stoull(s.substr(dots + 2));
    if (b < a) throw ConfigError("seed range is empty");
    std::vector<std::uint64_t> out;
    for (std::uint64_t x = a; x <= b; ++x) out.push_back(x);
    return out;
  } catch (const std::logic_error&) {
    throw ConfigError("malformed seed range '" + s + "'");
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  if (s.find("..") != std::string::npos) return parse_seed_range(s);
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(std::stoull(item));
    } catch (const std::logic_error&) {
      throw ConfigError("malformed seed '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (T == 0) throw ConfigError("T must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (seeds.empty()) throw ConfigError("no seeds given");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  if (jobs == 0) throw ConfigError("jobs must be positive");
  if (algorithm == Algorithm::SaepSynthetic) {
    if (bandit.is_null()) throw ConfigError("saep-synthetic needs a 'bandit' instance");
    SyntheticInstance::from_json(bandit);
    return;
  }
  if (environment.is_null()) throw ConfigError("config has no 'environment'");
  try {
    MarketDistribution::from_json(environment);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (algorithm != Algorithm::GridOnly) {
    if (effective_k() == 0) throw ConfigError("K must be positive");
    if (T < 3 * effective_t0())
      throw ConfigError("T = " + std::to_string(T) + " is smaller than 3 T0 = " + std::to_string(3 * effective_t0()));
  }
  if (algorithm == Algorithm::Gbb || algorithm == Algorithm::MaxRevOnly) {
    if (T < 2) throw ConfigError("GBB needs T >= 2");
    if (zeta_mode == ZetaMode::Fixed && !(zeta_fixed >= 0.0)) throw ConfigError("fixed zeta must be >= 0");
  }
  if (oracle_samples == 0) throw ConfigError("oracle_samples must be positive");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  if (!environment.is_null()) j["environment"] = environment;
  if (!bandit.is_null()) j["bandit"] = bandit;
  j["algorithm"] = algorithm_name(algorithm);
  j["T"] = T;
  j["K"] = effective_k();
  j["T0"] = effective_t0();
  j["delta"] = delta;
  if (beta) j["beta"] = *beta;
  j["c_beta"] = c_beta;
  j["zeta_mode"] = zeta_mode_name(zeta_mode);
  if (zeta_mode == ZetaMode::Fixed) j["zeta"] = zeta_fixed;
  j["seeds"] = seeds;
  j["sbb_union_uniform"] = sbb_union_uniform;
  j["restrict_q_le_p"] = restrict_q_le_p;
  j["out_dir"] = out_dir;
  j["oracle_samples"] = oracle_samples;
  j["oracle_seed"] = oracle_seed;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("environment")) c.environment = j["environment"];
    if (j.contains("bandit")) c.bandit = j["bandit"];
    if (j.contains("algorithm")) c.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    c.T = j.value("T", c.T);
    c.K = j.value("K", c.K);
    c.T0 = j.value("T0", c.T0);
    c.delta = j.value("delta", c.delta);
    if (j.contains("beta")) c.beta = j["beta"].get<double>();
    c.c_beta = j.value("c_beta", c.c_beta);
    if (j.contains("zeta_mode")) c.zeta_mode = parse_zeta_mode(j["zeta_mode"].get<std::string>());
    if (j.contains("zeta")) {
      c.zeta_fixed = j["zeta"].get<double>();
      if (!j.contains("zeta_mode")) c.zeta_mode = ZetaMode::Fixed;
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("seed_range")) c.seeds = parse_seed_range(j["seed_range"].get<std::string>());
    c.sbb_union_uniform = j.value("sbb_union_uniform", c.sbb_union_uniform);
    c.restrict_q_le_p = j.value("restrict_q_le_p", c.restrict_q_le_p);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.jobs = j.value("jobs", c.jobs);
    c.oracle_samples = j.value("oracle_samples", c.oracle_samples);
    c.oracle_seed = j.value("oracle_seed", c.oracle_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

nlohmann::json SummaryRecord::to_json() const {
  nlohmann::json j{{"seed", seed},
                   {"T", T},
                   {"algorithm", algorithm},
                   {"regret", regret},
                   {"realized_regret", realized_regret},
                   {"cum_rev", cum_rev},
                   {"cum_gft", cum_gft},
                   {"opt_value", opt_value},
                   {"oracle_half_width", oracle_half_width},
                   {"wall_time", wall_time}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

SummaryRecord SummaryRecord::from_json(const nlohmann::json& j) {
  SummaryRecord s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.T = j.at("T").get<std::size_t>();
  s.regret = j.at("regret").get<double>();
  s.realized_regret = j.value("realized_regret", 0.0);
  s.cum_rev = j.value("cum_rev", 0.0);
  s.cum_gft = j.value("cum_gft", 0.0);
  s.opt_value = j.value("opt_value", 0.0);
  s.oracle_half_width = j.value("oracle_half_width", 0.0);
  s.wall_time = j.value("wall_time", 0.0);
  s.algorithm = j.value("algorithm", std::string());
  return s;
}

std::unique_ptr<Learner> make_learner(const ExperimentConfig& cfg, const MarketDistribution& dist,
                                      std::uint64_t seed) {
  Rng rng(seed, kLearnerStream);
  switch (cfg.algorithm) {
    case Algorithm::Sbb: {
      SbbParams p;
      p.T = cfg.T;
      p.T0 = cfg.T0;
      p.K = cfg.K;
      p.delta = cfg.delta;
      p.sbb_union_uniform = cfg.sbb_union_uniform;
      return std::make_unique<SbbLearner>(p, rng);
    }
    case Algorithm::Gbb:
    case Algorithm::MaxRevOnly: {
      GbbParams p;
      p.T = cfg.T;
      p.T0 = cfg.T0;
      p.K = cfg.K;
      p.delta = cfg.delta;
      p.beta = cfg.beta;
      p.c_beta = cfg.c_beta;
      if (cfg.algorithm == Algorithm::MaxRevOnly) p.beta = std::numeric_limits<double>::infinity();
      p.zeta_mode = cfg.zeta_mode;
      p.zeta_fixed = cfg.zeta_fixed;
      p.is_independent = dist.is_independent();
      p.density_bound = dist.density_bound();
      p.restrict_q_le_p = cfg.restrict_q_le_p;
      return std::make_unique<GbbLearner>(p, rng);
    }
    case Algorithm::GridOnly:
      return std::make_unique<GridOnlyLearner>(cfg.T);
    case Algorithm::SaepSynthetic:
      break;
  }
  throw ConfigError("algorithm has no market learner");
}

ScoringOracle make_scoring_oracle(const ExperimentConfig& cfg, const MarketDistribution& dist) {
  ScoringOracle s;
  if (auto exact = dist.to_discrete()) {
    s.oracle = std::make_shared<Oracle>(*exact);
  } else {
    Rng rng(cfg.oracle_seed, kOracleStream);
    s.oracle = std::make_shared<Oracle>(dist.empirical_proxy(cfg.oracle_samples, rng));
    s.half_width = 2.0 * std::sqrt(std::log(2.0 / cfg.delta) / (2.0 * static_cast<double>(cfg.oracle_samples)));
  }
  const bool gbb = cfg.algorithm == Algorithm::Gbb || cfg.algorithm == Algorithm::MaxRevOnly;
  s.opt_value = gbb ? s.oracle->gbb_opt().value : s.oracle->sbb_opt().value;
  return s;
}

RunResult run_synthetic_seed(const ExperimentConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  auto start = std::chrono::steady_clock::now();
  RunResult res;
  SummaryRecord& sum = res.summary;
  sum.seed = seed;
  sum.T = cfg.T;
  sum.algorithm = algorithm_name(cfg.algorithm);
  SyntheticInstance inst = SyntheticInstance::from_json(cfg.bandit);
  Rng rng(seed, kEnvironmentStream);
  SaepRun run = run_synthetic(inst, cfg.T, cfg.delta, rng, opts.keep_rounds);
  res.saep_rounds = std::move(run.rounds);
  sum.regret = sum.realized_regret = run.cum_regret;
  sum.extra = {{"cum_violation", run.cum_violation},
               {"optimum_retained", run.optimum_retained},
               {"eliminated_all", run.eliminated_all}};
  sum.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

RunResult run_single(const ExperimentConfig& cfg, const MarketDistribution& dist, const ScoringOracle& scoring,
                     std::uint64_t seed, const RunOptions& opts) {
  auto start = std::chrono::steady_clock::now();
  RunResult res;
  SummaryRecord& sum = res.summary;
  sum.seed = seed;
  sum.T = cfg.T;
  sum.algorithm = algorithm_name(cfg.algorithm);

  if (cfg.algorithm == Algorithm::SaepSynthetic) return run_synthetic_seed(cfg, seed, opts);

  auto learner = make_learner(cfg, dist, seed);
  Rng env_rng(seed, kEnvironmentStream);
  std::map<MechanismKey, double> expected_cache;
  ValuationProfile prof;
  RoundRecord rec;
  double expected_sum = 0.0;
  if (opts.keep_rounds) res.rounds.reserve(cfg.T);
  for (std::size_t t = 1; t <= cfg.T; ++t) {
    Mechanism m = learner->act();
    Phase phase = learner->phase();
    dist.sample_into(env_rng, prof);
    RoundResult r = run_round(prof, m);
    learner->observe(observation_of(r));

    MechanismKey key{static_cast<int>(m.kind()), m.base_price(), m.reserve(), m.delta()};
    auto it = expected_cache.find(key);
    if (it == expected_cache.end()) it = expected_cache.emplace(key, scoring.oracle->expected(m).gft).first;
    expected_sum += it->second;

    rec.t = t;
    rec.phase = phase;
    rec.q = r.reserve;
    rec.p = r.seller_price;
    rec.gft = r.outcome.gft;
    rec.rev = r.outcome.revenue;
    rec.cum_gft += rec.gft;
    rec.cum_rev += rec.rev;
    rec.safe_set_size = learner->safe_set_size();
    if (opts.on_round) opts.on_round(*learner, rec);
    if (opts.keep_rounds) res.rounds.push_back(rec);
  }
  const double T = static_cast<double>(cfg.T);
  sum.opt_value = scoring.opt_value;
  sum.oracle_half_width = scoring.half_width;
  sum.regret = T * scoring.opt_value - expected_sum;
  sum.realized_regret = T * scoring.opt_value - rec.cum_gft;
  sum.cum_rev = rec.cum_rev;
  sum.cum_gft = rec.cum_gft;
  if (auto* g = dynamic_cast<const GbbLearner*>(learner.get())) {
    sum.extra = {{"beta", g->beta()},
                 {"zeta_bar", g->zeta_bar()},
                 {"stop_time", g->stop_time()},
                 {"saep_start", g->saep_start()},
                 {"fell_back", g->fell_back()}};
  }
  sum.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  std::optional<MarketDistribution> dist;
  ScoringOracle scoring;
  if (is_market(cfg.algorithm)) {
    dist = MarketDistribution::from_json(cfg.environment);
    scoring = make_scoring_oracle(cfg, *dist);
  }
  std::vector<RunResult> results(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cfg.seeds.size();) {
      try {
        results[i] = dist ? run_single(cfg, *dist, scoring, cfg.seeds[i], opts)
                          : run_synthetic_seed(cfg, cfg.seeds[i], opts);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t n = std::min(cfg.jobs, cfg.seeds.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

void write_rounds_csv(std::ostream& os, const std::vector<RoundRecord>& rounds, bool with_safe_set) {
  os << "t,phase,q_t,p_t,gft,rev,cum_gft,cum_rev";
  if (with_safe_set) os << ",safe_set_size";
  os << '\n';
  for (const auto& r : rounds) {
    os << r.t << ',' << phase_name(r.phase) << ',' << fmt(r.q) << ',' << fmt(r.p) << ',' << fmt(r.gft) << ','
       << fmt(r.rev) << ',' << fmt(r.cum_gft) << ',' << fmt(r.cum_rev);
    if (with_safe_set) os << ',' << r.safe_set_size;
    os << '\n';
  }
}

void write_saep_csv(std::ostream& os, const std::vector<SaepRound>& rounds) {
  os << "t,line,arm,reward_mean,cost_mean,cum_regret,cum_violation\n";
  for (const auto& r : rounds)
    os << r.t << ',' << r.line << ',' << r.arm << ',' << fmt(r.reward_mean) << ',' << fmt(r.cost_mean) << ','
       << fmt(r.cum_regret) << ',' << fmt(r.cum_violation) << '\n';
}

void write_outputs(const ExperimentConfig& cfg, const std::vector<RunResult>& results) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const bool gbb = cfg.algorithm == Algorithm::Gbb || cfg.algorithm == Algorithm::MaxRevOnly;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : results) {
    fs::path path = fs::path(cfg.out_dir) / ("rounds_seed" + std::to_string(r.summary.seed) + ".csv");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    if (cfg.algorithm == Algorithm::SaepSynthetic)
      write_saep_csv(os, r.saep_rounds);
    else
      write_rounds_csv(os, r.rounds, gbb);
    runs.push_back(r.summary.to_json());
  }
  nlohmann::json summary{{"config", cfg.to_json()}, {"runs", runs}};
  std::ofstream os(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
  if (!os) throw Error("cannot write summary.json");
  os << summary.dump(2) << '\n';
}

nlohmann::json SlopeFit::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (auto [T, r] : points) pts.push_back({{"T", T}, {"mean_regret", r}});
  return {{"slope", slope}, {"intercept", intercept}, {"r2", r2}, {"clipped", clipped}, {"points", pts}};
}

SlopeFit slope_fit(const std::vector<SummaryRecord>& runs, std::size_t min_seeds) {
  std::map<std::size_t, std::vector<double>> by_t;
  for (const auto& r : runs) by_t[r.T].push_back(r.regret);
  if (by_t.size() < 3) throw ContractViolation("slope fit needs at least 3 distinct horizons");
  SlopeFit fit;
  std::vector<double> xs, ys;
  for (const auto& [T, regrets] : by_t) {
    if (regrets.size() < min_seeds)
      throw ContractViolation("horizon " + std::to_string(T) + " has fewer than " + std::to_string(min_seeds) +
                              " seeds");
    double mean = 0.0;
    for (double r : regrets) mean += r;
    mean /= static_cast<double>(regrets.size());
    fit.points.push_back({static_cast<double>(T), mean});
    if (mean <= 0.0) {
      mean = 1.0;
      fit.clipped = true;
    }
    xs.push_back(std::log(static_cast<double>(T)));
    ys.push_back(std::log(mean));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace tsm
