#include "tsm/line_bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsm/error.hpp"

namespace tsm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LineBandit::LineBandit(const LineBanditParams& params) : params_(params) {
  if (params_.line_lengths.empty()) throw ConfigError("bandit needs at least one line");
  if (params_.T == 0) throw ConfigError("bandit horizon must be positive");
  if (!(params_.delta > 0.0 && params_.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  std::size_t arms = 0;
  for (std::size_t m : params_.line_lengths) arms += m;
  if (arms == 0) throw ConfigError("bandit has no arms");
  log_term_ = std::log(2.0 * static_cast<double>(arms) * static_cast<double>(params_.T) / params_.delta);
  const std::size_t n = params_.line_lengths.size();
  stats_.resize(n);
  alive_.resize(n);
  alive_list_.resize(n);
  line_max_upper_.assign(n, -kInf);
  line_argmax_upper_.assign(n, 0);
  line_max_lower_.assign(n, -kInf);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = params_.line_lengths[i];
    stats_[i].resize(m);
    alive_[i].assign(m, 1);
    for (std::size_t j = 0; j < m; ++j) alive_list_[i].push_back(j);
    alive_total_ += m;
    refresh_line(i);
  }
}

double LineBandit::bonus(std::size_t count) const {
  if (count == 0) return kInf;
  return params_.scale * std::sqrt(log_term_ / (2.0 * static_cast<double>(count)));
}

double LineBandit::reward_upper(std::size_t i, std::size_t j) const {
  const ArmStats& s = stats_[i][j];
  if (s.count == 0) return kInf;
  return s.reward_sum / static_cast<double>(s.count) + bonus(s.count);
}

double LineBandit::reward_lower(std::size_t i, std::size_t j) const {
  const ArmStats& s = stats_[i][j];
  if (s.count == 0) return -kInf;
  return s.reward_sum / static_cast<double>(s.count) - bonus(s.count);
}

double LineBandit::cost_lower(std::size_t i, std::size_t j) const {
  const ArmStats& s = stats_[i][j];
  if (s.count == 0) return -kInf;
  return s.cost_sum / static_cast<double>(s.count) - bonus(s.count);
}

void LineBandit::refresh_line(std::size_t i) {
  line_max_upper_[i] = -kInf;
  line_max_lower_[i] = -kInf;
  line_argmax_upper_[i] = 0;
  for (std::size_t j : alive_list_[i]) {
    double u = reward_upper(i, j);
    if (u > line_max_upper_[i]) {
      line_max_upper_[i] = u;
      line_argmax_upper_[i] = j;
    }
    line_max_lower_[i] = std::max(line_max_lower_[i], reward_lower(i, j));
  }
}

std::pair<std::size_t, std::size_t> LineBandit::select() const {
  if (alive_total_ == 0) throw AllArmsEliminated("every arm has been eliminated");
  std::size_t best_line = 0;
  double best_upper = -kInf;
  bool found = false;
  double bar = -kInf;
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    if (alive_list_[i].empty()) continue;
    if (!found || line_max_upper_[i] > best_upper) {
      best_upper = line_max_upper_[i];
      best_line = i;
      found = true;
    }
    bar = std::max(bar, line_max_lower_[i]);
  }
  for (std::size_t j : alive_list_[best_line])
    if (reward_upper(best_line, j) >= bar) return {best_line, j};
  // Unreachable: the line's own argmax clears the bar.
  return {best_line, line_argmax_upper_[best_line]};
}

std::vector<std::size_t> LineBandit::revealed(std::size_t i, std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t k : alive_list_[i])
    if (k >= j) out.push_back(k);
  return out;
}

void LineBandit::update(std::pair<std::size_t, std::size_t> pulled, const std::vector<ArmObservation>& obs) {
  auto [i, jt] = pulled;
  if (i >= stats_.size() || jt >= stats_[i].size() || !alive_[i][jt])
    throw ContractViolation("update for an arm outside the safe set");
  auto& list = alive_list_[i];
  auto first = std::lower_bound(list.begin(), list.end(), jt);
  if (static_cast<std::size_t>(list.end() - first) != obs.size())
    throw ContractViolation("observations do not cover the revealed arms");
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (obs[k].j != first[k]) throw ContractViolation("observation for an arm outside the revealed set");
    ArmStats& s = stats_[i][obs[k].j];
    ++s.count;
    s.reward_sum += obs[k].reward;
    s.cost_sum += obs[k].cost;
  }
  std::vector<std::size_t> next;
  next.reserve(obs.size());
  for (auto it = first; it != list.end(); ++it)
    if (cost_lower(i, *it) <= 0.0) next.push_back(*it);
  for (std::size_t j : list) alive_[i][j] = 0;
  for (std::size_t j : next) alive_[i][j] = 1;
  alive_total_ -= list.size() - next.size();
  list = std::move(next);
  refresh_line(i);
}

SyntheticInstance SyntheticInstance::from_json(const nlohmann::json& j) {
  SyntheticInstance inst;
  try {
    inst.reward = j.at("rewards").get<std::vector<std::vector<double>>>();
    inst.cost = j.at("costs").get<std::vector<std::vector<double>>>();
    inst.noisy = j.value("noise", std::string("bernoulli")) != "none";
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed bandit instance: ") + e.what());
  }
  if (inst.reward.size() != inst.cost.size() || inst.reward.empty()) throw ConfigError("rewards/costs shape mismatch");
  for (std::size_t i = 0; i < inst.reward.size(); ++i) {
    if (inst.reward[i].size() != inst.cost[i].size() || inst.reward[i].empty())
      throw ConfigError("rewards/costs shape mismatch");
    for (std::size_t k = 0; k < inst.reward[i].size(); ++k)
      if (std::fabs(inst.reward[i][k]) > 1.0 || std::fabs(inst.cost[i][k]) > 1.0)
        throw ConfigError("arm means must lie in [-1,1]");
  }
  return inst;
}

double SyntheticInstance::sample(double mean, Rng& rng) const {
  if (!noisy) return mean;
  double lo = std::clamp(mean - 0.5, -1.0, 0.0);
  return lo + (rng.bernoulli(mean - lo) ? 1.0 : 0.0);
}

std::pair<std::size_t, std::size_t> SyntheticInstance::feasible_optimum() const {
  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_r = -kInf;
  for (std::size_t i = 0; i < reward.size(); ++i)
    for (std::size_t j = 0; j < reward[i].size(); ++j)
      if (cost[i][j] <= 0.0 && reward[i][j] > best_r) {
        best_r = reward[i][j];
        best = {i, j};
      }
  if (best_r == -kInf) throw ConfigError("instance has no feasible arm");
  return best;
}

SaepRun run_synthetic(const SyntheticInstance& inst, std::size_t T, double delta, Rng& rng, bool keep_rounds) {
  LineBanditParams params;
  for (const auto& line : inst.reward) params.line_lengths.push_back(line.size());
  params.T = T;
  params.delta = delta;
  LineBandit bandit(params);

  std::pair<std::size_t, std::size_t> opt{0, 0};
  double opt_reward = 0.0;
  bool has_opt = true;
  try {
    opt = inst.feasible_optimum();
    opt_reward = inst.reward[opt.first][opt.second];
  } catch (const ConfigError&) {
    has_opt = false;
  }

  SaepRun run;
  run.optimum_retained = has_opt;
  std::vector<ArmObservation> obs;
  for (std::size_t t = 1; t <= T; ++t) {
    std::pair<std::size_t, std::size_t> a;
    try {
      a = bandit.select();
    } catch (const AllArmsEliminated&) {
      run.eliminated_all = true;
      run.eliminated_at = t;
      run.optimum_retained = false;
      break;
    }
    obs.clear();
    for (std::size_t j : bandit.revealed(a.first, a.second))
      obs.push_back({j, inst.sample(inst.reward[a.first][j], rng), inst.sample(inst.cost[a.first][j], rng)});
    bandit.update(a, obs);
    double r = inst.reward[a.first][a.second];
    double c = inst.cost[a.first][a.second];
    if (has_opt) run.cum_regret += opt_reward - r;
    run.cum_violation += std::max(c, 0.0);
    if (has_opt && !bandit.alive(opt.first, opt.second)) run.optimum_retained = false;
    if (keep_rounds) run.rounds.push_back({t, a.first, a.second, r, c, run.cum_regret, run.cum_violation});
  }
  return run;
}

}  // namespace tsm
