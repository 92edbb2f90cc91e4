#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsm/rng.hpp"

namespace tsm {

struct ArmStats {
  std::size_t count = 0;
  double reward_sum = 0.0;
  double cost_sum = 0.0;
};

struct ArmObservation {
  std::size_t j = 0;
  double reward = 0.0;
  double cost = 0.0;
};

struct LineBanditParams {
  std::vector<std::size_t> line_lengths;
  std::size_t T = 0;
  double delta = 0.05;
  double scale = 2.0;  // bonus scale for rewards and costs in [-1, 1]
};

// Successive arm elimination with precedences over a multi-line feedback
// graph. Pulling (i, j) reveals every surviving (i, k) with k >= j. The safe set
// of the played line shrinks to the arms at or after the pulled one whose cost
// lower bound is still <= 0.
class LineBandit {
 public:
  explicit LineBandit(const LineBanditParams& params);

  // Throws AllArmsEliminated when the safe set is empty.
  std::pair<std::size_t, std::size_t> select() const;
  // obs must list exactly the surviving arms j >= pulled.second, ascending.
  void update(std::pair<std::size_t, std::size_t> pulled, const std::vector<ArmObservation>& obs);

  // Surviving arms of line i with index >= j, ascending.
  std::vector<std::size_t> revealed(std::size_t i, std::size_t j) const;

  std::size_t lines() const { return stats_.size(); }
  std::size_t line_length(std::size_t i) const { return stats_[i].size(); }
  bool alive(std::size_t i, std::size_t j) const { return alive_[i][j] != 0; }
  std::size_t safe_set_size() const { return alive_total_; }
  const ArmStats& stats(std::size_t i, std::size_t j) const { return stats_[i][j]; }
  double bonus(std::size_t count) const;
  double reward_upper(std::size_t i, std::size_t j) const;
  double reward_lower(std::size_t i, std::size_t j) const;
  double cost_lower(std::size_t i, std::size_t j) const;
  double log_term() const { return log_term_; }

 private:
  void refresh_line(std::size_t i);

  LineBanditParams params_;
  double log_term_ = 0.0;  // ln(2 |A| T / delta)
  std::vector<std::vector<ArmStats>> stats_;
  std::vector<std::vector<char>> alive_;
  std::vector<std::vector<std::size_t>> alive_list_;
  std::size_t alive_total_ = 0;
  // Per-line cache over surviving arms.
  std::vector<double> line_max_upper_;
  std::vector<std::size_t> line_argmax_upper_;
  std::vector<double> line_max_lower_;
};

// Synthetic instance: per-arm expected reward and cost, noisy feedback of
// range one (a two-point distribution on [lo, lo + 1] with the given mean).
struct SyntheticInstance {
  std::vector<std::vector<double>> reward;
  std::vector<std::vector<double>> cost;
  bool noisy = true;

  static SyntheticInstance from_json(const nlohmann::json& j);
  double sample(double mean, Rng& rng) const;
  // Best expected reward among arms with cost <= 0.
  std::pair<std::size_t, std::size_t> feasible_optimum() const;
};

struct SaepRound {
  std::size_t t = 0;
  std::size_t line = 0;
  std::size_t arm = 0;
  double reward_mean = 0.0;
  double cost_mean = 0.0;
  double cum_regret = 0.0;
  double cum_violation = 0.0;
};

struct SaepRun {
  std::vector<SaepRound> rounds;
  bool eliminated_all = false;
  std::size_t eliminated_at = 0;
  // Whether the feasible optimum survived every round.
  bool optimum_retained = true;
  double cum_regret = 0.0;
  double cum_violation = 0.0;
};

// Runs the bandit for T rounds on the instance, accounting regret against the
// feasible optimum and positive violations sum [c(a_t)]^+ with the true means.
SaepRun run_synthetic(const SyntheticInstance& inst, std::size_t T, double delta, Rng& rng, bool keep_rounds = true);

}  // namespace tsm
