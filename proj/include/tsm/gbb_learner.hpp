#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsm/gft_estimation.hpp"
#include "tsm/grid.hpp"
#include "tsm/learner.hpp"
#include "tsm/line_bandit.hpp"
#include "tsm/rng.hpp"

namespace tsm {

enum class ZetaMode { Auto, Independent, BoundedDensity, Fixed };

struct GbbParams {
  std::size_t T = 0;
  std::size_t T0 = 0;  // 0: ceil(T^{2/3})
  std::size_t K = 0;   // 0: ceil(T^{1/3})
  double delta = 0.05;
  std::optional<double> beta;  // default c_beta T^{2/3} ln T
  double c_beta = 1.0;
  ZetaMode zeta_mode = ZetaMode::Auto;
  double zeta_fixed = 0.0;
  // Distribution facts the zeta bound may use.
  bool is_independent = false;
  std::optional<double> density_bound;
  bool restrict_q_le_p = false;
  double saep_scale = 2.0;
};

// Revenue accumulation with UCB1 over the F_K family.
class RevenueAccumulator {
 public:
  RevenueAccumulator() = default;
  RevenueAccumulator(std::vector<Mechanism> arms, double beta);

  std::size_t select() const;
  void update(std::size_t arm, double revenue);
  bool reached() const { return cumulative_ >= beta_; }
  double cumulative() const { return cumulative_; }
  double beta() const { return beta_; }
  const std::vector<Mechanism>& arms() const { return arms_; }
  std::size_t count(std::size_t arm) const { return counts_[arm]; }
  double mean(std::size_t arm) const { return counts_[arm] ? sums_[arm] / static_cast<double>(counts_[arm]) : 0.0; }
  std::size_t plays() const { return plays_; }
  // Highest empirical mean among played arms; ties to the lowest index.
  std::size_t best_empirical() const;

 private:
  std::vector<Mechanism> arms_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
  std::vector<double> inv_sqrt_counts_;
  std::size_t plays_ = 0;
  std::size_t next_unplayed_ = 0;
  double cumulative_ = 0.0;
  double beta_ = 0.0;
};

struct CostReward {
  double reward = 0.0;
  double cost = 0.0;
  double revenue = 0.0;
  double gft2 = 0.0;
};

// Reward and shifted cost of the arm (p, q) from a round played at (p, played_q).
// Throws FeedbackUnavailable when q < played_q.
CostReward build_cost_reward(double p, double q, const StageOneFeedback& fb, bool seller_bit, double gft1_ucb,
                             double zeta_bar, double played_q);

double zeta_bar_for(const GbbParams& params, std::size_t K, std::size_t T0);

class GbbLearner final : public Learner {
 public:
  // Throws ConfigError for invalid parameters, including T < 3 T0.
  GbbLearner(const GbbParams& params, Rng rng);

  Mechanism act() override;
  void observe(const Observation& obs) override;
  Phase phase() const override { return phase_; }
  std::size_t round() const override { return t_; }
  std::size_t horizon() const override { return params_.T; }
  std::size_t safe_set_size() const override;

  const GbbParams& params() const { return params_; }
  double beta() const { return beta_; }
  double zeta_bar() const { return zeta_bar_; }
  const GbbGrid& grid() const { return grid_; }
  const RevenueAccumulator& accumulator() const { return acc_; }
  // Round at which the revenue target was met; 0 while unmet.
  std::size_t stop_time() const { return tau_; }
  std::size_t saep_start() const { return saep_start_; }
  bool fell_back() const { return phase_ == Phase::Fallback; }
  const LineBandit* bandit() const { return bandit_.get(); }
  // Whether (p, q) is an arm of the constrained bandit that is still alive.
  bool pair_alive(double p, double q) const;
  double gft1_upper(std::size_t line, std::size_t arm) const;
  const std::vector<double>& line_reserves(std::size_t line) const { return line_q_[line]; }

 private:
  void start_explore();
  void start_saep();

  GbbParams params_;
  Rng rng_;
  Phase phase_ = Phase::Grid;
  std::size_t t_ = 0;
  bool awaiting_ = false;
  double beta_ = 0.0;
  double zeta_bar_ = 0.0;
  std::size_t tau_ = 0;
  std::size_t explore_left_ = 0;
  std::size_t saep_start_ = 0;

  std::vector<double> top_bids_;
  GbbGrid grid_;
  RevenueAccumulator acc_;
  std::size_t played_arm_ = 0;

  double u_ = 0.0;
  // gft1_sums_[i][k]: exploration hits for seller price B^S[i] and reserve B^B[k].
  std::vector<std::vector<double>> gft1_sums_;
  std::size_t gft1_rounds_ = 0;
  double gft1_bonus_ = 0.0;

  std::unique_ptr<LineBandit> bandit_;
  std::vector<std::vector<double>> line_q_;        // reserves per line, ascending
  std::vector<std::vector<std::size_t>> line_col_;  // column in B^B per line arm
  std::pair<std::size_t, std::size_t> pulled_{0, 0};
  std::size_t fallback_arm_ = 0;
  std::vector<ArmObservation> obs_buf_;
};

}  // namespace tsm
