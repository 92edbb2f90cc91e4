#include "tsm/gbb_learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsm/error.hpp"

namespace tsm {

RevenueAccumulator::RevenueAccumulator(std::vector<Mechanism> arms, double beta)
    : arms_(std::move(arms)),
      sums_(arms_.size(), 0.0),
      counts_(arms_.size(), 0),
      inv_sqrt_counts_(arms_.size(), 0.0),
      beta_(beta) {
  if (arms_.empty()) throw ConfigError("revenue family is empty");
}

std::size_t RevenueAccumulator::select() const {
  if (next_unplayed_ < arms_.size()) return next_unplayed_;
  // UCB1 for rewards in [0, 1]: F_K revenue is never negative.
  const double c = std::sqrt(2.0 * std::log(static_cast<double>(plays_)));
  std::size_t best = 0;
  double best_index = -1.0;
  for (std::size_t a = 0; a < arms_.size(); ++a) {
    double idx = sums_[a] / static_cast<double>(counts_[a]) + c * inv_sqrt_counts_[a];
    if (idx > best_index) {
      best_index = idx;
      best = a;
    }
  }
  return best;
}

void RevenueAccumulator::update(std::size_t arm, double revenue) {
  sums_[arm] += revenue;
  ++counts_[arm];
  inv_sqrt_counts_[arm] = 1.0 / std::sqrt(static_cast<double>(counts_[arm]));
  ++plays_;
  cumulative_ += revenue;
  while (next_unplayed_ < arms_.size() && counts_[next_unplayed_] > 0) ++next_unplayed_;
}

std::size_t RevenueAccumulator::best_empirical() const {
  std::size_t best = 0;
  double best_mean = -2.0;
  for (std::size_t a = 0; a < arms_.size(); ++a)
    if (counts_[a] > 0 && mean(a) > best_mean) {
      best_mean = mean(a);
      best = a;
    }
  return best;
}

CostReward build_cost_reward(double p, double q, const StageOneFeedback& fb, bool seller_bit, double gft1_ucb,
                             double zeta_bar, double played_q) {
  if (q < played_q) throw FeedbackUnavailable("reserve below the played one is not observed");
  CostReward cr;
  cr.gft2 = gft2_realization(p, q, fb, seller_bit, played_q);
  if (seller_bit && fb.any_at_least(q)) {
    // b̲ is revealed whenever it can exceed q; otherwise max{q, b̲} = q.
    auto second = fb.second();
    cr.revenue = std::max(q, second ? *second : 0.0) - p;
  }
  cr.reward = 0.5 * (std::clamp(gft1_ucb, 0.0, 1.0) + cr.gft2);
  cr.cost = (-cr.revenue - zeta_bar) / (1.0 + zeta_bar);
  return cr;
}

double zeta_bar_for(const GbbParams& params, std::size_t K, std::size_t T0) {
  const double independent =
      2.0 / static_cast<double>(K) +
      2.0 * std::sqrt(std::log(2.0 / params.delta) / (2.0 * static_cast<double>(T0)));
  switch (params.zeta_mode) {
    case ZetaMode::Fixed:
      return params.zeta_fixed;
    case ZetaMode::Independent:
      return independent;
    case ZetaMode::BoundedDensity:
      if (!params.density_bound) throw ConfigError("bounded-density zeta needs a density bound");
      return 2.0 * *params.density_bound / static_cast<double>(K);
    case ZetaMode::Auto:
      break;
  }
  if (params.density_bound) {
    double bounded = 2.0 * *params.density_bound / static_cast<double>(K);
    return params.is_independent ? std::min(independent, bounded) : bounded;
  }
  return independent;
}

GbbLearner::GbbLearner(const GbbParams& params, Rng rng) : params_(params), rng_(rng) {
  if (params_.T == 0) throw ConfigError("horizon must be positive");
  if (params_.T0 == 0) params_.T0 = default_t0(params_.T);
  if (params_.K == 0) params_.K = default_k(params_.T);
  if (!(params_.delta > 0.0 && params_.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (params_.T < 3 * params_.T0)
    throw ConfigError("horizon " + std::to_string(params_.T) + " shorter than 3 T0 = " +
                      std::to_string(3 * params_.T0));
  const double T = static_cast<double>(params_.T);
  beta_ = params_.beta ? *params_.beta : params_.c_beta * std::cbrt(T) * std::cbrt(T) * std::log(T);
  zeta_bar_ = zeta_bar_for(params_, params_.K, params_.T0);
  if (!(zeta_bar_ >= 0.0)) throw ConfigError("zeta bar must be non-negative");
  top_bids_.reserve(params_.T0);
}

std::size_t GbbLearner::safe_set_size() const { return bandit_ ? bandit_->safe_set_size() : 0; }

double GbbLearner::gft1_upper(std::size_t line, std::size_t arm) const {
  double mean = gft1_sums_[line][line_col_[line][arm]] / static_cast<double>(gft1_rounds_);
  return mean + gft1_bonus_;
}

bool GbbLearner::pair_alive(double p, double q) const {
  if (!bandit_) return false;
  auto it = std::find(grid_.seller.begin(), grid_.seller.end(), p);
  if (it == grid_.seller.end()) return false;
  std::size_t i = it - grid_.seller.begin();
  auto jt = std::find(line_q_[i].begin(), line_q_[i].end(), q);
  if (jt == line_q_[i].end()) return false;
  return bandit_->alive(i, jt - line_q_[i].begin());
}

void GbbLearner::start_explore() {
  phase_ = Phase::Explore;
  explore_left_ = params_.T0;
  gft1_sums_.assign(grid_.seller.size(), std::vector<double>(grid_.buyer.size(), 0.0));
}

void GbbLearner::start_saep() {
  phase_ = Phase::Saep;
  saep_start_ = t_ + 1;
  const double cells = static_cast<double>(grid_.seller.size() * grid_.buyer.size());
  gft1_bonus_ = 2.0 * std::sqrt(std::log(cells / params_.delta) / (2.0 * static_cast<double>(gft1_rounds_)));
  LineBanditParams bp;
  bp.T = params_.T;
  bp.delta = params_.delta;
  bp.scale = params_.saep_scale;
  line_q_.clear();
  line_col_.clear();
  for (double p : grid_.seller) {
    std::vector<double> qs;
    std::vector<std::size_t> cols;
    for (std::size_t k = 0; k < grid_.buyer.size(); ++k) {
      if (params_.restrict_q_le_p && grid_.buyer[k] > p) continue;
      qs.push_back(grid_.buyer[k]);
      cols.push_back(k);
    }
    bp.line_lengths.push_back(qs.size());
    line_q_.push_back(std::move(qs));
    line_col_.push_back(std::move(cols));
  }
  bandit_ = std::make_unique<LineBandit>(bp);
}

Mechanism GbbLearner::act() {
  if (t_ >= params_.T) throw HorizonExhausted("GBB learner horizon exhausted");
  if (awaiting_) throw ContractViolation("act() called twice without observe()");
  awaiting_ = true;
  switch (phase_) {
    case Phase::Grid:
      return Mechanism::strong_budget_balanced(0.0);
    case Phase::MaxRev:
      played_arm_ = acc_.select();
      return acc_.arms()[played_arm_];
    case Phase::Explore:
      u_ = rng_.uniform();
      return Mechanism::fixed(u_, 0.0);
    case Phase::Saep:
      try {
        pulled_ = bandit_->select();
      } catch (const AllArmsEliminated&) {
        phase_ = Phase::Fallback;
        fallback_arm_ = acc_.best_empirical();
        return acc_.arms()[fallback_arm_];
      }
      return Mechanism::fixed(grid_.seller[pulled_.first], line_q_[pulled_.first][pulled_.second]);
    case Phase::Fallback:
      return acc_.arms()[fallback_arm_];
    default:
      break;
  }
  throw ContractViolation("unexpected learner phase");
}

void GbbLearner::observe(const Observation& obs) {
  if (!awaiting_) throw ContractViolation("observe() without a preceding act()");
  const StageOneFeedback& fb = *obs.feedback;
  const std::size_t done = t_ + 1;  // rounds completed after this one
  switch (phase_) {
    case Phase::Grid:
      if (obs.reserve != 0.0) throw ContractViolation("grid round must be played at reserve 0");
      top_bids_.push_back(*fb.highest());
      if (done == params_.T0) {
        GridOptions opts;
        opts.K = params_.K;
        opts.delta = params_.delta;
        grid_ = make_gbb_grid(top_bids_, opts);
        acc_ = RevenueAccumulator(build_fk(grid_.seller, grid_.buyer, params_.T), beta_);
        phase_ = Phase::MaxRev;
      }
      break;
    case Phase::MaxRev: {
      ObservedTrade tr = observed_trade(obs.seller_price, fb, obs.seller_bit);
      acc_.update(played_arm_, tr.revenue);
      if (acc_.reached() && tau_ == 0) {
        tau_ = done;
        if (done < params_.T - params_.T0) start_explore();
      }
      break;
    }
    case Phase::Explore: {
      if (obs.reserve != 0.0 || obs.seller_price != u_) throw ContractViolation("explore round must post (U, 0)");
      if (obs.seller_bit) {
        auto hi = fb.highest();
        for (std::size_t i = 0; i < grid_.seller.size(); ++i) {
          if (u_ > grid_.seller[i]) continue;
          auto& row = gft1_sums_[i];
          for (std::size_t k = 0; k < grid_.buyer.size() && grid_.buyer[k] <= *hi; ++k) row[k] += 1.0;
        }
      }
      ++gft1_rounds_;
      if (--explore_left_ == 0) start_saep();
      break;
    }
    case Phase::Saep: {
      const double p = grid_.seller[pulled_.first];
      const double played_q = line_q_[pulled_.first][pulled_.second];
      if (obs.reserve != played_q || obs.seller_price != p) throw ContractViolation("SAE-P round played other prices");
      obs_buf_.clear();
      for (std::size_t j : bandit_->revealed(pulled_.first, pulled_.second)) {
        CostReward cr = build_cost_reward(p, line_q_[pulled_.first][j], fb, obs.seller_bit,
                                          gft1_upper(pulled_.first, j), zeta_bar_, played_q);
        if (cr.reward < -1.0 || cr.reward > 1.0 || cr.cost < -1.0 || cr.cost > 1.0)
          throw ContractViolation("reward or cost left [-1, 1]");
        obs_buf_.push_back({j, cr.reward, cr.cost});
      }
      bandit_->update(pulled_, obs_buf_);
      break;
    }
    case Phase::Fallback:
      break;
    default:
      throw ContractViolation("unexpected learner phase");
  }
  awaiting_ = false;
  ++t_;
}

}  // namespace tsm
