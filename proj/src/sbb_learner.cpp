#include "tsm/sbb_learner.hpp"

#include <string>

#include "tsm/error.hpp"

namespace tsm {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Grid:
      return "grid";
    case Phase::Explore:
      return "explore";
    case Phase::Ucb:
      return "ucb";
    case Phase::MaxRev:
      return "maxrev";
    case Phase::Saep:
      return "saep";
    case Phase::Fallback:
      return "fallback";
  }
  return "?";
}

SbbLearner::SbbLearner(const SbbParams& params, Rng rng) : params_(params), rng_(rng) {
  if (params_.T == 0) throw ConfigError("horizon must be positive");
  if (params_.T0 == 0) params_.T0 = default_t0(params_.T);
  if (params_.K == 0) params_.K = default_k(params_.T);
  if (!(params_.delta > 0.0 && params_.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (params_.T < 2 * params_.T0)
    throw ConfigError("horizon " + std::to_string(params_.T) + " shorter than the two T0 phases");
  log_arg_ = 2.0 * static_cast<double>(params_.T) * static_cast<double>(params_.K) / params_.delta;
  top_bids_.reserve(params_.T0);
}

Phase SbbLearner::phase() const {
  if (t_ < params_.T0) return Phase::Grid;
  if (t_ < 2 * params_.T0) return Phase::Explore;
  return Phase::Ucb;
}

double SbbLearner::gft1_upper(std::size_t k) const { return gft1_.upper(k, log_arg_, params_.gft1_scale); }
double SbbLearner::gft2_upper(std::size_t k) const { return gft2_.upper(k, log_arg_, params_.gft2_scale); }

std::size_t SbbLearner::select() const {
  std::size_t best = 0;
  double best_score = gft1_upper(0) + gft2_upper(0);
  for (std::size_t k = 1; k < grid_.points.size(); ++k) {
    double s = gft1_upper(k) + gft2_upper(k);
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return best;
}

Mechanism SbbLearner::act() {
  if (t_ >= params_.T) throw HorizonExhausted("SBB learner horizon exhausted");
  if (awaiting_) throw ContractViolation("act() called twice without observe()");
  awaiting_ = true;
  switch (phase()) {
    case Phase::Grid:
      return Mechanism::strong_budget_balanced(0.0);
    case Phase::Explore:
      u_ = rng_.uniform();
      return Mechanism::fixed(u_, u_);
    default:
      played_ = select();
      return Mechanism::strong_budget_balanced(grid_.points[played_]);
  }
}

void SbbLearner::observe(const Observation& obs) {
  if (!awaiting_) throw ContractViolation("observe() without a preceding act()");
  const StageOneFeedback& fb = *obs.feedback;
  switch (phase()) {
    case Phase::Grid:
      if (obs.reserve != 0.0) throw ContractViolation("grid round must be played at reserve 0");
      top_bids_.push_back(*fb.highest());
      if (t_ + 1 == params_.T0) {
        GridOptions opts;
        opts.K = params_.K;
        opts.sbb_union_uniform = params_.sbb_union_uniform;
        opts.delta = params_.delta;
        grid_ = make_sbb_grid(top_bids_, opts);
        gft1_ = Gft1Table(grid_.points.size());
        gft2_ = Gft2Table(grid_.points.size());
        indicators_.assign(grid_.points.size(), 0);
      }
      break;
    case Phase::Explore:
      if (obs.reserve != u_ || obs.seller_price != u_) throw ContractViolation("explore round must post (U, U)");
      for (std::size_t k = 0; k < grid_.points.size(); ++k)
        indicators_[k] = gft1_indicator_sbb(u_, grid_.points[k], fb, obs.seller_bit);
      gft1_.add_round(indicators_);
      break;
    default:
      if (obs.reserve != grid_.points[played_]) throw ContractViolation("UCB round played an unexpected reserve");
      gft2_.add(played_, gft2_realization_sbb(obs.reserve, fb, obs.seller_bit));
      break;
  }
  awaiting_ = false;
  ++t_;
}

}  // namespace tsm
