#include "tsm/market.hpp"

#include <algorithm>
#include <string>

#include "tsm/error.hpp"

namespace tsm {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void validate(const ValuationProfile& profile) {
  if (profile.buyers.empty()) throw InvalidInput("valuation profile has no buyers");
  if (!in_unit(profile.seller)) throw InvalidInput("seller value outside [0,1]");
  for (double b : profile.buyers)
    if (!in_unit(b)) throw InvalidInput("buyer value outside [0,1]");
}

TopBids highest_and_second(const ValuationProfile& profile) {
  if (profile.buyers.empty()) throw InvalidInput("valuation profile has no buyers");
  TopBids top;
  top.highest = profile.buyers[0];
  for (std::size_t i = 1; i < profile.buyers.size(); ++i) {
    double b = profile.buyers[i];
    if (b > top.highest) {
      top.second = top.highest;
      top.highest = b;
      top.winner = i;
    } else if (b > top.second) {
      top.second = b;
    }
  }
  return top;
}

std::optional<double> StageOneFeedback::highest() const {
  if (revealed.empty()) return std::nullopt;
  double m = revealed[0].value;
  for (const auto& r : revealed) m = std::max(m, r.value);
  return m;
}

std::optional<double> StageOneFeedback::second() const {
  if (revealed.size() < 2) return std::nullopt;
  double hi = revealed[0].value, lo = revealed[1].value;
  if (lo > hi) std::swap(hi, lo);
  for (std::size_t i = 2; i < revealed.size(); ++i) {
    double v = revealed[i].value;
    if (v > hi) {
      lo = hi;
      hi = v;
    } else if (v > lo) {
      lo = v;
    }
  }
  return lo;
}

bool StageOneFeedback::any_at_least(double x) const {
  for (const auto& r : revealed)
    if (r.value >= x) return true;
  return false;
}

StageOneFeedback reveal_bids(const ValuationProfile& profile, double reserve) {
  StageOneFeedback fb;
  fb.reserve = reserve;
  for (std::size_t i = 0; i < profile.buyers.size(); ++i)
    if (profile.buyers[i] >= reserve) fb.revealed.push_back({i, profile.buyers[i]});
  return fb;
}

double sbb_seller_price(double q, const StageOneFeedback& fb) {
  auto second = fb.second();
  return second ? std::max(q, *second) : q;
}

Mechanism Mechanism::fixed(double p, double q) { return Mechanism(Kind::Fixed, p, q, 0.0); }
Mechanism Mechanism::strong_budget_balanced(double q) {
  return Mechanism(Kind::StrongBudgetBalanced, 0.0, q, 0.0);
}
Mechanism Mechanism::fk_plus(double p, double delta) {
  return Mechanism(Kind::FkPlus, p, p + delta, delta);
}
Mechanism Mechanism::fk_minus(double q, double delta) {
  return Mechanism(Kind::FkMinus, 0.0, q, delta);
}

double Mechanism::seller_price(const StageOneFeedback& fb) const {
  switch (kind_) {
    case Kind::Fixed:
    case Kind::FkPlus:
      return p_;
    case Kind::StrongBudgetBalanced:
      return sbb_seller_price(q_, fb);
    case Kind::FkMinus:
      return std::max(0.0, sbb_seller_price(q_, fb) - delta_);
  }
  return p_;
}

double Mechanism::seller_price_given(double second_bid) const {
  switch (kind_) {
    case Kind::Fixed:
    case Kind::FkPlus:
      return p_;
    case Kind::StrongBudgetBalanced:
      return std::max(q_, second_bid);
    case Kind::FkMinus:
      return std::max(0.0, std::max(q_, second_bid) - delta_);
  }
  return p_;
}

RoundOutcome outcome_for(double p, double q, const ValuationProfile& profile) {
  TopBids top = highest_and_second(profile);
  RoundOutcome out;
  out.seller_accepts = profile.seller <= p;
  if (out.seller_accepts && top.highest >= q) {
    out.traded = true;
    double pay = std::max(q, top.second);
    out.buyer_payment = pay;
    out.winner = top.winner;
    out.gft = top.highest - profile.seller;
    out.revenue = pay - p;
  }
  return out;
}

RoundResult run_round(const ValuationProfile& profile, TwoStagePolicy& policy) {
  RoundResult r;
  r.reserve = policy.choose_reserve();
  if (!in_unit(r.reserve)) throw ContractViolation("reserve price outside [0,1]: " + std::to_string(r.reserve));
  r.feedback = reveal_bids(profile, r.reserve);
  r.seller_price = policy.choose_seller_price(r.feedback);
  if (!in_unit(r.seller_price))
    throw ContractViolation("seller price outside [0,1]: " + std::to_string(r.seller_price));
  r.seller_bit = profile.seller <= r.seller_price;
  r.outcome = outcome_for(r.seller_price, r.reserve, profile);
  return r;
}

GftRev realized_gft_rev(double p, double q, double seller, double highest, double second) {
  if (seller <= p && highest >= q) return {highest - seller, std::max(q, second) - p};
  return {};
}

GftRev realized_gft_rev(double p, double q, const ValuationProfile& profile) {
  TopBids top = highest_and_second(profile);
  return realized_gft_rev(p, q, profile.seller, top.highest, top.second);
}

ObservedTrade observed_trade(double p, const StageOneFeedback& fb, bool seller_bit) {
  ObservedTrade t;
  if (seller_bit && !fb.empty()) {
    t.traded = true;
    t.payment = sbb_seller_price(fb.reserve, fb);
    t.revenue = t.payment - p;
  }
  return t;
}

}  // namespace tsm
