#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace tsm {

struct ValuationProfile {
  std::vector<double> buyers;
  double seller = 0.0;
};

// Throws InvalidInput for an empty buyer list or values outside [0,1].
void validate(const ValuationProfile& profile);

struct TopBids {
  double highest = 0.0;
  double second = 0.0;
  std::size_t winner = 0;  // lowest index attaining the maximum
};

// One occurrence of the maximum is removed before taking the second value;
// a single buyer gives second = 0.
TopBids highest_and_second(const ValuationProfile& profile);

struct PricePair {
  double p = 0.0;  // seller price
  double q = 0.0;  // reserve
};

struct RevealedBid {
  std::size_t buyer = 0;
  double value = 0.0;
};

// What the mechanism sees after the auction stage: every bid at or above the
// reserve, in buyer-index order.
struct StageOneFeedback {
  std::vector<RevealedBid> revealed;
  double reserve = 0.0;

  bool empty() const { return revealed.empty(); }
  std::size_t count() const { return revealed.size(); }
  // Highest revealed bid, or nullopt when nothing was revealed.
  std::optional<double> highest() const;
  // Second-highest revealed bid (one max occurrence removed), nullopt if < 2.
  std::optional<double> second() const;
  bool any_at_least(double x) const;
};

StageOneFeedback reveal_bids(const ValuationProfile& profile, double reserve);

struct RoundOutcome {
  bool traded = false;
  double gft = 0.0;
  double revenue = 0.0;
  std::optional<double> buyer_payment;
  std::optional<std::size_t> winner;
  bool seller_accepts = false;
};

class TwoStagePolicy {
 public:
  virtual ~TwoStagePolicy() = default;
  virtual double choose_reserve() = 0;
  virtual double choose_seller_price(const StageOneFeedback& fb) = 0;
};

// max{q, second bid} from observables only.
double sbb_seller_price(double q, const StageOneFeedback& fb);

// The posted-price mechanisms used by the learners. Fixed posts (p, q);
// StrongBudgetBalanced posts q and then max{q, b̲}; FkPlus posts (p, p + delta);
// FkMinus posts q and then max{0, max{q, b̲} - delta}.
class Mechanism final : public TwoStagePolicy {
 public:
  enum class Kind { Fixed, StrongBudgetBalanced, FkPlus, FkMinus };

  static Mechanism fixed(double p, double q);
  static Mechanism strong_budget_balanced(double q);
  static Mechanism fk_plus(double p, double delta);
  static Mechanism fk_minus(double q, double delta);

  Kind kind() const { return kind_; }
  double reserve() const { return q_; }
  // Base seller price for Fixed/FkPlus, 0 otherwise.
  double base_price() const { return p_; }
  double delta() const { return delta_; }

  double seller_price(const StageOneFeedback& fb) const;
  // Same price computed from the hidden second bid.
  double seller_price_given(double second_bid) const;

  double choose_reserve() override { return q_; }
  double choose_seller_price(const StageOneFeedback& fb) override { return seller_price(fb); }

  bool operator==(const Mechanism& o) const {
    return kind_ == o.kind_ && p_ == o.p_ && q_ == o.q_ && delta_ == o.delta_;
  }

 private:
  Mechanism(Kind kind, double p, double q, double delta) : kind_(kind), p_(p), q_(q), delta_(delta) {}
  Kind kind_;
  double p_;
  double q_;
  double delta_;
};

struct RoundResult {
  RoundOutcome outcome;
  StageOneFeedback feedback;
  bool seller_bit = false;
  double reserve = 0.0;
  double seller_price = 0.0;
};

// One round of the two-stage protocol. Throws ContractViolation when the
// policy posts a price outside [0,1].
RoundResult run_round(const ValuationProfile& profile, TwoStagePolicy& policy);

RoundOutcome outcome_for(double p, double q, const ValuationProfile& profile);

struct GftRev {
  double gft = 0.0;
  double rev = 0.0;
};

GftRev realized_gft_rev(double p, double q, const ValuationProfile& profile);
GftRev realized_gft_rev(double p, double q, double seller, double highest, double second);

// Trade and revenue as reconstructed by the mechanism from what it observed.
struct ObservedTrade {
  bool traded = false;
  double payment = 0.0;
  double revenue = 0.0;
};
ObservedTrade observed_trade(double p, const StageOneFeedback& fb, bool seller_bit);

}  // namespace tsm
