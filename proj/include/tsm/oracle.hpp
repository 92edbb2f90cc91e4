#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "tsm/environment.hpp"
#include "tsm/market.hpp"

namespace tsm {

struct ExpectedValues {
  double gft = 0.0;
  double rev = 0.0;
  double gft1 = 0.0;  // E[(p - s) I(s <= p) I(b̄ >= q)]
  double gft2 = 0.0;  // E[(b̄ - p) I(s <= p) I(b̄ >= q)]
};

struct SbbOptimum {
  double q = 0.0;
  double value = 0.0;
};

struct GbbOptimum {
  double p = 0.0;
  double q = 1.0;
  double value = 0.0;
  double rev = 0.0;
};

struct GridAnchor {
  double p = 0.0;
  double q = 0.0;
  double zeta = 0.0;  // -Rev(p, q)
  double gft = 0.0;
};

// Exact expectations over a finite-support distribution.
class Oracle {
 public:
  // Throws ContractViolation for distributions without finite support.
  explicit Oracle(const MarketDistribution& dist);

  ExpectedValues expected_values(double p, double q) const;
  GftRev expected(const Mechanism& m) const;

  // E[(b̄ - s) I(b̄ >= q) I(s <= max{q, b̲})].
  double sbb_gft(double q) const;
  // Maximizer over [0,1]; ties go to the smallest reserve.
  SbbOptimum sbb_opt() const;
  SbbOptimum sbb_opt_over(const std::vector<double>& reserves) const;

  // Maximizes GFT(p, q) subject to Rev(p, q) >= 0. Ties prefer higher
  // revenue, then smaller p, then smaller q.
  GbbOptimum gbb_opt() const;
  GridAnchor grid_anchor(const std::vector<double>& seller_grid, const std::vector<double>& buyer_grid) const;
  GridAnchor grid_anchor(const GbbOptimum& opt, const std::vector<double>& seller_grid,
                         const std::vector<double>& buyer_grid) const;

  double max_revenue(const std::vector<Mechanism>& family) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Point {
    double s, hi, lo, w;
  };
  std::vector<Point> points_;

  // sbb_gft support: atom weights w(b̄ - s) live on [start, b̄].
  std::vector<double> starts_, ends_;
  std::vector<double> start_prefix_, end_prefix_;
};

struct MonteCarloEstimate {
  double gft = 0.0;
  double rev = 0.0;
  double half_width = 0.0;  // Hoeffding, range 2
  std::size_t samples = 0;
};

// Sample means of realized GFT and revenue of the fixed pair (p, q).
// Throws ContractViolation for n == 0.
MonteCarloEstimate monte_carlo_value(const MarketDistribution& dist, double p, double q, std::size_t n,
                                     double delta, Rng& rng);

nlohmann::json to_json(const ExpectedValues& v);

}  // namespace tsm
