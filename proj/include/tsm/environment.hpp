#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tsm/market.hpp"
#include "tsm/rng.hpp"

namespace tsm {

// One-dimensional marginal used by product distributions.
class Dist1D {
 public:
  enum class Kind { Point, Uniform, Beta, Discrete };

  static Dist1D point(double v);
  static Dist1D uniform(double lo = 0.0, double hi = 1.0);
  // Integer shape parameters only; sampled exactly as an order statistic.
  static Dist1D beta(int a, int b);
  static Dist1D discrete(std::vector<double> values, std::vector<double> probs);

  Kind kind() const { return kind_; }
  double sample(Rng& rng) const;
  // P(lo <= X <= hi) for continuous kinds; used for lattice discretization.
  double mass(double lo, double hi) const;
  // Supremum of the density; nullopt for atoms.
  std::optional<double> density_bound() const;
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }
  double lo() const { return a_; }
  double hi() const { return b_; }
  int beta_a() const { return ia_; }
  int beta_b() const { return ib_; }

 private:
  Kind kind_ = Kind::Point;
  double a_ = 0.0, b_ = 0.0;
  int ia_ = 1, ib_ = 1;
  std::vector<double> values_, probs_, cumulative_;
};

struct Atom {
  ValuationProfile profile;
  double prob = 0.0;
};

struct DiscreteJoint {
  std::vector<Atom> atoms;
  std::vector<double> cumulative;
};

struct IndependentProduct {
  Dist1D seller;
  std::vector<Dist1D> buyers;
};

// Continuous family with a density bounded by M on [0,1]^{n+1}.
struct BoundedDensity {
  enum class Family { UniformProduct, BetaProduct, CorrelatedUniform };
  Family family = Family::UniformProduct;
  std::size_t n_buyers = 1;
  // BetaProduct marginals (seller first). Unused otherwise.
  std::vector<std::pair<int, int>> beta_params;
  // CorrelatedUniform: density 1 + rho (2s-1)(2b_1-1) over (s, b_1), other
  // buyers uniform.
  double rho = 0.0;
};

class MarketDistribution {
 public:
  static MarketDistribution discrete(std::vector<Atom> atoms, std::string name = "discrete",
                                     bool is_independent = false);
  static MarketDistribution independent(Dist1D seller, std::vector<Dist1D> buyers,
                                        std::string name = "independent");
  static MarketDistribution uniform_product(std::size_t n_buyers);
  static MarketDistribution beta_product(std::pair<int, int> seller,
                                         std::vector<std::pair<int, int>> buyers);
  static MarketDistribution correlated_uniform(std::size_t n_buyers, double rho);

  ValuationProfile sample(Rng& rng) const;
  void sample_into(Rng& rng, ValuationProfile& out) const;

  std::size_t n_buyers() const { return n_buyers_; }
  const std::string& name() const { return name_; }
  bool is_independent() const { return is_independent_; }
  std::optional<double> density_bound() const { return density_bound_; }
  bool is_discrete() const { return std::holds_alternative<DiscreteJoint>(rep_); }
  const DiscreteJoint& as_discrete() const;
  const std::variant<DiscreteJoint, IndependentProduct, BoundedDensity>& rep() const { return rep_; }

  // Lattice discretization: each of the L^{n+1} cells carries its exact
  // probability mass at the cell midpoint. Keeps the independence flag and
  // the density bound of the source. Continuous kinds only.
  MarketDistribution discretized(std::size_t cells_per_axis) const;

  // Exact finite-support version when one exists (discrete, or a product of
  // point/discrete marginals); nullopt otherwise.
  std::optional<MarketDistribution> to_discrete() const;

  // N samples with weight 1/N each; stands in for continuous distributions in
  // oracle computations.
  MarketDistribution empirical_proxy(std::size_t n, Rng& rng) const;

  nlohmann::json to_json() const;
  static MarketDistribution from_json(const nlohmann::json& j);

  MarketDistribution& with_name(std::string name) {
    name_ = std::move(name);
    return *this;
  }
  MarketDistribution& with_density_bound(std::optional<double> m) {
    density_bound_ = m;
    return *this;
  }

 private:
  std::variant<DiscreteJoint, IndependentProduct, BoundedDensity> rep_;
  std::size_t n_buyers_ = 0;
  std::string name_;
  bool is_independent_ = false;
  std::optional<double> density_bound_;
};

// The three-atom family: atoms (x-eps,(3/4,0)), (x+eps,(1/4,0)), (0,(1/4,0)),
// each with probability 1/3. Requires x in (7/16, 9/16), eps in (0, 1/16).
MarketDistribution needle_instance(double x, double eps);

}  // namespace tsm
