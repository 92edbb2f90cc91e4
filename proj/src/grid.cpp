#include "tsm/grid.hpp"

#include <algorithm>
#include <cmath>

#include "tsm/error.hpp"

namespace tsm {

PartitionResult partition_multiset(std::vector<double> samples, std::size_t K) {
  if (K < 1) throw ContractViolation("partition needs K >= 1");
  PartitionResult r;
  r.points.push_back(0.0);
  if (samples.empty()) {
    r.points.push_back(1.0);
    r.empty_sample = true;
    return r;
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const std::size_t cap = n / K;  // count <= n/K with integer counts
  double pk = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t lo = std::upper_bound(samples.begin(), samples.end(), pk) - samples.begin();
    if (lo == n) {
      r.points.push_back(1.0);
      break;
    }
    pk = samples[std::min(lo + cap, n - 1)];
    r.points.push_back(pk);
  }
  r.points.erase(std::unique(r.points.begin(), r.points.end()), r.points.end());
  return r;
}

std::vector<double> uniform_grid(std::size_t K) {
  if (K < 1) throw ContractViolation("uniform grid needs K >= 1");
  std::vector<double> g(K + 1);
  for (std::size_t n = 0; n <= K; ++n) g[n] = static_cast<double>(n) / static_cast<double>(K);
  return g;
}

std::vector<double> merge_grids(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a);
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SbbGrid make_sbb_grid(const std::vector<double>& top_bids, const GridOptions& opts) {
  SbbGrid g;
  g.points = partition_multiset(top_bids, opts.K).points;
  if (opts.sbb_union_uniform) g.points = merge_grids(g.points, uniform_grid(opts.K));
  return g;
}

GbbGrid make_gbb_grid(const std::vector<double>& top_bids, const GridOptions& opts) {
  GbbGrid g;
  g.seller = uniform_grid(opts.K);
  g.buyer = merge_grids(partition_multiset(top_bids, opts.K).points, g.seller);
  return g;
}

GridEstimate estimate_grid(GridMode mode, std::size_t T0, const GridOptions& opts,
                           const std::function<ValuationProfile()>& next) {
  if (T0 < 1) throw ContractViolation("grid estimation needs T0 >= 1");
  GridEstimate est;
  Mechanism m = Mechanism::strong_budget_balanced(0.0);
  for (std::size_t t = 0; t < T0; ++t) {
    ValuationProfile prof = next();
    RoundResult r = run_round(prof, m);
    est.top_bids.push_back(*r.feedback.highest());
    est.log.push_back({r.outcome.gft, r.outcome.revenue});
  }
  est.empty_sample = est.top_bids.empty();
  if (mode == GridMode::Sbb)
    est.sbb = make_sbb_grid(est.top_bids, opts);
  else
    est.gbb = make_gbb_grid(est.top_bids, opts);
  return est;
}

std::size_t ceil_log2(std::size_t T) {
  std::size_t j = 0;
  while ((std::size_t{1} << j) < T) ++j;
  return j;
}

std::vector<Mechanism> build_fk(const std::vector<double>& seller_grid, const std::vector<double>& buyer_grid,
                                std::size_t T) {
  if (T < 2) throw ContractViolation("F_K needs T >= 2");
  const std::size_t J = ceil_log2(T);
  std::vector<Mechanism> fk;
  for (double p : seller_grid)
    for (std::size_t j = 1; j <= J; ++j) {
      double d = std::ldexp(1.0, -static_cast<int>(j));
      if (p + d <= 1.0) fk.push_back(Mechanism::fk_plus(p, d));
    }
  for (double q : buyer_grid)
    for (std::size_t j = 1; j <= J; ++j) fk.push_back(Mechanism::fk_minus(q, std::ldexp(1.0, -static_cast<int>(j))));
  return fk;
}

nlohmann::json to_json(const GbbGrid& g) { return {{"seller", g.seller}, {"buyer", g.buyer}}; }

nlohmann::json to_json(const Mechanism& m) {
  switch (m.kind()) {
    case Mechanism::Kind::Fixed:
      return {{"kind", "fixed"}, {"p", m.base_price()}, {"q", m.reserve()}};
    case Mechanism::Kind::StrongBudgetBalanced:
      return {{"kind", "sbb"}, {"q", m.reserve()}};
    case Mechanism::Kind::FkPlus:
      return {{"kind", "fk_plus"}, {"p", m.base_price()}, {"delta", m.delta()}};
    case Mechanism::Kind::FkMinus:
      return {{"kind", "fk_minus"}, {"q", m.reserve()}, {"delta", m.delta()}};
  }
  return {};
}

}  // namespace tsm
