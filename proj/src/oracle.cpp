#include "tsm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsm/error.hpp"

namespace tsm {

namespace {

constexpr double kTieTol = 1e-12;
constexpr double kFeasTol = 1e-12;

void sorted_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Oracle::Oracle(const MarketDistribution& dist) {
  const DiscreteJoint& dj = dist.as_discrete();
  points_.reserve(dj.atoms.size());
  for (const auto& a : dj.atoms) {
    if (a.prob <= 0.0) continue;
    TopBids top = highest_and_second(a.profile);
    points_.push_back({a.profile.seller, top.highest, top.second, a.prob});
  }

  std::vector<std::pair<double, double>> by_start, by_end;
  for (const auto& pt : points_) {
    double start = pt.s <= pt.lo ? 0.0 : pt.s;
    if (start > pt.hi) continue;
    double v = pt.w * (pt.hi - pt.s);
    by_start.push_back({start, v});
    by_end.push_back({pt.hi, v});
  }
  std::sort(by_start.begin(), by_start.end());
  std::sort(by_end.begin(), by_end.end());
  start_prefix_.assign(1, 0.0);
  end_prefix_.assign(1, 0.0);
  for (auto& [x, v] : by_start) {
    starts_.push_back(x);
    start_prefix_.push_back(start_prefix_.back() + v);
  }
  for (auto& [x, v] : by_end) {
    ends_.push_back(x);
    end_prefix_.push_back(end_prefix_.back() + v);
  }
}

ExpectedValues Oracle::expected_values(double p, double q) const {
  ExpectedValues ev;
  for (const auto& pt : points_) {
    if (pt.s <= p && pt.hi >= q) {
      ev.gft += pt.w * (pt.hi - pt.s);
      ev.rev += pt.w * (std::max(q, pt.lo) - p);
      ev.gft1 += pt.w * (p - pt.s);
      ev.gft2 += pt.w * (pt.hi - p);
    }
  }
  return ev;
}

GftRev Oracle::expected(const Mechanism& m) const {
  GftRev out;
  const double q = m.reserve();
  for (const auto& pt : points_) {
    GftRev r = realized_gft_rev(m.seller_price_given(pt.lo), q, pt.s, pt.hi, pt.lo);
    out.gft += pt.w * r.gft;
    out.rev += pt.w * r.rev;
  }
  return out;
}

double Oracle::sbb_gft(double q) const {
  // Atoms whose interval [start, end] contains q: start <= q minus end < q.
  auto a = std::upper_bound(starts_.begin(), starts_.end(), q) - starts_.begin();
  auto b = std::lower_bound(ends_.begin(), ends_.end(), q) - ends_.begin();
  return start_prefix_[a] - end_prefix_[b];
}

SbbOptimum Oracle::sbb_opt_over(const std::vector<double>& reserves) const {
  if (reserves.empty()) throw ContractViolation("empty reserve set");
  std::vector<double> qs = reserves;
  sorted_unique(qs);
  SbbOptimum best{qs[0], sbb_gft(qs[0])};
  for (std::size_t i = 1; i < qs.size(); ++i) {
    double v = sbb_gft(qs[i]);
    if (v > best.value + kTieTol) best = {qs[i], v};
  }
  return best;
}

SbbOptimum Oracle::sbb_opt() const {
  std::vector<double> cand{0.0, 1.0};
  for (const auto& pt : points_) {
    cand.push_back(pt.s);
    cand.push_back(pt.hi);
    cand.push_back(pt.lo);
  }
  return sbb_opt_over(cand);
}

GbbOptimum Oracle::gbb_opt() const {
  // Within a fixed trade set, revenue falls with p and rises with q, so the
  // optimum sits at p in {0} ∪ supp(s) and q in {0, 1} ∪ supp(b̄).
  std::vector<double> ps{0.0, 1.0}, qs{0.0, 1.0};
  for (const auto& pt : points_) {
    ps.push_back(pt.s);
    qs.push_back(pt.hi);
  }
  sorted_unique(ps);
  sorted_unique(qs);
  const std::size_t nq = qs.size();

  std::vector<std::size_t> order(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points_[a].s < points_[b].s; });

  // Buckets indexed by q position; suffix sums give, for q = qs[k]:
  //   W  = sum w over b̄ >= q          A  = sum w (b̄ - s) over b̄ >= q
  //   WL = sum w over b̲ >= q          SL = sum w b̲ over b̲ >= q
  std::vector<double> bw(nq, 0.0), ba(nq, 0.0), blw(nq + 1, 0.0), bls(nq + 1, 0.0);
  std::vector<double> W(nq), A(nq), WL(nq), SL(nq);

  GbbOptimum best;
  {
    ExpectedValues ev = expected_values(0.0, 1.0);
    best = {0.0, 1.0, ev.gft, ev.rev};
  }
  auto better = [&](double gft, double rev, double p, double q) {
    if (gft > best.value + kTieTol) return true;
    if (gft < best.value - kTieTol) return false;
    if (rev > best.rev + kTieTol) return true;
    if (rev < best.rev - kTieTol) return false;
    if (p != best.p) return p < best.p;
    return q < best.q;
  };

  std::size_t next = 0;
  for (double p : ps) {
    while (next < order.size() && points_[order[next]].s <= p) {
      const Point& pt = points_[order[next++]];
      std::size_t kb = std::lower_bound(qs.begin(), qs.end(), pt.hi) - qs.begin();
      bw[kb] += pt.w;
      ba[kb] += pt.w * (pt.hi - pt.s);
      std::size_t ul = std::upper_bound(qs.begin(), qs.end(), pt.lo) - qs.begin();  // count of qs <= b̲
      blw[ul] += pt.w;
      bls[ul] += pt.w * pt.lo;
    }
    // W, A: suffix over kb >= k. WL, SL: atoms with b̲ >= qs[k] ⟺ ul > k.
    double w = 0, a = 0, wl = 0, sl = 0;
    for (std::size_t k = nq; k-- > 0;) {
      w += bw[k];
      a += ba[k];
      wl += blw[k + 1];
      sl += bls[k + 1];
      W[k] = w;
      A[k] = a;
      WL[k] = wl;
      SL[k] = sl;
    }
    for (std::size_t k = 0; k < nq; ++k) {
      double q = qs[k];
      double rev = q * (W[k] - WL[k]) + SL[k] - p * W[k];
      if (rev < -kFeasTol) continue;
      if (better(A[k], rev, p, q)) best = {p, q, A[k], rev};
    }
  }
  // Report exact enumeration values at the chosen pair.
  ExpectedValues ev = expected_values(best.p, best.q);
  best.value = ev.gft;
  best.rev = ev.rev;
  return best;
}

GridAnchor Oracle::grid_anchor(const GbbOptimum& opt, const std::vector<double>& seller_grid,
                               const std::vector<double>& buyer_grid) const {
  auto round_up = [](std::vector<double> g, double x) {
    sorted_unique(g);
    auto it = std::lower_bound(g.begin(), g.end(), x);
    if (it == g.end()) throw ContractViolation("grid does not cover the optimum");
    return *it;
  };
  GridAnchor a;
  a.p = round_up(seller_grid, opt.p);
  a.q = round_up(buyer_grid, opt.q);
  ExpectedValues ev = expected_values(a.p, a.q);
  a.zeta = -ev.rev;
  a.gft = ev.gft;
  return a;
}

GridAnchor Oracle::grid_anchor(const std::vector<double>& seller_grid, const std::vector<double>& buyer_grid) const {
  return grid_anchor(gbb_opt(), seller_grid, buyer_grid);
}

double Oracle::max_revenue(const std::vector<Mechanism>& family) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& m : family) best = std::max(best, expected(m).rev);
  return best;
}

MonteCarloEstimate monte_carlo_value(const MarketDistribution& dist, double p, double q, std::size_t n,
                                     double delta, Rng& rng) {
  if (n == 0) throw ContractViolation("monte carlo estimate needs at least one sample");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractViolation("delta must lie in (0,1)");
  MonteCarloEstimate est;
  ValuationProfile prof;
  for (std::size_t i = 0; i < n; ++i) {
    dist.sample_into(rng, prof);
    GftRev r = realized_gft_rev(p, q, prof);
    est.gft += r.gft;
    est.rev += r.rev;
  }
  est.gft /= static_cast<double>(n);
  est.rev /= static_cast<double>(n);
  est.samples = n;
  est.half_width = 2.0 * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
  return est;
}

nlohmann::json to_json(const ExpectedValues& v) {
  return {{"gft", v.gft}, {"rev", v.rev}, {"gft1", v.gft1}, {"gft2", v.gft2}};
}

}  // namespace tsm
