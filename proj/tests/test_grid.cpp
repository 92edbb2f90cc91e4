#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "tsm/error.hpp"
#include "tsm/grid.hpp"
#include "tsm/oracle.hpp"

using namespace tsm;

namespace {

using Points = std::vector<double>;

bool same(const Points& a, const Points& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i] - b[i]) > 1e-12) return false;
  return true;
}

MarketDistribution point_mass() { return MarketDistribution::discrete({{{{0.9, 0.6}, 0.2}, 1.0}}); }

MarketDistribution random_independent(Rng& rng) {
  auto marginal = [&] {
    std::size_t n = 1 + rng.below(4);
    Points v, p;
    double tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back(static_cast<double>(rng.below(101)) / 100);
      p.push_back(0.1 + rng.uniform());
      tot += p.back();
    }
    for (auto& x : p) x /= tot;
    return Dist1D::discrete(v, p);
  };
  std::vector<Dist1D> buyers;
  std::size_t n = 1 + rng.below(2);
  for (std::size_t i = 0; i < n; ++i) buyers.push_back(marginal());
  return *MarketDistribution::independent(marginal(), buyers).to_discrete();
}

}  // namespace

TEST_CASE("partition examples") {
  auto r = partition_multiset({0.1, 0.2, 0.2, 0.5, 0.5, 0.9}, 3);
  CHECK(same(r.points, {0.0, 0.2, 0.9, 1.0}));
  CHECK_FALSE(r.empty_sample);

  r = partition_multiset(Points(10, 0.5), 2);
  CHECK(same(r.points, {0.0, 0.5, 1.0}));

  r = partition_multiset({}, 3);
  CHECK(same(r.points, {0.0, 1.0}));
  CHECK(r.empty_sample);

  CHECK_THROWS_AS(partition_multiset({0.5}, 0), ContractViolation);
}

TEST_CASE("partition mass bound and shape") {
  Rng rng(31);
  for (int rep = 0; rep < 500; ++rep) {
    std::size_t n = 1 + rng.below(200);
    std::size_t K = 1 + rng.below(12);
    Points b(n);
    for (auto& x : b) x = rng.below(3) == 0 ? static_cast<double>(rng.below(11)) / 10 : rng.uniform();
    auto pts = partition_multiset(b, K).points;
    REQUIRE(!pts.empty());
    CHECK(pts.front() == 0.0);
    CHECK(pts.size() <= K + 2);
    CHECK(std::is_sorted(pts.begin(), pts.end()));
    CHECK(std::adjacent_find(pts.begin(), pts.end()) == pts.end());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      auto inside = std::count_if(b.begin(), b.end(), [&](double x) { return pts[k] < x && x < pts[k + 1]; });
      CHECK(static_cast<double>(inside) * K <= static_cast<double>(n));
    }
  }
}

TEST_CASE("uniform grid and merge") {
  CHECK(same(uniform_grid(2), {0.0, 0.5, 1.0}));
  CHECK(uniform_grid(7).size() == 8);
  CHECK(same(merge_grids({0.0, 0.5, 1.0}, {0.0, 0.9, 1.0}), {0.0, 0.5, 0.9, 1.0}));
}

TEST_CASE("estimate grid on the point mass") {
  auto d = point_mass();
  Rng rng(1);
  auto next = [&] { return d.sample(rng); };
  GridOptions opts;
  opts.K = 2;
  opts.sbb_union_uniform = false;
  auto e = estimate_grid(GridMode::Sbb, 4, opts, next);
  CHECK(same(e.sbb.points, {0.0, 0.9, 1.0}));
  CHECK(e.top_bids == Points(4, 0.9));
  REQUIRE(e.log.size() == 4);
  for (const auto& r : e.log) {
    CHECK(r.rev == doctest::Approx(0.0));
    CHECK(r.gft == doctest::Approx(0.7));
  }

  opts.sbb_union_uniform = true;
  e = estimate_grid(GridMode::Sbb, 4, opts, next);
  CHECK(same(e.sbb.points, {0.0, 0.5, 0.9, 1.0}));

  e = estimate_grid(GridMode::Gbb, 4, opts, next);
  CHECK(same(e.gbb.seller, {0.0, 0.5, 1.0}));
  CHECK(same(e.gbb.buyer, {0.0, 0.5, 0.9, 1.0}));
}

TEST_CASE("F_K enumeration") {
  CHECK(ceil_log2(8) == 3);
  CHECK(ceil_log2(9) == 4);
  CHECK(ceil_log2(2) == 1);
  CHECK_THROWS_AS(build_fk({0.0}, {0.0}, 1), ContractViolation);

  auto fk = build_fk({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}, 8);
  std::set<std::pair<double, double>> plus;
  std::size_t minus = 0;
  for (const auto& m : fk) {
    if (m.kind() == Mechanism::Kind::FkPlus) plus.insert({m.base_price(), m.reserve()});
    if (m.kind() == Mechanism::Kind::FkMinus) ++minus;
  }
  std::set<std::pair<double, double>> want{{0, .5}, {0, .25}, {0, .125}, {.5, 1}, {.5, .75}, {.5, .625}};
  CHECK(plus == want);
  CHECK(minus == 9);

  for (int K : {2, 5, 17})
    for (std::size_t T : {10u, 1000u, 100000u}) {
      auto s = uniform_grid(K);
      auto f = build_fk(s, s, T);
      CHECK(f.size() <= 3 * static_cast<std::size_t>(K) * ceil_log2(T) + 2 * ceil_log2(T));
    }
}

TEST_CASE("Minus prices") {
  auto m = Mechanism::fk_minus(0.5, 0.25);
  ValuationProfile v{{0.9, 0.6}, 0.3};
  auto r = run_round(v, m);
  CHECK(r.seller_price == doctest::Approx(0.35));
  CHECK(r.outcome.traded);
  CHECK(r.outcome.revenue == doctest::Approx(0.25));

  auto c = Mechanism::fk_minus(0.1, 0.5);
  ValuationProfile one{{0.9}, 0.0};
  CHECK(run_round(one, c).seller_price == 0.0);

  auto p = Mechanism::fk_plus(0.5, 0.25);
  ValuationProfile pm{{0.9, 0.6}, 0.2};
  auto rp = run_round(pm, p);
  CHECK(rp.reserve == 0.75);
  CHECK(rp.outcome.revenue == doctest::Approx(0.25));
}

TEST_CASE("F_K revenue is nonnegative in every realization") {
  Rng rng(32);
  auto fk = build_fk(uniform_grid(6), uniform_grid(9), 1000);
  for (int rep = 0; rep < 2000; ++rep) {
    ValuationProfile v;
    v.seller = rng.uniform();
    v.buyers = {rng.uniform(), rng.uniform()};
    auto& m = fk[rng.below(fk.size())];
    Mechanism copy = m;
    CHECK(run_round(v, copy).outcome.revenue >= -1e-15);
  }
}

TEST_CASE("grid approximation of the sbb optimum") {
  Rng rng(33);
  const double delta = 0.1;
  int trials = 0, ok = 0;
  for (int inst = 0; inst < 20; ++inst) {
    auto d = random_independent(rng);
    Oracle o(d);
    double opt = o.sbb_opt().value;
    for (std::size_t K : {3u, 6u}) {
      for (int rep = 0; rep < 10; ++rep) {
        std::size_t T0 = 50 + rng.below(200);
        GridOptions opts;
        opts.K = K;
        opts.sbb_union_uniform = false;
        auto e = estimate_grid(GridMode::Sbb, T0, opts, [&] { return d.sample(rng); });
        double gap = opt - o.sbb_opt_over(e.sbb.points).value;
        ++trials;
        if (gap <= 1.0 / K + std::sqrt(std::log(2 / delta) / (2.0 * T0)) + 1e-12) ++ok;
      }
    }
  }
  CHECK(ok >= (1 - delta) * trials);
}

TEST_CASE("F_K revenue dominates the grid anchor") {
  Rng rng(34);
  for (int inst = 0; inst < 40; ++inst) {
    auto d = random_independent(rng);
    Oracle o(d);
    std::size_t K = 2 + rng.below(6), T = 100 + rng.below(5000);
    GridOptions opts;
    opts.K = K;
    auto e = estimate_grid(GridMode::Gbb, 200, opts, [&] { return d.sample(rng); });
    auto anchor = o.grid_anchor(e.gbb.seller, e.gbb.buyer);
    double rev = o.max_revenue(build_fk(e.gbb.seller, e.gbb.buyer, T));
    CHECK(anchor.gft <= 6 * std::log(static_cast<double>(T)) * rev + 2.0 / T + std::max(0.0, anchor.zeta) + 1e-12);
  }
}

TEST_CASE("grid json") {
  GbbGrid g{{0.0, 1.0}, {0.0, 0.4, 1.0}};
  auto j = to_json(g);
  CHECK(j["seller"].size() == 2);
  CHECK(j["buyer"][1] == 0.4);
}
