#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tsm/environment.hpp"
#include "tsm/error.hpp"
#include "tsm/gft_estimation.hpp"
#include "tsm/grid.hpp"
#include "tsm/oracle.hpp"

using namespace tsm;

namespace {

StageOneFeedback feedback(std::vector<double> bids, double reserve) {
  StageOneFeedback fb;
  fb.reserve = reserve;
  for (std::size_t i = 0; i < bids.size(); ++i) fb.revealed.push_back({i, bids[i]});
  return fb;
}

ValuationProfile random_profile(Rng& rng) {
  ValuationProfile v;
  v.seller = rng.below(4) == 0 ? static_cast<double>(rng.below(11)) / 10 : rng.uniform();
  std::size_t n = 1 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i)
    v.buyers.push_back(rng.below(4) == 0 ? static_cast<double>(rng.below(11)) / 10 : rng.uniform());
  return v;
}

MarketDistribution instance() {
  return *MarketDistribution::independent(Dist1D::discrete({0.05, 0.3, 0.7}, {0.5, 0.3, 0.2}),
                                          {Dist1D::discrete({0.95, 0.6, 0.2}, {0.4, 0.4, 0.2}),
                                           Dist1D::discrete({0.85, 0.3}, {0.5, 0.5})})
              .to_discrete();
}

// E[(max{q, b̲} - s) I(s <= max{q, b̲}) I(b̄ >= q)], directly from the atoms.
double sbb_gft1(const MarketDistribution& d, double q) {
  double v = 0;
  for (const auto& a : d.as_discrete().atoms) {
    auto t = highest_and_second(a.profile);
    double p = std::max(q, t.second);
    if (a.profile.seller <= p && t.highest >= q) v += a.prob * (p - a.profile.seller);
  }
  return v;
}

}  // namespace

TEST_CASE("sbb indicator examples") {
  CHECK(gft1_indicator_sbb(0.4, 0.3, feedback({0.7, 0.45}, 0.4), true) == 1);
  CHECK(gft1_indicator_sbb(0.4, 0.6, feedback({}, 0.4), true) == 0);
  CHECK(gft1_indicator_sbb(0.4, 0.5, feedback({0.45}, 0.4), true) == 0);
  CHECK(gft1_indicator_sbb(0.4, 0.3, feedback({0.7, 0.45}, 0.4), false) == 0);
  CHECK_THROWS_AS(gft1_indicator_sbb(0.4, 0.3, feedback({0.7}, 0.3), true), ContractViolation);
}

TEST_CASE("gbb indicator examples") {
  CHECK(gft1_indicator_gbb(0.3, 0.5, 0.6, feedback({0.7}, 0.0), true) == 1);
  CHECK(gft1_indicator_gbb(0.6, 0.5, 0.6, feedback({0.7}, 0.0), true) == 0);
  CHECK(gft1_indicator_gbb(0.3, 0.5, 0.8, feedback({0.7}, 0.0), true) == 0);
  CHECK_THROWS_AS(gft1_indicator_gbb(0.3, 0.5, 0.8, feedback({0.7}, 0.3), true), ContractViolation);
}

TEST_CASE("indicators match the hidden profile") {
  Rng rng(41);
  for (int rep = 0; rep < 20000; ++rep) {
    auto v = random_profile(rng);
    auto t = highest_and_second(v);
    double U = rng.below(5) == 0 ? static_cast<double>(rng.below(11)) / 10 : rng.uniform();
    double qk = rng.below(3) == 0 ? static_cast<double>(rng.below(11)) / 10 : rng.uniform();
    double p = rng.uniform();

    auto pol = Mechanism::fixed(U, U);
    auto r = run_round(v, pol);
    int truth = v.seller <= U && U <= std::max(qk, t.second) && t.highest >= qk;
    CHECK(gft1_indicator_sbb(U, qk, r.feedback, r.seller_bit) == truth);

    auto pol0 = Mechanism::fixed(U, 0.0);
    auto r0 = run_round(v, pol0);
    int truth0 = v.seller <= U && U <= p && t.highest >= qk;
    CHECK(gft1_indicator_gbb(U, p, qk, r0.feedback, r0.seller_bit) == truth0);
  }
}

TEST_CASE("bonus examples") {
  CHECK(hoeffding_bonus(100, std::exp(8.0), 2.0) == doctest::Approx(0.4));
  CHECK(hoeffding_bonus(200, std::exp(8.0), 2.0) == doctest::Approx(2 * std::sqrt(0.02)));
  CHECK(hoeffding_bonus(0, 10.0) == std::numeric_limits<double>::infinity());
  CHECK(hoeffding_bonus(50, 10.0) == doctest::Approx(std::sqrt(std::log(10.0) / 100)));
}

TEST_CASE("gft2 examples") {
  auto fb = feedback({0.8}, 0.2);
  CHECK(gft2_realization(0.5, 0.6, fb, true, 0.2) == doctest::Approx(0.3));
  CHECK(gft2_realization(0.5, 0.9, fb, true, 0.2) == 0.0);
  CHECK(gft2_realization(0.5, 0.6, fb, false, 0.2) == 0.0);
  CHECK_THROWS_AS(gft2_realization(0.5, 0.6, feedback({0.8}, 0.7), true, 0.7), FeedbackUnavailable);
  CHECK(gft2_realization_sbb(0.5, feedback({0.9, 0.6}, 0.5), true) == doctest::Approx(0.3));
}

TEST_CASE("gft2 matches the hidden profile") {
  Rng rng(42);
  for (int rep = 0; rep < 20000; ++rep) {
    auto v = random_profile(rng);
    auto t = highest_and_second(v);
    double p = rng.uniform(), q = rng.uniform();
    double qp = q + (1 - q) * rng.uniform();
    if (rng.below(5) == 0) qp = q;
    auto pol = Mechanism::fixed(p, q);
    auto r = run_round(v, pol);
    double truth = (v.seller <= p && t.highest >= qp) ? t.highest - p : 0.0;
    CHECK(gft2_realization(p, qp, r.feedback, r.seller_bit, q) == doctest::Approx(truth).epsilon(1e-15));

    auto sbb = Mechanism::strong_budget_balanced(q);
    auto rs = run_round(v, sbb);
    double ps = std::max(q, t.second);
    double truth_s = (v.seller <= ps && t.highest >= q) ? t.highest - ps : 0.0;
    CHECK(gft2_realization_sbb(q, rs.feedback, rs.seller_bit) == doctest::Approx(truth_s).epsilon(1e-15));
  }
}

TEST_CASE("tables") {
  Gft1Table t(3);
  t.add_round({1, 0, 1});
  t.add_round({1, 1, 0});
  CHECK(t.count() == 2);
  CHECK(t.mean(0) == 1.0);
  CHECK(t.mean(1) == 0.5);
  CHECK(t.upper(2, 10.0) == doctest::Approx(0.5 + std::sqrt(std::log(10.0) / 4)));

  Gft2Table g(2);
  g.add(1, 0.25);
  CHECK(g.count(0) == 0);
  CHECK(g.count(1) == 1);
  CHECK(g.mean(1) == 0.25);
  CHECK(g.upper(0, 10.0) == std::numeric_limits<double>::infinity());

  std::ostringstream os;
  g.dump_csv(os, {0.0, 0.5}, 10.0);
  CHECK(os.str().find("0.25") != std::string::npos);
}

TEST_CASE("gft1 estimators are unbiased and optimistic") {
  auto d = instance();
  Oracle o(d);
  const double delta = 0.1;
  const std::size_t T0 = 400;
  auto grid = uniform_grid(8);
  const double log_arg = 2.0 * grid.size() / delta;
  int sbb_ok = 0, gbb_ok = 0, reps = 200;
  Rng env(43, kEnvironmentStream), lr(43, kLearnerStream);
  for (int rep = 0; rep < reps; ++rep) {
    Gft1Table sbb(grid.size()), gbb(grid.size() * grid.size());
    for (std::size_t t = 0; t < T0; ++t) {
      auto v = d.sample(env);
      double U = lr.uniform();
      auto pol = Mechanism::fixed(U, U);
      auto r = run_round(v, pol);
      std::vector<int> ind;
      for (double q : grid) ind.push_back(gft1_indicator_sbb(U, q, r.feedback, r.seller_bit));
      sbb.add_round(ind);

      auto pol0 = Mechanism::fixed(U, 0.0);
      auto r0 = run_round(v, pol0);
      ind.clear();
      for (double p : grid)
        for (double q : grid) ind.push_back(gft1_indicator_gbb(U, p, q, r0.feedback, r0.seller_bit));
      gbb.add_round(ind);
    }
    bool ok = true;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double truth = sbb_gft1(d, grid[k]);
      double bonus = hoeffding_bonus(T0, log_arg);
      ok = ok && std::fabs(sbb.mean(k) - truth) <= bonus && sbb.upper(k, log_arg) >= truth;
    }
    sbb_ok += ok;
    ok = true;
    double log_arg2 = 2.0 * grid.size() * grid.size() / delta;
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t k = 0; k < grid.size(); ++k) {
        double truth = o.expected_values(grid[i], grid[k]).gft1;
        std::size_t idx = i * grid.size() + k;
        ok = ok && std::fabs(gbb.mean(idx) - truth) <= hoeffding_bonus(T0, log_arg2);
      }
    gbb_ok += ok;
  }
  CHECK(sbb_ok >= (1 - delta) * reps);
  CHECK(gbb_ok >= (1 - delta) * reps);
}
