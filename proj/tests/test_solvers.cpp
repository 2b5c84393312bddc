#include <cmath>
#include <vector>

#include "doctest.h"
#include "spatialq/chain.hpp"
#include "spatialq/rng.hpp"
#include "spatialq/solvers.hpp"

using namespace spatialq;

namespace {

// Small Assumption-2-friendly concave table (see test_rates.cpp).
RateTable concave_table(int L, int M, double a, double b, double c) {
  RateTable t(L, M);
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= M; ++m) t.mu(l, m) = a + b * std::sqrt(m + 1.0) + c * std::sqrt(L - l + 1.0);
  t.recompute_bound();
  return t;
}

// Service rates of the sub-optimality counterexample, extended past m = 3 by
// repeating column 3 (per-driver rate 1 for m <= 1, 2 for m >= 2).
RateTable counterexample_rates(int M) {
  RateTable t(3, M);
  for (int l = 0; l <= 3; ++l)
    for (int m = 0; m <= M; ++m) t.mu(l, m) = (m >= 2) ? 2.0 : 1.0;
  t.recompute_bound();
  return t;
}

}  // namespace

TEST_CASE("m_bound formula") {
  // Per-arrival revenue is capped by p0_eff + p_max * t0 = 5 + 2 * 2 = 9.
  RateTable t(20, 10, 0.125);
  LinearDemandCurve curve(8.0, 2.0);
  CHECK(m_bound(t, ReducedCosts{0.5, 0.5, 5.0}, curve, 20, 2.0) == 45);  // 20*0.125*9/0.5
  CHECK(m_bound(t, ReducedCosts{0.5, 100.0, 5.0}, curve, 20, 2.0) == 1);  // large c_r shrinks it
  CHECK(m_bound(t, ReducedCosts{0.5, 0.7, 5.0}, curve, 20, 2.0) == 33);  // ceil(32.142...)
}

TEST_CASE("optimize_static_price") {
  LinearDemandCurve curve(8.0, 2.0);
  ReducedCosts costs{0.5, 0.5, 5.0};

  SUBCASE("degenerate path scores zero") {
    RateTable t(1, 0, 0.2);
    ZigzagPath p{{{0, 0}}};
    StaticPriceResult r = optimize_static_price(p, 1, t, costs, curve, 5.0);
    CHECK(r.value == doctest::Approx(0.0));
  }

  SUBCASE("matches a dense brute-force grid") {
    RateTable t(2, 1);
    t.mu(1, 0) = 0.15;
    t.mu(1, 1) = 0.18;
    t.mu(2, 0) = 0.12;
    t.mu(2, 1) = 0.14;
    t.recompute_bound();
    ZigzagPath p{{{0, 0}, {1, 0}, {1, 1}}};
    const int cutoff = 3;
    StaticPriceResult r = optimize_static_price(p, cutoff, t, costs, curve, 5.0);
    double best = -1e18, best_arg = 0;
    for (double lam = 0; lam <= 8.0 + 1e-12; lam += 1e-5) {
      double v = static_objective(lam, p, cutoff, t, costs, curve, 5.0);
      if (v > best) best = v, best_arg = lam;
    }
    CHECK(r.value == doctest::Approx(best).epsilon(1e-8));
    CHECK(r.lambda_bar == doctest::Approx(best_arg).epsilon(1e-3));
  }

  SUBCASE("raising the base fare never lowers the value") {
    RateTable t(2, 2, 0.2);
    ZigzagPath p{{{0, 1}, {1, 1}, {1, 2}}};
    double prev = -1e18;
    for (double p0_eff : {1.0, 3.0, 5.0, 9.0}) {
      double v = optimize_static_price(p, 3, t, ReducedCosts{0.5, 0.5, p0_eff}, curve, 5.0).value;
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("dynamic_price_on_path") {
  LinearDemandCurve curve(8.0, 2.0);
  ReducedCosts costs{0.5, 0.5, 5.0};
  ModelConfig cfg{4, 8.0, 5, 5.0, 0.0, 2.0};

  SUBCASE("gain equals the exact evaluation of its own rates") {
    RateTable t = concave_table(4, 5, 0.08, 0.01, 0.01);
    ZigzagPath p{{{0, 1}, {1, 1}, {2, 1}, {2, 2}, {3, 2}, {3, 3}, {3, 4}, {3, 5}}};
    PathPricingResult r = dynamic_price_on_path(p, t, costs, curve, cfg);
    StationaryDistribution d = path_stationary(p, r.lambda_on_path, t);
    double eval = objective(d, r.lambda_on_path, costs, curve, cfg.t0);
    CHECK(r.objective == doctest::Approx(eval).epsilon(1e-12));
    CHECK(r.gain == doctest::Approx(eval).epsilon(1e-6));
    // The terminal blocks arrivals.
    CHECK(r.lambda_on_path.back() == doctest::Approx(0.0));
    // The pricing grid holds the on-path rates.
    for (int i = 0; i < p.size(); ++i)
      CHECK(r.pricing.lambda(p[i].l, p[i].m) == doctest::Approx(r.lambda_on_path[i]));
  }

  SUBCASE("congestion-free limit recovers the static revenue maximizer") {
    // One service state with a huge completion rate: the queue never builds,
    // so the optimal rate approaches argmax lambda (p0_eff + p1(lambda) t0).
    RateTable t(1, 1, 500.0);
    ZigzagPath p{{{0, 0}, {1, 0}, {1, 1}}};
    ModelConfig small{1, 8.0, 1, 5.0, 0.0, 2.0};
    PathPricingResult r = dynamic_price_on_path(p, t, costs, curve, small);
    double ideal = curve.best_rate(costs.p0_eff, small.t0, 8.0);
    CHECK(r.lambda_on_path[0] == doctest::Approx(ideal).epsilon(0.02));
  }

  SUBCASE("dominates the best static price on the same path") {
    RateTable t = concave_table(4, 5, 0.08, 0.01, 0.01);
    ZigzagPath p{{{0, 1}, {1, 1}, {2, 1}, {2, 2}, {3, 2}, {3, 3}, {3, 4}, {3, 5}}};
    PathPricingResult dyn = dynamic_price_on_path(p, t, costs, curve, cfg);
    StaticPriceResult sta = optimize_static_price(p, p.size(), t, costs, curve, cfg.t0);
    CHECK(dyn.objective >= sta.value - 1e-9);
  }
}

TEST_CASE("zigzag_dp") {
  LinearDemandCurve curve(8.0, 2.0);
  ModelConfig cfg{6, 8.0, 8, 5.0, 0.0, 2.0};
  RateTable rates = mc_estimate_rates(ModelConfig{6, 8.0, 8, mean_trip_time(), 0.0, 2.0}, 4000, 3);

  SUBCASE("dynamic dominates static; both evaluate exactly") {
    ReducedCosts costs{0.5, 0.5, 5.0};
    ZigzagDpSolution sol = zigzag_dp(rates, costs, curve, cfg);
    CHECK(sol.dynamic.objective >= sol.static_best.objective - 1e-9);
    CHECK(sol.dynamic.method == "zigzag-dyn");
    CHECK(sol.static_best.method == "zigzag-sta");
    CHECK(is_zigzag(sol.dynamic.dispatch).ok);
    CHECK_NOTHROW(sol.dynamic.path.validate());
    // Reported objectives are chain-eval values of the returned artifacts.
    StationaryDistribution d = path_stationary(sol.dynamic.path, sol.dynamic.pricing, rates);
    CHECK(sol.dynamic.objective ==
          doctest::Approx(objective(d, sol.dynamic.pricing, costs, curve, cfg.t0)).epsilon(1e-10));
  }

  SUBCASE("prohibitive penalties cut off immediately") {
    // Both penalties at >= Lambda * p_max * 10: serving any rider is
    // unprofitable (a dispatch-on-arrival path dodges c_r but not c_d).
    ReducedCosts costs{8.0 * 2.0 * 10.0, 8.0 * 2.0 * 10.0, 5.0};
    ZigzagDpSolution sol = zigzag_dp(rates, costs, curve, cfg);
    CHECK(sol.static_best.objective == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("agrees with the closed form under the assumption and c_d = c_r") {
    RateTable t = concave_table(6, 8, 0.08, 0.012, 0.012);
    REQUIRE(check_assumption2(t).empty());
    ReducedCosts costs{0.5, 0.5, 5.0};
    ZigzagDpSolution sol = zigzag_dp(t, costs, curve, cfg);
    DispatchPolicy closed = closed_form_zigzag(t);
    // Equality on the recurrent path (off-path cells are unconstrained).
    for (int i = 0; i < sol.dynamic.path.size(); ++i) {
      State s = sol.dynamic.path[i];
      CHECK(closed.phi(s.l, s.m) == 0);  // path states are hold states
    }
    ZigzagPath closed_path = path_of_policy(closed);
    REQUIRE(closed_path.size() == sol.dynamic.path.size());
    for (int i = 0; i < closed_path.size(); ++i) CHECK(closed_path[i] == sol.dynamic.path[i]);
  }
}

TEST_CASE("relative_value_iteration") {
  LinearDemandCurve curve(8.0, 2.0);
  ReducedCosts costs{0.5, 0.5, 5.0};
  ModelConfig cfg{5, 8.0, 6, 5.0, 0.0, 2.0};
  RateTable rates = mc_estimate_rates(ModelConfig{5, 8.0, 6, mean_trip_time(), 0.0, 2.0}, 4000, 9);

  SUBCASE("silent system has zero gain") {
    // With no arrivals every state drains to an empty system. The claim only
    // holds without queue states: for M > 0 the states (0, m > 0) are
    // absorbing with average reward -c_r m, the MDP is multichain, and
    // relative value iteration rightly refuses to converge (checked below).
    ModelConfig no_queue{5, 8.0, 0, 5.0, 0.0, 2.0};
    RateTable flat(5, 0, 0.2);
    ViOptions opt;
    opt.fixed_lambda = 0.0;
    ViDiagnostics diag;
    SolveResult r = relative_value_iteration(flat, costs, curve, no_queue, opt, &diag);
    CHECK(std::abs(diag.gain) <= 1e-6);
    CHECK(std::abs(r.objective) <= 1e-9);

    ViOptions capped = opt;
    capped.max_sweeps = 2000;
    CHECK_THROWS_WITH_AS(relative_value_iteration(rates, costs, curve, cfg, capped),
                         doctest::Contains("no convergence"), std::runtime_error);
  }

  SUBCASE("sweep order does not change the gain or the objective") {
    ViOptions gs;  // Gauss-Seidel warm start (default)
    ViOptions jac;
    jac.gauss_seidel = false;
    ViDiagnostics dg, dj;
    SolveResult a = relative_value_iteration(rates, costs, curve, cfg, gs, &dg);
    SolveResult b = relative_value_iteration(rates, costs, curve, cfg, jac, &dj);
    CHECK(dg.gain == doctest::Approx(dj.gain).epsilon(1e-7));
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-7));
    // Average-reward consistency: the gain equals the stationary evaluation
    // of the extracted policy.
    CHECK(dg.gain == doctest::Approx(a.objective).epsilon(1e-6));
  }

  SUBCASE("matches zigzag DP at c_d = c_r") {
    SolveResult vi = relative_value_iteration(rates, costs, curve, cfg);
    ZigzagDpSolution zz = zigzag_dp(rates, costs, curve, cfg);
    CHECK(std::abs(zz.dynamic.objective - vi.objective) / vi.objective <= 1e-3);
  }

  SUBCASE("full action mode never loses to single dispatch") {
    ViOptions full;
    full.action_mode = ViOptions::ActionMode::full;
    SolveResult a = relative_value_iteration(rates, costs, curve, cfg);
    SolveResult b = relative_value_iteration(rates, costs, curve, cfg, full);
    CHECK(b.objective >= a.objective - 1e-7);
  }
}

TEST_CASE("counterexample: the optimal policy is not zigzag") {
  // Service rates of the appendix counterexample, constant price, c_d = c_r
  // = 0.1. Value iteration must return the non-zigzag hold at (2,2) and
  // strictly beat every zigzag policy under the same fixed price.
  const int L = 3, M = 8;
  RateTable rates = counterexample_rates(M);
  ReducedCosts costs{0.1, 0.1, 1.0};
  const double Lam = 4.0;
  ModelConfig cfg{L, Lam, M, 1.0, 0.0, 1.0};
  LinearDemandCurve curve(Lam, 1e-9);  // essentially constant price p0_eff
  ViOptions opt;
  opt.fixed_lambda = Lam;
  SolveResult vi = relative_value_iteration(rates, costs, curve, cfg, opt);

  // Expected grid: dispatch everywhere except the hold at (2,2) (and the
  // structural zeros); columns past 3 repeat column 3.
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= M; ++m) {
      int expect = (l < L && m >= 1) ? 1 : 0;
      if (l == 2 && m == 2) expect = 0;
      CHECK(static_cast<int>(vi.dispatch.phi(l, m)) == expect);
    }
  CHECK(!is_zigzag(vi.dispatch).ok);

  // Exhaustive zigzag comparison: thresholds t_0 <= t_1 <= t_2 in 1..M+1.
  double best_zigzag = -1e18;
  for (int t0 = 1; t0 <= M + 1; ++t0)
    for (int t1 = t0; t1 <= M + 1; ++t1)
      for (int t2 = t1; t2 <= M + 1; ++t2) {
        DispatchPolicy p(L, M);
        const int th[3] = {t0, t1, t2};
        for (int l = 0; l < L; ++l)
          for (int m = th[l]; m <= M; ++m) p.phi(l, m) = 1;
        PricingPolicy pr(L, M, Lam);
        StationaryDistribution d = generator_stationary(p, pr, rates, cfg);
        best_zigzag = std::max(best_zigzag, objective(d, pr, costs, curve, cfg.t0));
      }
  CHECK(vi.objective > best_zigzag + 1e-3);
}

TEST_CASE("greedy policy and its dynamic pricing") {
  ModelConfig cfg{4, 8.0, 5, 5.0, 0.0, 2.0};
  DispatchPolicy g = greedy_policy(cfg);
  for (int l = 0; l <= 4; ++l)
    for (int m = 0; m <= 5; ++m) CHECK(g.phi(l, m) == ((l < 4 && m >= 1) ? 1 : 0));
  CHECK(is_zigzag(g).ok);
  CHECK(apply_dispatch_closure(g, {0, 5}) == State{4, 1});

  SUBCASE("greedy-dynamic never beats zigzag-dynamic") {
    LinearDemandCurve curve(8.0, 2.0);
    ReducedCosts costs{0.5, 0.5, 5.0};
    RateTable rates = mc_estimate_rates(ModelConfig{4, 8.0, 5, mean_trip_time(), 0.0, 2.0}, 4000, 5);
    SolveResult gd = solve_greedy_dynamic(rates, costs, curve, cfg);
    ZigzagDpSolution zz = zigzag_dp(rates, costs, curve, cfg);
    CHECK(gd.objective <= zz.dynamic.objective + 1e-9);
    CHECK(gd.method == "greedy-dyn");
    // The reported objective is the chain-eval value of the returned policy.
    StationaryDistribution d = generator_stationary(gd.dispatch, gd.pricing, rates, cfg);
    CHECK(gd.objective ==
          doctest::Approx(objective(d, gd.pricing, costs, curve, cfg.t0)).epsilon(1e-9));
  }
}
