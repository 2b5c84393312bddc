#include <cmath>
#include <vector>

#include "doctest.h"
#include "spatialq/chain.hpp"
#include "spatialq/rng.hpp"

using namespace spatialq;

namespace {

// Uniform random zigzag policy via a nonincreasing first-dispatch column per row.
DispatchPolicy random_zigzag(Rng& rng, int L, int M) {
  DispatchPolicy p(L, M);
  int prev = 1;
  for (int l = 0; l < L; ++l) {
    prev = std::min(prev + static_cast<int>(rng.uniform(0, M + 2 - prev)), M + 1);
    for (int m = prev; m <= M; ++m) p.phi(l, m) = 1;
  }
  p.validate();
  return p;
}

RateTable random_rates(Rng& rng, int L, int M, double lo = 0.05, double hi = 0.5) {
  RateTable t(L, M);
  for (double& v : t.mu.data()) v = rng.uniform(lo, hi);
  t.recompute_bound();
  return t;
}

}  // namespace

TEST_CASE("path_stationary trivial cases") {
  RateTable rates(3, 4, 0.2);
  ZigzagPath path{{{0, 1}, {1, 1}, {1, 2}, {2, 2}}};

  SUBCASE("no births concentrates at the origin") {
    StationaryDistribution d = path_stationary(path, std::vector<double>{0, 0, 0, 0}, rates);
    CHECK(d.prob({0, 1}) == doctest::Approx(1.0));
    CHECK(d.mean_l() == doctest::Approx(0.0));
    CHECK(d.mean_m() == doctest::Approx(1.0));
  }

  SUBCASE("unit detailed-balance ratio gives a uniform pair") {
    ZigzagPath two{{{0, 0}, {1, 0}}};
    // birth rate out of index 0 equals the death rate 1 * mu at index 1.
    StationaryDistribution d = path_stationary(two, std::vector<double>{0.2, 0.0}, rates);
    CHECK(d.prob({0, 0}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.prob({1, 0}) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("hand-computed three-state chain") {
    // pi_{i+1}/pi_i = lambda_i / (l_{i+1} mu): ratios 2 and 3/4.
    RateTable r(2, 2, 0.0);
    r.mu(1, 0) = 0.5;
    r.mu(1, 1) = 0.4;
    r.mu(2, 0) = 0.4;
    r.recompute_bound();
    ZigzagPath p3{{{0, 0}, {1, 0}, {2, 0}}};
    StationaryDistribution d = path_stationary(p3, std::vector<double>{1.0, 0.6, 0.0}, r);
    // pi = (1, 2, 1.5) normalized.
    CHECK(d.prob({0, 0}) == doctest::Approx(1.0 / 4.5).epsilon(1e-12));
    CHECK(d.prob({1, 0}) == doctest::Approx(2.0 / 4.5).epsilon(1e-12));
    CHECK(d.prob({2, 0}) == doctest::Approx(1.5 / 4.5).epsilon(1e-12));
  }
}

TEST_CASE("generator_stationary trivial and structural cases") {
  RateTable rates(3, 3, 0.25);
  ModelConfig cfg{3, 2.0, 3, 5.0, 0.0, 2.0};

  SUBCASE("no arrivals drains to the closure of (0,0)") {
    DispatchPolicy p(3, 3);
    StationaryDistribution d = generator_stationary(p, PricingPolicy(3, 3, 0.0), rates, cfg);
    CHECK(d.prob({0, 0}) == doctest::Approx(1.0));
  }

  SUBCASE("greedy policy matches a hand-built birth-death chain") {
    DispatchPolicy greedy(3, 3);
    for (int l = 0; l < 3; ++l)
      for (int m = 1; m <= 3; ++m) greedy.phi(l, m) = 1;
    const double lam = 0.4, mu = 0.25;
    StationaryDistribution d =
        generator_stationary(greedy, PricingPolicy(3, 3, lam), rates, cfg);
    // Recurrent class: (0,0),(1,0),(2,0),(3,0),(3,1),(3,2),(3,3) — an M/M/3
    // queue with arrival lam and per-server rate mu, capped queue. Unnormalized
    // pi from detailed balance.
    std::vector<double> pi = {1.0};
    double rho = 1.0;
    for (int l = 1; l <= 3; ++l) {
      rho *= lam / (l * mu);
      pi.push_back(rho);
    }
    for (int m = 1; m <= 3; ++m) {
      rho *= lam / (3 * mu);
      pi.push_back(rho);
    }
    double z = 0;
    for (double v : pi) z += v;
    CHECK(d.prob({0, 0}) == doctest::Approx(pi[0] / z).epsilon(1e-10));
    CHECK(d.prob({2, 0}) == doctest::Approx(pi[2] / z).epsilon(1e-10));
    CHECK(d.prob({3, 0}) == doctest::Approx(pi[3] / z).epsilon(1e-10));
    CHECK(d.prob({3, 3}) == doctest::Approx(pi[6] / z).epsilon(1e-10));
  }
}

TEST_CASE("path_stationary matches the generator oracle" * doctest::timeout(60)) {
  // The acceptance gate runs 500 instances; this is the fast everyday subset.
  Rng rng(31337, 0);
  for (int rep = 0; rep < 100; ++rep) {
    int L = 2 + static_cast<int>(rng.uniform(0, 5));
    int M = 2 + static_cast<int>(rng.uniform(0, 11));
    L = std::min(L, 6);
    M = std::min(M, 12);
    DispatchPolicy policy = random_zigzag(rng, L, M);
    RateTable rates = random_rates(rng, L, M);
    PricingPolicy pricing(L, M);
    ModelConfig cfg{L, 3.0, M, 5.0, 0.0, 2.0};
    for (double& v : pricing.lambda.data()) v = rng.uniform(0.0, 3.0);
    // The path chain blocks arrivals at its terminal (m = M); match that on
    // the generator side, whose cap behavior is a forced dispatch otherwise.
    for (int l = 0; l <= L; ++l) pricing.lambda(l, M) = 0.0;

    ZigzagPath path = path_of_policy(policy);
    StationaryDistribution a = path_stationary(path, pricing, rates);
    StationaryDistribution b = generator_stationary(policy, pricing, rates, cfg);
    REQUIRE(a.support.size() == b.support.size());
    double max_err = 0;
    for (size_t i = 0; i < a.support.size(); ++i)
      max_err = std::max(max_err, std::abs(a.probs[i] - b.prob(a.support[i])));
    CHECK(max_err <= 1e-10);
  }
}

TEST_CASE("objective") {
  LinearDemandCurve curve(8.0, 2.0);
  ReducedCosts costs{0.5, 0.5, 5.0};

  SUBCASE("single idle state with no arrivals scores zero") {
    StationaryDistribution d;
    d.support = {{0, 0}};
    d.probs = {1.0};
    PricingPolicy pricing(2, 2, 0.0);
    CHECK(objective(d, pricing, costs, curve, 5.0) == doctest::Approx(0.0));
  }

  SUBCASE("hand-computed two-state value") {
    StationaryDistribution d;
    d.support = {{0, 0}, {1, 0}};
    d.probs = {0.5, 0.5};
    PricingPolicy pricing(1, 1, 0.0);  // M = 1 so neither state sits at the cap
    pricing.lambda(0, 0) = 4.0;  // p1 = 1
    pricing.lambda(1, 0) = 2.0;  // p1 = 1.5
    const double t0 = 5.0;
    double expect = 0.5 * (4.0 * (5.0 + 1.0 * t0)) + 0.5 * (2.0 * (5.0 + 1.5 * t0) - 0.5 * 1);
    CHECK(objective(d, pricing, costs, curve, t0) == doctest::Approx(expect).epsilon(1e-12));
    // Vector overload agrees.
    CHECK(objective(d, std::vector<double>{4.0, 2.0}, costs, curve, t0) ==
          doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("decomposes into revenue minus expected penalties") {
    Rng rng(7, 0);
    int L = 4, M = 5;
    DispatchPolicy policy = random_zigzag(rng, L, M);
    RateTable rates = random_rates(rng, L, M);
    PricingPolicy pricing(L, M);
    for (double& v : pricing.lambda.data()) v = rng.uniform(0.0, 6.0);
    ModelConfig cfg{L, 8.0, M, 5.0, 0.0, 2.0};
    StationaryDistribution d = generator_stationary(policy, pricing, rates, cfg);
    double val = objective(d, pricing, costs, curve, cfg.t0);
    double revenue = 0, el = 0, em = 0;
    for (size_t i = 0; i < d.support.size(); ++i) {
      State s = d.support[i];
      double lam = (s.m >= M && s.l >= L) ? 0.0 : pricing.lambda(s.l, s.m);
      revenue += d.probs[i] * lam * (costs.p0_eff + curve.price_of_rate(lam) * cfg.t0);
      el += d.probs[i] * s.l;
      em += d.probs[i] * s.m;
    }
    CHECK(val == doctest::Approx(revenue - costs.c_d * el - costs.c_r * em).epsilon(1e-12));
    CHECK(el == doctest::Approx(d.mean_l()).epsilon(1e-12));
    CHECK(em == doctest::Approx(d.mean_m()).epsilon(1e-12));
  }
}

TEST_CASE("static_objective") {
  Rng rng(17, 0);
  RateTable rates = random_rates(rng, 3, 4);
  LinearDemandCurve curve(8.0, 2.0);
  ReducedCosts costs{0.5, 0.5, 5.0};
  ZigzagPath path{{{0, 1}, {1, 1}, {2, 1}, {2, 2}}};

  SUBCASE("zero rate pays only the origin's penalties") {
    double v = static_objective(0.0, path, 4, rates, costs, curve, 5.0);
    CHECK(v == doctest::Approx(-(costs.c_d * 0 + costs.c_r * 1)).epsilon(1e-12));
  }

  SUBCASE("cutoff 1 blocks everything") {
    double v0 = static_objective(5.0, path, 1, rates, costs, curve, 5.0);
    CHECK(v0 == doctest::Approx(-costs.c_r * 1).epsilon(1e-12));
  }

  SUBCASE("agrees with path_stationary on the truncated path") {
    const double lam = 3.0;
    const int cutoff = 3;
    ZigzagPath trunc{{path[0], path[1], path[2]}};
    std::vector<double> lams = {lam, lam, 0.0};
    StationaryDistribution d = path_stationary(trunc, lams, rates);
    double expect = objective(d, lams, costs, curve, 5.0);
    CHECK(static_objective(lam, path, cutoff, rates, costs, curve, 5.0) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("metrics") {
  LinearDemandCurve curve(8.0, 2.0);
  ReducedCosts costs{0.5, 0.5, 5.0};
  ModelConfig cfg{3, 8.0, 4, 5.0, 5.0 - 0.2 * 5.0, 2.0};
  Rng rng(23, 0);
  RateTable rates = random_rates(rng, 3, 4);
  DispatchPolicy policy = random_zigzag(rng, 3, 4);
  PricingPolicy pricing(3, 4);
  for (double& v : pricing.lambda.data()) v = rng.uniform(0.5, 6.0);
  StationaryDistribution d = generator_stationary(policy, pricing, rates, cfg);
  EvalReport rep = metrics(d, policy, pricing, rates, curve, cfg, costs);

  CHECK(rep.objective == doctest::Approx(objective(d, pricing, costs, curve, cfg.t0)));
  CHECK(rep.mean_l == doctest::Approx(d.mean_l()));
  CHECK(rep.mean_m == doctest::Approx(d.mean_m()));

  // Little's law: E[m] = avg_queue_time * effective arrival rate.
  double eff = 0;
  for (size_t i = 0; i < d.support.size(); ++i) {
    State s = d.support[i];
    if (s.m >= cfg.M && s.l >= cfg.L) continue;
    eff += d.probs[i] * pricing.lambda(s.l, s.m);
  }
  CHECK(rep.avg_queue_time * eff == doctest::Approx(d.mean_m()).epsilon(1e-9));

  // Throughput is the stationary completion rate.
  double thr = 0;
  for (size_t i = 0; i < d.support.size(); ++i)
    thr += d.probs[i] * d.support[i].l * rates.mu(d.support[i].l, d.support[i].m);
  CHECK(rep.throughput == doctest::Approx(thr).epsilon(1e-12));

  SUBCASE("dead system reports zero flows") {
    PricingPolicy silent(3, 4, 0.0);
    DispatchPolicy hold(3, 4);
    StationaryDistribution dd = generator_stationary(hold, silent, rates, cfg);
    EvalReport r0 = metrics(dd, hold, silent, rates, curve, cfg, costs);
    CHECK(r0.throughput == doctest::Approx(0.0));
    CHECK(r0.revenue_rate == doctest::Approx(0.0));
    CHECK(std::isnan(r0.avg_pickup_time));
    CHECK(std::isnan(r0.avg_queue_time));
  }
}

TEST_CASE("closure chain carries dispatch attribution") {
  // One chain transition that triggers a closure dispatch must report the
  // pickup attribution 1/mu(post) - t0 for the post-dispatch state.
  RateTable rates(2, 2, 0.0);
  rates.mu(1, 0) = 0.125;  // 1/mu = 8
  rates.mu(1, 1) = 0.1;
  rates.mu(2, 0) = 0.1;    // 1/mu = 10
  rates.recompute_bound();
  DispatchPolicy policy(2, 2);
  policy.phi(0, 1) = 1;
  policy.phi(1, 1) = 1;
  policy.phi(0, 2) = 1;
  policy.phi(1, 2) = 1;
  ModelConfig cfg{2, 2.0, 2, 5.0, 0.0, 2.0};
  Ctmc chain = build_closure_chain(policy, PricingPolicy(2, 2, 1.0), rates, cfg);

  bool found = false;
  for (size_t i = 0; i < chain.states.size(); ++i) {
    if (!(chain.states[i] == State{0, 0})) continue;
    for (const auto& t : chain.transitions[i]) {
      if (chain.states[t.target] == State{1, 0}) {
        // Arrival at (0,0) -> (0,1) closes to (1,0): one dispatch, pickup 8 - 5.
        CHECK(t.dispatches == 1);
        CHECK(t.pickup_sum == doctest::Approx(8.0 - 5.0).epsilon(1e-12));
        found = true;
      }
    }
  }
  CHECK(found);
}
