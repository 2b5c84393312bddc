#pragma once

#include <vector>

#include "spatialq/model.hpp"
#include "spatialq/rates.hpp"

namespace spatialq {

struct StationaryDistribution {
  std::vector<State> support;  ///< distinct states
  std::vector<double> probs;   ///< matching probabilities, sum to 1

  int index_of(State s) const;          ///< -1 if absent
  double prob(State s) const;           ///< 0 if absent
  double mean_l() const;
  double mean_m() const;
};

/// Continuous-time Markov chain over an explicit state list. Each transition
/// carries the number of instantaneous closure dispatches it triggers and the
/// summed pickup-time attribution (1/mu - t0 at each post-dispatch state),
/// which the metrics report consumes.
struct Ctmc {
  struct Transition {
    int target = -1;
    double rate = 0;
    int dispatches = 0;
    double pickup_sum = 0;
  };
  std::vector<State> states;
  std::vector<std::vector<Transition>> transitions;  ///< per source index
};

/// Embedded post-closure chain of (policy, pricing): arrival (l,m) ->
/// closure(l, m+1) at rate lambda(l,m) for m < M, completion (l,m) ->
/// closure(l-1, m) at rate l*mu. Explored from closure((0,0)).
Ctmc build_closure_chain(const DispatchPolicy& policy, const PricingPolicy& pricing,
                         const RateTable& rates, const ModelConfig& cfg);

/// Stationary distribution of a CTMC: restricts to the recurrent class
/// reached from state 0 (reported support), then solves pi Q = 0, sum pi = 1
/// by dense elimination (or power iteration on the uniformized kernel above
/// 5000 states).
StationaryDistribution ctmc_stationary(const Ctmc& chain);

/// Product-form stationary law along a zigzag path (Eq. 5, detailed-balance
/// form): pi(i+1)/pi(i) = lambda_i / (l_{i+1} mu_{l_{i+1}, m_{i+1}}).
/// lambda_on_path[i] is the birth rate out of path index i (0-based); the
/// terminal entry is forced to 0 (arrivals blocked at the path's end).
StationaryDistribution path_stationary(const ZigzagPath& path,
                                       const std::vector<double>& lambda_on_path,
                                       const RateTable& rates);

/// Convenience overload reading the birth rates from a pricing grid.
StationaryDistribution path_stationary(const ZigzagPath& path, const PricingPolicy& pricing,
                                       const RateTable& rates);

/// Brute-force oracle: builds the closure chain and solves the generator.
StationaryDistribution generator_stationary(const DispatchPolicy& policy,
                                            const PricingPolicy& pricing, const RateTable& rates,
                                            const ModelConfig& cfg);

/// Eq.-(4) objective: sum pi (lambda (p0_eff + p1(lambda) t0) - c_d l - c_r m),
/// with lambda treated as 0 at the queue cap.
double objective(const StationaryDistribution& dist, const PricingPolicy& pricing,
                 const ReducedCosts& costs, const DemandCurve& curve, double t0);

/// Same objective with explicit per-support-state birth rates.
double objective(const StationaryDistribution& dist, const std::vector<double>& lambdas,
                 const ReducedCosts& costs, const DemandCurve& curve, double t0);

/// Static-pricing objective R~_s: lambda-bar on path indices < cutoff
/// (1-based), blocked at and beyond the cutoff.
double static_objective(double lambda_bar, const ZigzagPath& path, int cutoff,
                        const RateTable& rates, const ReducedCosts& costs,
                        const DemandCurve& curve, double t0);

/// Table-7/8-style steady-state metrics. Time averages are stationary-
/// weighted; avg_price uses the raw base fare p0 (the paper's reported
/// number) and avg_price_arrival weights by pi*lambda.
struct EvalReport {
  double objective = 0;          ///< Eq. (4), reduced costs
  double revenue_rate = 0;       ///< Eq. (1), raw base fare
  double avg_price = 0;          ///< sum pi (p0 + p1(lambda) t0)
  double avg_price_arrival = 0;  ///< arrival-weighted variant
  double avg_pickup_time = 0;    ///< dispatch-frequency-weighted 1/mu - t0; NaN if no dispatches
  double avg_queue_time = 0;     ///< E[m] / effective arrival rate; NaN if no arrivals
  double throughput = 0;         ///< sum pi l mu
  double mean_l = 0;
  double mean_m = 0;
};

EvalReport metrics(const StationaryDistribution& dist, const DispatchPolicy& policy,
                   const PricingPolicy& pricing, const RateTable& rates, const DemandCurve& curve,
                   const ModelConfig& cfg, const ReducedCosts& costs);

}  // namespace spatialq
