#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spatialq/model.hpp"
#include "spatialq/rates.hpp"

namespace spatialq {

/// Continuous-time spatial simulation setup. Arrivals are Poisson with the
/// config's Lambda; geometry is a side x side square with the given speed.
struct SimConfig {
  ModelConfig cfg;
  double T = 20000;
  double warmup = 1000;
  uint64_t seed = 1;
  double side = 10.0;
  double speed = 1.0;

  void validate() const;
};

/// Matching rule applied to the nearest idle-driver / queued-rider pair after
/// every state-changing event, repeating while it keeps firing.
struct DispatchRule {
  enum class Kind { ConstantRadius, CountZigzag, TwoRadius };
  Kind kind = Kind::ConstantRadius;
  double r0 = 0;  ///< radius (ConstantRadius), hold-side radius (TwoRadius)
  double r1 = 0;  ///< dispatch-side radius (TwoRadius)
  DispatchPolicy policy;  ///< count-based map (CountZigzag, TwoRadius)

  static DispatchRule constant_radius(double r);
  static DispatchRule count_zigzag(DispatchPolicy policy);
  static DispatchRule two_radius(double r0, double r1, DispatchPolicy policy);
};

/// Time-averaged results over [warmup, T]. objective_eq4 is the reduced
/// accounting (actual revenue plus the w_p_r credit on realized on-trip
/// occupancy, minus c_d E[l] + c_r E[m]); objective_eq2 is the raw accounting
/// with all four per-head weights. Lemma 1 makes them differ by exactly
/// w_o_d * L on every event log.
struct SimMetrics {
  double objective_eq4 = 0;
  double objective_eq2 = 0;
  double revenue_rate = 0;       ///< collected fares per unit time
  double avg_price = 0;          ///< time-average of p0 + p1(lambda(l,m)) * t0
  double avg_pickup_time = 0;    ///< mean pickup duration over in-window dispatches
  double avg_queue_time = 0;     ///< E[m] / accepted-arrival rate (Little's law)
  double throughput = 0;         ///< completions per unit time
  double mean_l = 0;
  double mean_m = 0;
  long arrivals = 0;   ///< in-window arrival events (accepted + declined + blocked)
  long accepted = 0;
  long blocked = 0;    ///< arrivals at a full queue
  long dispatches = 0;
  long completions = 0;
  double horizon = 0;  ///< T - warmup
};

struct EventRecord {
  double time = 0;
  std::string event;  ///< arrival | decline | block | dispatch | complete
  int l = 0, m = 0;   ///< post-event state
  double extra = 0;   ///< quoted p1 for arrivals, pickup time for dispatches
};

struct PickupObservation {
  int l = 0, m = 0;  ///< state before the triggering arrival/completion
  double pickup_time = 0;
};

struct SimResult {
  SimMetrics metrics;
  std::vector<PickupObservation> pickups;  ///< when collect_pickups
  std::vector<EventRecord> events;         ///< when log_events
};

/// Event-driven simulation. Price quotes use the pre-arrival state's rate
/// from `pricing` through `quote_curve` (which may be trained at a Lambda
/// different from the simulated one); acceptance draws willingness-to-pay
/// uniform on [0, max_price]. Deterministic given sim.seed.
SimResult simulate(const SimConfig& sim, const DispatchRule& rule, const PricingPolicy& pricing,
                   const DemandCurve& quote_curve, const RawCosts& raw, bool log_events = false,
                   bool collect_pickups = false);

/// Section-5.2.1 protocol: one run per radius at a uniform effective rate
/// lambda_bar, pickups pooled per state across runs, states with fewer than
/// min_count observations dropped. Run i uses seed base.seed + i.
std::vector<PickupSampleRow> collect_pickup_samples(const SimConfig& base,
                                                    const std::vector<double>& radii,
                                                    double lambda_bar,
                                                    const DemandCurve& quote_curve,
                                                    const RawCosts& raw, long min_count = 10);
std::vector<double> default_radius_grid();  ///< 0.5, 1.0, ..., 12.0

struct CalibrationStep {
  double r = 0;
  double lambda_bar = 0;
  double objective = 0;
};

struct CalibrationResult {
  double r = 0;
  double lambda_bar = 0;
  double objective = 0;
  std::vector<CalibrationStep> trace;  ///< accepted moves, objective nondecreasing
  bool converged = true;
};

/// Coordinate ascent on (radius, uniform rate) with discrete step 0.2 and
/// same-seed evaluations; stops when a full round moves both coordinates by
/// at most one step (max_rounds cap returns best seen, flagged).
CalibrationResult calibrate_constant_radius(const SimConfig& sim, const DemandCurve& quote_curve,
                                            const RawCosts& raw, double r_init = 3.0,
                                            double lambda_init = 12.0, double step = 0.2,
                                            int max_rounds = 20);

struct TwoRadiusResult {
  double delta = 0;
  double objective = 0;
  std::vector<CalibrationStep> trace;  ///< (r0, delta, objective) per probe
};

/// Grid search over the radius split delta (r0 = r* - delta, r1 = r* + delta)
/// holding the count policy and pricing fixed; delta = 0 is always probed, so
/// the result never loses to ConstantRadius(r*) on the tuning seed.
TwoRadiusResult tune_two_radius(const SimConfig& sim, const DispatchPolicy& policy,
                                const PricingPolicy& pricing, double r_star,
                                const DemandCurve& quote_curve, const RawCosts& raw,
                                double step = 0.2, double max_delta = 4.0);

/// Extends a path-supported dynamic pricing grid to all states: an off-path
/// state takes the rate of the same-l path state with the nearest m.
PricingPolicy extend_pricing_off_path(const PricingPolicy& pricing, const ZigzagPath& path);

struct SweepPolicy {
  std::string name;
  DispatchRule rule;
  PricingPolicy pricing;
};

struct SweepRow {
  double Lambda = 0;
  std::string policy;
  double objective = 0;  ///< seed-averaged Eq.-(4) objective
  double stderr_ = 0;    ///< standard error over seeds
};

/// Evaluates fixed policies across simulated arrival rates, averaging over
/// the given seeds. Output rows are ordered by (Lambda, policy list order).
std::vector<SweepRow> robustness_sweep(const SimConfig& base,
                                       const std::vector<SweepPolicy>& policies,
                                       const std::vector<double>& lambda_values,
                                       const std::vector<uint64_t>& seeds,
                                       const DemandCurve& quote_curve, const RawCosts& raw);

}  // namespace spatialq
