#pragma once

#include <cstdint>
#include <vector>

#include "spatialq/model.hpp"

namespace spatialq {

/// Grid of per-driver service rates mu_{l,m}; total completion rate at (l,m)
/// is l * mu_{l,m}. Row l = 0 is populated but unused by dynamics.
struct RateTable {
  Grid<double> mu;
  double mu_bar = 0;  ///< max over the realized grid

  RateTable() = default;
  RateTable(int L, int M, double fill = 0.0) : mu(L + 1, M + 1, fill), mu_bar(fill) {}
  int L() const { return mu.rows() - 1; }
  int M() const { return mu.cols() - 1; }
  void recompute_bound();
};

enum class StateType { Type1, Type2 };

/// One violated Assumption-2 inequality.
struct Assumption2Violation {
  int condition;  ///< 1 or 2, per the assumption's numbering
  char direction; ///< 'm' or 'l': the index along which monotonicity failed
  State at;       ///< first state of the violated difference pair
  double slack;   ///< amount by which the inequality failed (positive)
};

/// Power-law pickup model eta_{l,m} = C * (m+1)^alpha1 * (L-l+1)^alpha2 (Eq. 6).
struct PowerLawFit {
  double C = 0;
  double alpha1 = 0;
  double alpha2 = 0;
  double se_log_C = 0;  ///< standard error of the log-scale intercept
  double se_C = 0;      ///< delta-method standard error of C itself
  double se_alpha1 = 0;
  double se_alpha2 = 0;
  int n_samples = 0;    ///< observations used after the min-count filter
};

/// Aggregated pickup observations for one state.
struct PickupSampleRow {
  int l = 0;
  int m = 0;
  double avg_pickup = 0;
  long count = 0;
};

/// Mean distance between two uniform points in a square of the given side,
/// divided by speed: (side/speed) * (1/15)(2 + sqrt(2) + 5 ln(1 + sqrt(2))).
/// Defaults (side 10, unit speed) give ~5.2145.
double mean_trip_time(double side = 10.0, double speed = 1.0);

/// Monte-Carlo service-rate estimation on the 10x10 square with unit speed:
/// for each (l,m), sample L-l+1 idle drivers and m+1 riders uniformly (the
/// pair about to be dispatched counts itself; this also keeps degenerate
/// states well-defined), take the closest pair's Euclidean distance as the
/// pickup time, average over replications, and set mu = 1/(avg_pickup + t0).
/// Bit-identical for a fixed seed.
RateTable mc_estimate_rates(const ModelConfig& cfg, int samples_per_state, uint64_t seed);

/// Definition 1: Type1 if l = L, m = 0, or l*mu_{l,m} > (l+1)*mu_{l+1,m-1}.
StateType classify_state(const RateTable& rates, State s);

/// Checks both Assumption-2 difference conditions over the finite grid with
/// slack tol_scale * mu_bar; empty result means the assumption holds.
std::vector<Assumption2Violation> check_assumption2(const RateTable& rates,
                                                    double tol_scale = 1e-9);

/// Theorem-1 closed form: hold at Type1 states, dispatch at Type2 states.
/// Zigzag (and optimal for c_d = c_r) when the table satisfies Assumption 2.
DispatchPolicy closed_form_zigzag(const RateTable& rates);

/// Log-log OLS for Eq. (6); rows with count < min_count are dropped.
/// L defaults to the largest l present in the corpus when negative.
/// Throws on fewer than 3 usable rows or non-positive pickup times.
PowerLawFit fit_powerlaw(const std::vector<PickupSampleRow>& samples, long min_count = 10,
                         int L = -1);

/// mu_{l,m} = 1 / (C (m+1)^alpha1 (L-l+1)^alpha2 + t0) over the full grid.
RateTable powerlaw_rate_table(const PowerLawFit& fit, const ModelConfig& cfg);

}  // namespace spatialq
