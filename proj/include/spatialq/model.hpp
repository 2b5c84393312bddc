#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spatialq/grid.hpp"

namespace spatialq {

/// System state: l drivers in service (picking up or on trip), m riders queued.
struct State {
  int l = 0;
  int m = 0;
  friend bool operator==(const State& a, const State& b) { return a.l == b.l && a.m == b.m; }
};

/// Core model parameters. All grids in the toolkit are (L+1) x (M+1).
struct ModelConfig {
  int L = 1;           ///< fleet size
  double Lambda = 1;   ///< exogenous rider arrival rate
  int M = 0;           ///< queue cap (arrivals blocked at m = M)
  double t0 = 1;       ///< mean on-trip time
  double p0 = 0;       ///< base fare
  double p_max = 1;    ///< maximum per-distance price

  void validate() const;
};

/// Raw per-head cost rates from the Eq.-(2) objective.
struct RawCosts {
  double w_s_d = 0;  ///< in-service driver cost rate
  double w_o_d = 0;  ///< idle driver cost rate
  double w_p_r = 0;  ///< pickup-wait penalty rate
  double w_q_r = 0;  ///< queue-wait penalty rate
};

/// Reduced cost parameters after the Lemma-1 objective reduction.
struct ReducedCosts {
  double c_d = 0;     ///< driver-side penalty rate, w_s_d + w_p_r - w_o_d
  double c_r = 0;     ///< rider-side penalty rate, w_q_r
  double p0_eff = 0;  ///< effective base fare, p0 + w_p_r * t0
};

/// Applies the Lemma-1 reduction. Throws std::invalid_argument if the reduced
/// penalties come out non-positive (the reduction is then invalid).
ReducedCosts reduce_costs(const RawCosts& raw, double p0, double t0);

/// Non-fatal sanity warnings on raw costs (typical orderings w_s >= w_o, w_p >= w_q).
std::vector<std::string> cost_warnings(const RawCosts& raw);

/// Inverse of reduce_costs for a chosen (w_o_d, w_p_r) split: returns raw
/// weights whose Lemma-1 reduction reproduces the given (c_d, c_r). Used when
/// only reduced costs are configured but raw Eq.-(2) accounting is needed.
RawCosts raw_from_reduced(const ReducedCosts& costs, double w_o_d, double w_p_r);

/// Inverse demand curve: bijection between effective request rate lambda in
/// [0, Lambda] and per-distance price p1 in [0, p_max], strictly decreasing.
class DemandCurve {
 public:
  virtual ~DemandCurve() = default;
  virtual double max_rate() const = 0;   ///< Lambda
  virtual double max_price() const = 0;  ///< p_max
  virtual double price_of_rate(double lambda) const = 0;
  virtual double rate_of_price(double p1) const = 0;

  /// argmax over lambda in [0, cap] of lambda * (bonus + price_of_rate(lambda) * t0);
  /// the inner maximization of every pricing solver. The default is a
  /// golden-section search (requires unimodality); subclasses may override
  /// with a closed form.
  virtual double best_rate(double bonus, double t0, double cap) const;

 protected:
  void check_rate(double lambda) const;
  void check_price(double p1) const;
};

/// Linear inverse demand p1(lambda) = p_max * (1 - lambda / Lambda).
class LinearDemandCurve final : public DemandCurve {
 public:
  LinearDemandCurve(double Lambda, double p_max);
  double max_rate() const override { return Lambda_; }
  double max_price() const override { return p_max_; }
  double price_of_rate(double lambda) const override;
  double rate_of_price(double p1) const override;
  double best_rate(double bonus, double t0, double cap) const override;

 private:
  double Lambda_;
  double p_max_;
};

/// Binary hold/dispatch map; phi(l,0) = 0 and phi(L,m) = 0 always.
struct DispatchPolicy {
  Grid<uint8_t> phi;

  DispatchPolicy() = default;
  DispatchPolicy(int L, int M) : phi(L + 1, M + 1, 0) {}
  int L() const { return phi.rows() - 1; }
  int M() const { return phi.cols() - 1; }
  void validate() const;  ///< throws if the boundary invariants are violated

  friend bool operator==(const DispatchPolicy& a, const DispatchPolicy& b) {
    return a.phi == b.phi;
  }
};

/// Monotone staircase of single right/down steps starting at l = 0
/// (Definition 3); the recurrent boundary of a zigzag policy.
struct ZigzagPath {
  std::vector<State> states;

  int size() const { return static_cast<int>(states.size()); }
  const State& operator[](int i) const { return states[i]; }
  void validate() const;  ///< throws if Definition-3 invariants fail
};

/// Per-state effective arrival rate lambda(l, m) in [0, Lambda].
struct PricingPolicy {
  Grid<double> lambda;

  PricingPolicy() = default;
  PricingPolicy(int L, int M, double fill = 0.0) : lambda(L + 1, M + 1, fill) {}
  int L() const { return lambda.rows() - 1; }
  int M() const { return lambda.cols() - 1; }
};

/// Result of a zigzag-pattern check; on failure identifies the first
/// violating row ('r') or column ('c').
struct ZigzagCheck {
  bool ok = true;
  char kind = 0;   ///< 'r' row violation, 'c' column violation
  int index = -1;  ///< violating row/column index
};

/// True iff every row is 0...0 1...1 and every column is 1...1 0...0 (Definition 2).
ZigzagCheck is_zigzag(const DispatchPolicy& policy);

/// Recurrent boundary path of a zigzag policy. The origin is (0, m1) with m1
/// the last hold column of row 0 (truncated at M for never-dispatch rows);
/// the walk then steps right while phi(l, m+1) = 0 and down otherwise, until
/// m = M. Throws on non-zigzag input.
ZigzagPath path_of_policy(const DispatchPolicy& policy);

/// Zigzag policy induced by a path: phi(l, m) = 1 iff m exceeds the largest
/// queue length the path visits in row l (rows below the path's end hold
/// everywhere). Inverse of path_of_policy up to the recurrent closure.
DispatchPolicy policy_of_path(const ZigzagPath& path, int L, int M);

/// Repeats (l, m) -> (l+1, m-1) while phi = 1; returns the first hold state.
State apply_dispatch_closure(const DispatchPolicy& policy, State s);

}  // namespace spatialq
