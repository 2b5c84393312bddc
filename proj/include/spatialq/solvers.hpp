#pragma once

#include <string>
#include <vector>

#include "spatialq/chain.hpp"
#include "spatialq/model.hpp"
#include "spatialq/rates.hpp"

namespace spatialq {

/// Output of any policy-optimization method. `objective` is always the exact
/// chain-eval value of (dispatch, pricing), not the solver's internal
/// estimate.
struct SolveResult {
  DispatchPolicy dispatch;
  PricingPolicy pricing;
  ZigzagPath path;  ///< recurrent path when the method yields one (empty otherwise)
  double objective = 0;
  std::string method;
  long iterations = 0;
  double wall_time_s = 0;
  bool converged = true;  ///< false when a wall-clock cap truncated the solve
};

/// Queue-cap bound ceil(L * mu_bar * (p0_eff + p_max * t0) / c_r); the zigzag
/// DP's objective is invariant to any cap at or above it, because past this
/// queue length the penalty of working one extra rider off the queue exceeds
/// the largest revenue a single arrival can bring.
int m_bound(const RateTable& rates, const ReducedCosts& costs, const DemandCurve& curve, int L,
            double t0);

struct StaticPriceResult {
  double lambda_bar = 0;
  double value = 0;
};

/// Line search for the best uniform rate on the truncated path (1-based
/// cutoff, terminal blocked): uniform grid over [0, Lambda] followed by
/// golden-section refinement around the bracketing interval. Deterministic.
StaticPriceResult optimize_static_price(const ZigzagPath& path, int cutoff, const RateTable& rates,
                                        const ReducedCosts& costs, const DemandCurve& curve,
                                        double t0, int grid_points = 201);

struct PathPricingOptions {
  double tol_scale = 1e-9;  ///< span tolerance = tol_scale * uniformization rate
  long max_sweeps = 1000000;
};

/// Average-reward relative value iteration restricted to a path's birth-death
/// chain. lambda_on_path[i] is the chosen rate out of path index i (terminal
/// forced 0); pricing holds the same rates on the grid, 0 off-path.
struct PathPricingResult {
  PricingPolicy pricing;
  std::vector<double> lambda_on_path;
  double objective = 0;  ///< exact path_stationary evaluation of the chosen rates
  double gain = 0;       ///< VI's own average-reward estimate (continuous time)
  long iterations = 0;
};

PathPricingResult dynamic_price_on_path(const ZigzagPath& path, const RateTable& rates,
                                        const ReducedCosts& costs, const DemandCurve& curve,
                                        const ModelConfig& cfg,
                                        const PathPricingOptions& opts = {});

/// Full zigzag DP: dynamic pricing on the final path, plus the best
/// static-priced (possibly early-terminating) path found during the sweep.
struct ZigzagDpSolution {
  SolveResult dynamic;      ///< method "zigzag-dyn"
  SolveResult static_best;  ///< method "zigzag-sta"
  double static_lambda_bar = 0;
  Grid<double> R;  ///< the DP's value matrix (nondecreasing along its recurrences)
};

ZigzagDpSolution zigzag_dp(const RateTable& rates, const ReducedCosts& costs,
                           const DemandCurve& curve, const ModelConfig& cfg);

struct ViOptions {
  enum class ActionMode { single_dispatch, full };
  ActionMode action_mode = ActionMode::single_dispatch;
  double tol_scale = 1e-9;  ///< span tolerance = tol_scale * M0
  long max_sweeps = 1000000;
  double wall_cap_s = 1200;
  bool gauss_seidel = true;      ///< false: Jacobi sweeps
  double fixed_lambda = -1;      ///< >= 0: pricing pinned to this constant rate
  std::vector<double> initial_h; ///< row-major (L+1)x(M+1); empty = zeros
};

struct ViDiagnostics {
  double gain = 0;        ///< continuous-time average reward g*
  double span = 0;        ///< final span of successive h-differences
  std::vector<double> h;  ///< row-major relative value function
};

/// Relative value iteration on the uniformized full-grid MDP with expanded
/// actions (rate lambda, dispatch-on-arrival d_a, dispatch-on-completion d_c).
/// The returned dispatch grid is the effective hold/dispatch map derived from
/// h: phi(l,m) = 1 iff l < L, m >= 1 and h(l+1, m-1) > h(l, m). The objective
/// is the stationary evaluation of the extracted (lambda, d_a, d_c) policy.
/// Throws std::runtime_error on non-convergence within max_sweeps; a wall-cap
/// hit returns the partial result with converged = false.
SolveResult relative_value_iteration(const RateTable& rates, const ReducedCosts& costs,
                                     const DemandCurve& curve, const ModelConfig& cfg,
                                     const ViOptions& opts = {}, ViDiagnostics* diag = nullptr);

/// phi(l,m) = 1 iff l < L and m >= 1: dispatch whenever possible.
DispatchPolicy greedy_policy(const ModelConfig& cfg);

/// Greedy dispatch with pricing optimized by value iteration on its recurrent
/// birth-death class ((0,0)..(L,0),(L,1)..(L,M)).
SolveResult solve_greedy_dynamic(const RateTable& rates, const ReducedCosts& costs,
                                 const DemandCurve& curve, const ModelConfig& cfg);

}  // namespace spatialq
