#include "spatialq/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace spatialq {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Static-pricing value of the first k path states under uniform rate lam
/// (terminal blocked). Equivalent to static_objective but evaluates the
/// product-form weights with running rescaling instead of log-space, which is
/// much cheaper inside the DP's line searches.
double static_prefix_value(double lam, const std::vector<State>& st, int k,
                           const std::vector<double>& death, const ReducedCosts& costs,
                           const DemandCurve& curve, double t0) {
  const double gross = lam > 0 ? lam * (costs.p0_eff + curve.price_of_rate(lam) * t0) : 0.0;
  double w = 1.0, sw = 0.0, swr = 0.0;
  for (int i = 0; i < k; ++i) {
    if (i > 0) {
      if (lam <= 0) break;  // downstream states unreachable
      w *= lam / death[i];
      if (w > 1e250) {
        w *= 1e-250;
        sw *= 1e-250;
        swr *= 1e-250;
      } else if (w < 1e-250 && w > 0) {
        w *= 1e250;
        sw *= 1e250;
        swr *= 1e250;
      }
    }
    double r = (i < k - 1 ? gross : 0.0) - costs.c_d * st[i].l - costs.c_r * st[i].m;
    sw += w;
    swr += w * r;
  }
  return swr / sw;
}

}  // namespace

int m_bound(const RateTable& rates, const ReducedCosts& costs, const DemandCurve& curve, int L,
            double t0) {
  if (costs.c_r <= 0) throw std::invalid_argument("m_bound: c_r must be > 0");
  // Beyond the bound, the penalty accumulated while working one extra queued
  // rider off, (c_d l + c_r m) / (l mu), exceeds the largest possible revenue
  // a single arrival can bring, p0_eff + p_max t0, so no pricing admits it.
  const double max_arrival_revenue = costs.p0_eff + curve.max_price() * t0;
  return static_cast<int>(std::ceil(L * rates.mu_bar * max_arrival_revenue / costs.c_r));
}

StaticPriceResult optimize_static_price(const ZigzagPath& path, int cutoff, const RateTable& rates,
                                        const ReducedCosts& costs, const DemandCurve& curve,
                                        double t0, int grid_points) {
  path.validate();
  if (cutoff < 1 || cutoff > path.size())
    throw std::invalid_argument("optimize_static_price: cutoff out of range");
  if (grid_points < 2) throw std::invalid_argument("optimize_static_price: grid_points >= 2");

  std::vector<double> death(cutoff, 0.0);
  for (int i = 1; i < cutoff; ++i) {
    const State& s = path[i];
    death[i] = s.l * rates.mu(s.l, s.m);
    if (death[i] <= 0)
      throw std::invalid_argument("optimize_static_price: zero death rate past the origin");
  }
  auto value = [&](double lam) {
    return static_prefix_value(lam, path.states, cutoff, death, costs, curve, t0);
  };

  const double cap = curve.max_rate();
  // Global grid stage: the static objective need not be unimodal.
  int best = 0;
  double best_v = value(0.0);
  for (int j = 1; j < grid_points; ++j) {
    double lam = cap * j / (grid_points - 1);
    double v = value(lam);
    if (v > best_v) {
      best_v = v;
      best = j;
    }
  }
  // Local golden-section refinement on the bracketing interval.
  double a = cap * std::max(best - 1, 0) / (grid_points - 1);
  double b = cap * std::min(best + 1, grid_points - 1) / (grid_points - 1);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = value(x1), f2 = value(x2);
  while (b - a > 1e-11 * cap) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = value(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = value(x1);
    }
  }
  double mid = 0.5 * (a + b), mid_v = value(mid);
  if (mid_v > best_v) return {mid, mid_v};
  return {cap * best / (grid_points - 1.0), best_v};
}

PathPricingResult dynamic_price_on_path(const ZigzagPath& path, const RateTable& rates,
                                        const ReducedCosts& costs, const DemandCurve& curve,
                                        const ModelConfig& cfg, const PathPricingOptions& opts) {
  path.validate();
  cfg.validate();
  const int I = path.size();
  std::vector<double> death(I, 0.0);
  for (int i = 1; i < I; ++i) {
    const State& s = path[i];
    death[i] = s.l * rates.mu(s.l, s.m);
    if (death[i] <= 0)
      throw std::invalid_argument("dynamic_price_on_path: zero death rate past the origin");
  }
  const double cap = curve.max_rate();
  double M0 = cap;
  for (double d : death) M0 = std::max(M0, cap + d);
  const double tol = opts.tol_scale * M0;

  // In-place sweeps only warm-start the iteration: their per-sweep drift does
  // not estimate the gain (the implicit time scale differs per state). The
  // Jacobi phase owns termination and the gain.
  std::vector<double> h(I, 0.0), snapshot;
  double gain_dt = 0;
  bool warm_start = true;
  long iter = 0;
  for (;; ++iter) {
    if (iter >= opts.max_sweeps)
      throw std::runtime_error("dynamic_price_on_path: no convergence after max sweeps");
    const std::vector<double>* read = &h;
    if (!warm_start) {
      snapshot = h;
      read = &snapshot;
    }
    double dmin = 1e300, dmax = -1e300;
    for (int i = 0; i < I; ++i) {
      double lam = 0, ha = 0;
      if (i + 1 < I) {
        ha = (*read)[i + 1];
        lam = curve.best_rate(costs.p0_eff + ha - (*read)[i], cfg.t0, cap);
      }
      double reward = lam > 0 ? lam * (costs.p0_eff + curve.price_of_rate(lam) * cfg.t0) : 0.0;
      reward -= costs.c_d * path[i].l + costs.c_r * path[i].m;
      double hc = i > 0 ? (*read)[i - 1] : 0.0;
      double next =
          (reward + lam * ha + death[i] * hc + (M0 - lam - death[i]) * (*read)[i]) / M0;
      double delta = next - (*read)[i];
      h[i] = next;
      dmin = std::min(dmin, delta);
      dmax = std::max(dmax, delta);
    }
    gain_dt = 0.5 * (dmin + dmax);
    double h0 = h[0];
    for (double& v : h) v -= h0;
    if (dmax - dmin < tol) {
      if (warm_start) {
        warm_start = false;
        continue;
      }
      break;
    }
  }

  PathPricingResult out;
  out.iterations = iter + 1;
  out.gain = gain_dt * M0;
  out.lambda_on_path.assign(I, 0.0);
  out.pricing = PricingPolicy(cfg.L, cfg.M, 0.0);
  for (int i = 0; i + 1 < I; ++i) {
    double lam = curve.best_rate(costs.p0_eff + h[i + 1] - h[i], cfg.t0, cap);
    out.lambda_on_path[i] = lam;
    out.pricing.lambda(path[i].l, path[i].m) = lam;
  }
  StationaryDistribution dist = path_stationary(path, out.lambda_on_path, rates);
  out.objective = objective(dist, out.lambda_on_path, costs, curve, cfg.t0);
  return out;
}

namespace {

/// Per-cell record of the best static-priced (possibly early-terminating)
/// path seen so far: its value, terminal cell, and optimal uniform rate.
struct StaticRecord {
  double value = 0;
  State cell{0, 0};
  double lambda = 0;
};

/// Rebuilds the DP path terminating at (l,m) by walking the direction table
/// backwards (column 0 is always the spine; row 0 paths are single states).
ZigzagPath backwalk(const Grid<uint8_t>& dir, int l, int m) {
  std::vector<State> rev;
  State cur{l, m};
  while (true) {
    rev.push_back(cur);
    if (cur.l == 0) break;
    if (cur.m == 0) {
      cur = {cur.l - 1, 0};
    } else if (dir(cur.l, cur.m) == 0) {
      cur = {cur.l - 1, cur.m};
    } else {
      cur = {cur.l, cur.m - 1};
    }
  }
  ZigzagPath path;
  path.states.assign(rev.rbegin(), rev.rend());
  return path;
}

}  // namespace

ZigzagDpSolution zigzag_dp(const RateTable& rates, const ReducedCosts& costs,
                           const DemandCurve& curve, const ModelConfig& cfg) {
  cfg.validate();
  if (rates.L() != cfg.L || rates.M() != cfg.M)
    throw std::invalid_argument("zigzag_dp: rate table shape mismatch");
  const int L = cfg.L, M = cfg.M;
  if (M < m_bound(rates, costs, curve, L, cfg.t0))
    std::cerr << "zigzag_dp: note: M is below the queue-cap invariance bound, so the objective "
                 "may depend on the configured cap\n";
  auto start = std::chrono::steady_clock::now();

  Grid<double> R(L + 1, M + 1, 0.0);
  Grid<StaticRecord> rec(L + 1, M + 1);
  Grid<uint8_t> dir(L + 1, M + 1, 0);  // 0: from above (l-1,m); 1: from left (l,m-1)

  // Column 0: the spine paths, with max-propagation down the column. The
  // row-0 records mean "block everything" (value 0 via the trivial path).
  ZigzagPath spine;
  spine.states.push_back({0, 0});
  for (int l = 1; l <= L; ++l) {
    spine.states.push_back({l, 0});
    StaticPriceResult sup = optimize_static_price(spine, spine.size(), rates, costs, curve, cfg.t0);
    if (sup.value > R(l - 1, 0)) {
      R(l, 0) = sup.value;
      rec(l, 0) = {sup.value, {l, 0}, sup.lambda_bar};
    } else {
      R(l, 0) = R(l - 1, 0);
      rec(l, 0) = rec(l - 1, 0);
    }
  }

  for (int m = 1; m <= M; ++m) {
    for (int l = 1; l <= L; ++l) {
      ZigzagPath above = backwalk(dir, l - 1, m);
      above.states.push_back({l, m});
      StaticPriceResult sup_a =
          optimize_static_price(above, above.size(), rates, costs, curve, cfg.t0);
      double r_above = std::max(R(l - 1, m), sup_a.value);
      StaticRecord rec_above = sup_a.value > R(l - 1, m)
                                   ? StaticRecord{sup_a.value, {l, m}, sup_a.lambda_bar}
                                   : rec(l - 1, m);

      ZigzagPath left = backwalk(dir, l, m - 1);
      left.states.push_back({l, m});
      StaticPriceResult sup_l =
          optimize_static_price(left, left.size(), rates, costs, curve, cfg.t0);
      double r_left = std::max(R(l, m - 1), sup_l.value);
      StaticRecord rec_left = sup_l.value > R(l, m - 1)
                                  ? StaticRecord{sup_l.value, {l, m}, sup_l.lambda_bar}
                                  : rec(l, m - 1);

      bool take_above;
      if (r_left > r_above) {
        take_above = false;
      } else if (r_left < r_above) {
        take_above = true;
      } else {
        take_above = classify_state(rates, {l - 1, m}) == StateType::Type1;
      }
      if (take_above) {
        R(l, m) = r_above;
        rec(l, m) = rec_above;
        dir(l, m) = 0;
      } else {
        R(l, m) = r_left;
        rec(l, m) = rec_left;
        dir(l, m) = 1;
      }
    }
  }

  ZigzagDpSolution out;
  out.R = R;

  // Dynamic pricing on the final path P_{L,M}.
  ZigzagPath final_path = backwalk(dir, L, M);
  PathPricingResult dyn = dynamic_price_on_path(final_path, rates, costs, curve, cfg);
  out.dynamic.dispatch = policy_of_path(final_path, L, M);
  out.dynamic.pricing = dyn.pricing;
  out.dynamic.path = final_path;
  out.dynamic.objective = dyn.objective;
  out.dynamic.method = "zigzag-dyn";
  out.dynamic.iterations = dyn.iterations;

  // Best static-priced path found anywhere in the sweep.
  const StaticRecord& best = rec(L, M);
  ZigzagPath static_path = backwalk(dir, best.cell.l, best.cell.m);
  out.static_lambda_bar = best.lambda;
  out.static_best.dispatch = policy_of_path(static_path, L, M);
  out.static_best.pricing = PricingPolicy(L, M, 0.0);
  for (int i = 0; i + 1 < static_path.size(); ++i)
    out.static_best.pricing.lambda(static_path[i].l, static_path[i].m) = best.lambda;
  out.static_best.path = static_path;
  out.static_best.objective =
      static_objective(best.lambda, static_path, static_path.size(), rates, costs, curve, cfg.t0);
  out.static_best.method = "zigzag-sta";
  out.static_best.iterations = static_cast<long>(L) * M + L;

  double wall = seconds_since(start);
  out.dynamic.wall_time_s = wall;
  out.static_best.wall_time_s = wall;
  return out;
}

SolveResult relative_value_iteration(const RateTable& rates, const ReducedCosts& costs,
                                     const DemandCurve& curve, const ModelConfig& cfg,
                                     const ViOptions& opts, ViDiagnostics* diag) {
  cfg.validate();
  if (rates.L() != cfg.L || rates.M() != cfg.M)
    throw std::invalid_argument("relative_value_iteration: rate table shape mismatch");
  const int L = cfg.L, M = cfg.M;
  const int cols = M + 1, n = (L + 1) * cols;
  const bool full = opts.action_mode == ViOptions::ActionMode::full;
  if (full && static_cast<long>(n) * L > 10000000)
    std::cerr << "relative_value_iteration: warning: full action mode on a large grid ("
              << static_cast<long>(n) * L << " state-action pairs)\n";
  auto start = std::chrono::steady_clock::now();

  const double cap = curve.max_rate();
  double M0 = 0;
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= M; ++m) M0 = std::max(M0, l * rates.mu(l, m));
  M0 += cap;
  const double tol = opts.tol_scale * M0;

  auto idx = [cols](int l, int m) { return l * cols + m; };
  std::vector<double> h(n, 0.0);
  if (!opts.initial_h.empty()) {
    if (static_cast<int>(opts.initial_h.size()) != n)
      throw std::invalid_argument("relative_value_iteration: initial_h size mismatch");
    h = opts.initial_h;
  }

  // Best arrival/completion continuation values under the expanded actions;
  // reads from the given snapshot (which is h itself under Gauss-Seidel).
  auto best_arrival = [&](const std::vector<double>& v, int l, int m, int* d_out) {
    int d_lo = (m == M) ? 1 : 0;
    int d_hi = full ? std::min(L - l, m + 1) : std::min(L - l, 1);
    double best = -1e300;
    int best_d = -1;
    for (int d = d_lo; d <= d_hi; ++d) {
      double val = v[idx(l + d, m + 1 - d)];
      if (val > best) {
        best = val;
        best_d = d;
      }
    }
    if (d_out) *d_out = best_d;
    return best;  // -1e300 with best_d = -1 when no arrival action is feasible
  };
  auto best_completion = [&](const std::vector<double>& v, int l, int m, int* d_out) {
    int d_hi = full ? std::min(L - l + 1, m) : std::min({L - l + 1, m, 1});
    double best = -1e300;
    int best_d = 0;
    for (int d = 0; d <= d_hi; ++d) {
      double val = v[idx(l - 1 + d, m - d)];
      if (val > best) {
        best = val;
        best_d = d;
      }
    }
    if (d_out) *d_out = best_d;
    return best;
  };
  auto choose_lambda = [&](double cur_h, double arrival_h, bool arrival_ok) {
    if (!arrival_ok) return 0.0;
    if (opts.fixed_lambda >= 0) return std::min(opts.fixed_lambda, cap);
    return curve.best_rate(costs.p0_eff + arrival_h - cur_h, cfg.t0, cap);
  };

  // In-place (Gauss-Seidel style) sweeps approach the fixed point quickly but
  // distort the per-sweep drift, so they serve only as a warm start; the
  // Jacobi phase owns termination, the gain estimate, and extraction.
  bool converged = false;
  bool warm_start = opts.gauss_seidel;
  double span = 0, gain_dt = 0;
  long iter = 0;
  std::vector<double> snapshot;
  for (;; ++iter) {
    if (iter >= opts.max_sweeps)
      throw std::runtime_error("relative_value_iteration: no convergence after max sweeps (span " +
                               std::to_string(span) + ")");
    if (seconds_since(start) > opts.wall_cap_s) break;  // partial result, flagged below
    const std::vector<double>* read = &h;
    if (!warm_start) {
      snapshot = h;
      read = &snapshot;
    }
    double dmin = 1e300, dmax = -1e300;
    for (int l = 0; l <= L; ++l) {
      for (int m = 0; m <= M; ++m) {
        int i = idx(l, m);
        int da = -1;
        double ha = best_arrival(*read, l, m, &da);
        double lam = choose_lambda((*read)[i], ha, da >= 0);
        double td = l * rates.mu(l, m);
        double hc = td > 0 ? best_completion(*read, l, m, nullptr) : 0.0;
        double reward = lam > 0 ? lam * (costs.p0_eff + curve.price_of_rate(lam) * cfg.t0) : 0.0;
        reward -= costs.c_d * l + costs.c_r * m;
        double next =
            (reward + lam * (lam > 0 ? ha : 0.0) + td * hc + (M0 - lam - td) * (*read)[i]) / M0;
        double delta = next - (*read)[i];
        h[i] = next;
        dmin = std::min(dmin, delta);
        dmax = std::max(dmax, delta);
      }
    }
    gain_dt = 0.5 * (dmin + dmax);
    span = dmax - dmin;
    double h0 = h[idx(0, 0)];
    for (double& v : h) v -= h0;
    if (span < tol) {
      if (warm_start) {
        warm_start = false;  // hand over to the Jacobi phase
        continue;
      }
      converged = true;
      ++iter;
      break;
    }
  }

  // Extract the greedy-in-h policy and evaluate its induced chain exactly.
  SolveResult out;
  out.method = full ? "vi-full" : "vi-single";
  out.converged = converged;
  out.iterations = iter;
  out.dispatch = DispatchPolicy(L, M);
  out.pricing = PricingPolicy(L, M, 0.0);
  for (int l = 0; l < L; ++l)
    for (int m = 1; m <= M; ++m)
      out.dispatch.phi(l, m) = h[idx(l + 1, m - 1)] > h[idx(l, m)] ? 1 : 0;

  Ctmc chain;
  chain.states.reserve(n);
  chain.transitions.resize(n);
  std::vector<double> reward(n, 0.0);
  std::vector<double> lambda_star(n, 0.0);
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= M; ++m) chain.states.push_back({l, m});
  for (int l = 0; l <= L; ++l) {
    for (int m = 0; m <= M; ++m) {
      int i = idx(l, m);
      int da = -1, dc = 0;
      double ha = best_arrival(h, l, m, &da);
      double lam = choose_lambda(h[i], ha, da >= 0);
      lambda_star[i] = lam;
      out.pricing.lambda(l, m) = lam;
      reward[i] = (lam > 0 ? lam * (costs.p0_eff + curve.price_of_rate(lam) * cfg.t0) : 0.0) -
                  costs.c_d * l - costs.c_r * m;
      if (lam > 0) chain.transitions[i].push_back({idx(l + da, m + 1 - da), lam, da, 0.0});
      double td = l * rates.mu(l, m);
      if (td > 0) {
        best_completion(h, l, m, &dc);
        chain.transitions[i].push_back({idx(l - 1 + dc, m - dc), td, dc, 0.0});
      }
    }
  }
  StationaryDistribution dist = ctmc_stationary(chain);
  out.objective = 0;
  for (size_t k = 0; k < dist.support.size(); ++k)
    out.objective += dist.probs[k] * reward[idx(dist.support[k].l, dist.support[k].m)];
  out.wall_time_s = seconds_since(start);

  if (diag) {
    diag->gain = gain_dt * M0;
    diag->span = span;
    diag->h = h;
  }
  return out;
}

DispatchPolicy greedy_policy(const ModelConfig& cfg) {
  cfg.validate();
  DispatchPolicy policy(cfg.L, cfg.M);
  for (int l = 0; l < cfg.L; ++l)
    for (int m = 1; m <= cfg.M; ++m) policy.phi(l, m) = 1;
  policy.validate();
  return policy;
}

SolveResult solve_greedy_dynamic(const RateTable& rates, const ReducedCosts& costs,
                                 const DemandCurve& curve, const ModelConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  DispatchPolicy greedy = greedy_policy(cfg);
  ZigzagPath path = path_of_policy(greedy);
  PathPricingResult dyn = dynamic_price_on_path(path, rates, costs, curve, cfg);
  SolveResult out;
  out.dispatch = greedy;
  out.pricing = dyn.pricing;
  out.path = path;
  out.objective = dyn.objective;
  out.method = "greedy-dyn";
  out.iterations = dyn.iterations;
  out.wall_time_s = seconds_since(start);
  return out;
}

}  // namespace spatialq
