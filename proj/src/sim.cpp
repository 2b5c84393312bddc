#include "spatialq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#include "spatialq/rng.hpp"

namespace spatialq {

void SimConfig::validate() const {
  cfg.validate();
  if (warmup < 0 || T <= warmup) throw std::invalid_argument("SimConfig: need T > warmup >= 0");
  if (side <= 0 || speed <= 0) throw std::invalid_argument("SimConfig: side, speed > 0");
}

DispatchRule DispatchRule::constant_radius(double r) {
  if (r < 0) throw std::invalid_argument("DispatchRule: radius must be >= 0");
  DispatchRule rule;
  rule.kind = Kind::ConstantRadius;
  rule.r0 = rule.r1 = r;
  return rule;
}

DispatchRule DispatchRule::count_zigzag(DispatchPolicy policy) {
  policy.validate();
  DispatchRule rule;
  rule.kind = Kind::CountZigzag;
  rule.policy = std::move(policy);
  return rule;
}

DispatchRule DispatchRule::two_radius(double r0, double r1, DispatchPolicy policy) {
  if (r0 < 0 || r1 < r0) throw std::invalid_argument("DispatchRule: need 0 <= r0 <= r1");
  policy.validate();
  DispatchRule rule;
  rule.kind = Kind::TwoRadius;
  rule.r0 = r0;
  rule.r1 = r1;
  rule.policy = std::move(policy);
  return rule;
}

namespace {

struct Point {
  double x = 0, y = 0;
};

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Rider {
  Point origin, dest;
  double p1 = 0;  ///< per-distance price quoted at arrival
};

struct Completion {
  double time = 0;
  long seq = 0;
  Point dest;
  friend bool operator>(const Completion& a, const Completion& b) {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

}  // namespace

SimResult simulate(const SimConfig& sim, const DispatchRule& rule, const PricingPolicy& pricing,
                   const DemandCurve& quote_curve, const RawCosts& raw, bool log_events,
                   bool collect_pickups) {
  sim.validate();
  const ModelConfig& cfg = sim.cfg;
  if (pricing.L() != cfg.L || pricing.M() != cfg.M)
    throw std::invalid_argument("simulate: pricing grid shape mismatch");
  if (rule.kind != DispatchRule::Kind::ConstantRadius &&
      (rule.policy.L() != cfg.L || rule.policy.M() != cfg.M))
    throw std::invalid_argument("simulate: rule policy shape mismatch");
  const ReducedCosts costs = reduce_costs(raw, cfg.p0, cfg.t0);

  Rng arr_rng(sim.seed, 0), attr_rng(sim.seed, 1), init_rng(sim.seed, 2);
  std::vector<Point> idle(cfg.L);
  for (Point& p : idle) p = {init_rng.uniform(0, sim.side), init_rng.uniform(0, sim.side)};
  std::vector<Rider> queue;
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> busy;
  long seq = 0;

  SimResult out;
  SimMetrics& met = out.metrics;
  const double H = sim.T - sim.warmup;
  met.horizon = H;

  double a_m = 0, a_pick = 0, a_trip = 0, price_int = 0, revenue = 0, pickup_sum = 0;
  auto clip = [&](double a, double b) {
    return std::max(0.0, std::min(b, sim.T) - std::max(a, sim.warmup));
  };
  auto in_window = [&](double t) { return t >= sim.warmup && t < sim.T; };
  auto quoted_price = [&](int l, int m) {
    double lam = m >= cfg.M ? 0.0 : std::min(pricing.lambda(l, m), quote_curve.max_rate());
    return quote_curve.price_of_rate(lam);
  };
  auto log = [&](double t, const char* ev, double extra) {
    if (log_events)
      out.events.push_back(
          {t, ev, static_cast<int>(busy.size()), static_cast<int>(queue.size()), extra});
  };

  // Chained matching after a state-changing event; every dispatch it fires is
  // attributed to the pre-event state (attr_l, attr_m).
  auto dispatch_loop = [&](double t, int attr_l, int attr_m) {
    while (!idle.empty() && !queue.empty()) {
      int l = static_cast<int>(busy.size()), m = static_cast<int>(queue.size());
      size_t bi = 0, bj = 0;
      double best = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < queue.size(); ++j)
        for (size_t i = 0; i < idle.size(); ++i) {
          double d = dist(idle[i], queue[j].origin);
          if (d < best) {
            best = d;
            bi = i;
            bj = j;
          }
        }
      bool fire;
      switch (rule.kind) {
        case DispatchRule::Kind::ConstantRadius:
          fire = best <= rule.r0;
          break;
        case DispatchRule::Kind::CountZigzag:
          fire = rule.policy.phi(l, m) == 1;
          break;
        default:
          fire = best <= (rule.policy.phi(l, m) == 1 ? rule.r1 : rule.r0);
      }
      if (!fire) break;

      const Rider rider = queue[bj];
      double pickup = best / sim.speed;
      double trip_d = dist(rider.origin, rider.dest);
      double done = t + pickup + trip_d / sim.speed;
      if (in_window(t)) {
        ++met.dispatches;
        revenue += cfg.p0 + rider.p1 * trip_d;
        pickup_sum += pickup;
        if (collect_pickups) out.pickups.push_back({attr_l, attr_m, pickup});
      }
      a_pick += clip(t, t + pickup);
      a_trip += clip(t + pickup, done);
      busy.push({done, seq++, rider.dest});
      idle[bi] = idle.back();
      idle.pop_back();
      queue.erase(queue.begin() + bj);
      log(t, "dispatch", pickup);
    }
  };

  double t_prev = 0;
  double next_arrival = arr_rng.exponential(cfg.Lambda);
  while (true) {
    bool is_arrival = busy.empty() || next_arrival <= busy.top().time;
    double t = is_arrival ? next_arrival : busy.top().time;
    if (t > sim.T) break;

    // Advance the piecewise-constant state integrals to t.
    double ov = clip(t_prev, t);
    if (ov > 0) {
      a_m += ov * queue.size();
      price_int +=
          ov * (cfg.p0 + quoted_price(static_cast<int>(busy.size()),
                                      static_cast<int>(queue.size())) * cfg.t0);
    }
    t_prev = t;

    if (is_arrival) {
      Point origin{attr_rng.uniform(0, sim.side), attr_rng.uniform(0, sim.side)};
      Point dest{attr_rng.uniform(0, sim.side), attr_rng.uniform(0, sim.side)};
      double wtp = attr_rng.uniform(0, quote_curve.max_price());
      int l = static_cast<int>(busy.size()), m = static_cast<int>(queue.size());
      if (in_window(t)) ++met.arrivals;
      if (m >= cfg.M) {
        if (in_window(t)) ++met.blocked;
        log(t, "block", quote_curve.max_price());
      } else {
        double p1 = quoted_price(l, m);
        if (wtp >= p1) {
          if (in_window(t)) ++met.accepted;
          queue.push_back({origin, dest, p1});
          log(t, "arrival", p1);
          dispatch_loop(t, l, m);
        } else {
          log(t, "decline", p1);
        }
      }
      next_arrival = t + arr_rng.exponential(cfg.Lambda);
    } else {
      int l = static_cast<int>(busy.size()), m = static_cast<int>(queue.size());
      Point dest = busy.top().dest;
      busy.pop();
      idle.push_back(dest);
      if (in_window(t)) ++met.completions;
      log(t, "complete", 0);
      dispatch_loop(t, l, m);
    }
  }
  double ov = clip(t_prev, sim.T);
  if (ov > 0) {
    a_m += ov * queue.size();
    price_int += ov * (cfg.p0 + quoted_price(static_cast<int>(busy.size()),
                                             static_cast<int>(queue.size())) * cfg.t0);
  }

  const double a_l = a_pick + a_trip;
  met.mean_l = a_l / H;
  met.mean_m = a_m / H;
  met.revenue_rate = revenue / H;
  met.throughput = met.completions / H;
  met.avg_price = price_int / H;
  met.objective_eq4 =
      met.revenue_rate + raw.w_p_r * a_trip / H - costs.c_d * met.mean_l - costs.c_r * met.mean_m;
  met.objective_eq2 = met.revenue_rate - (raw.w_s_d * a_l + raw.w_o_d * (cfg.L * H - a_l) +
                                          raw.w_p_r * a_pick + raw.w_q_r * a_m) /
                                             H;
  met.avg_pickup_time = met.dispatches > 0 ? pickup_sum / met.dispatches
                                           : std::numeric_limits<double>::quiet_NaN();
  met.avg_queue_time = met.accepted > 0 ? met.mean_m / (met.accepted / H)
                                        : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<double> default_radius_grid() {
  std::vector<double> radii;
  for (int i = 1; i <= 24; ++i) radii.push_back(0.5 * i);
  return radii;
}

std::vector<PickupSampleRow> collect_pickup_samples(const SimConfig& base,
                                                    const std::vector<double>& radii,
                                                    double lambda_bar,
                                                    const DemandCurve& quote_curve,
                                                    const RawCosts& raw, long min_count) {
  base.validate();
  if (radii.empty()) throw std::invalid_argument("collect_pickup_samples: empty radius list");
  if (lambda_bar < 0 || lambda_bar > quote_curve.max_rate())
    throw std::invalid_argument("collect_pickup_samples: lambda_bar outside [0, Lambda]");
  PricingPolicy pricing(base.cfg.L, base.cfg.M, lambda_bar);
  Grid<double> sums(base.cfg.L + 1, base.cfg.M + 1, 0.0);
  Grid<long> counts(base.cfg.L + 1, base.cfg.M + 1, 0);
  for (size_t i = 0; i < radii.size(); ++i) {
    SimConfig run = base;
    run.seed = base.seed + i;
    SimResult res = simulate(run, DispatchRule::constant_radius(radii[i]), pricing, quote_curve,
                             raw, false, true);
    for (const PickupObservation& obs : res.pickups) {
      sums(obs.l, obs.m) += obs.pickup_time;
      counts(obs.l, obs.m) += 1;
    }
  }
  std::vector<PickupSampleRow> rows;
  for (int l = 0; l <= base.cfg.L; ++l)
    for (int m = 0; m <= base.cfg.M; ++m)
      if (counts(l, m) >= min_count)
        rows.push_back({l, m, sums(l, m) / counts(l, m), counts(l, m)});
  if (rows.empty()) throw std::invalid_argument("collect_pickup_samples: no usable samples");
  return rows;
}

CalibrationResult calibrate_constant_radius(const SimConfig& sim, const DemandCurve& quote_curve,
                                            const RawCosts& raw, double r_init, double lambda_init,
                                            double step, int max_rounds) {
  sim.validate();
  const double r_max = sim.side * std::sqrt(2.0);
  const double lam_max = quote_curve.max_rate();
  std::map<std::pair<long, long>, double> cache;
  auto eval = [&](double r, double lam) {
    auto key = std::make_pair(std::lround(r / step), std::lround(lam / step));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    PricingPolicy pricing(sim.cfg.L, sim.cfg.M, lam);
    double obj = simulate(sim, DispatchRule::constant_radius(r), pricing, quote_curve, raw)
                     .metrics.objective_eq4;
    cache.emplace(key, obj);
    return obj;
  };

  CalibrationResult out;
  out.r = r_init;
  out.lambda_bar = std::min(lambda_init, lam_max);
  out.objective = eval(out.r, out.lambda_bar);
  out.trace.push_back({out.r, out.lambda_bar, out.objective});

  // Discrete hill climb along one coordinate; accepts strictly improving steps.
  auto climb = [&](double& coord, double lo, double hi, bool is_radius) {
    while (true) {
      bool moved = false;
      for (double cand : {coord + step, coord - step}) {
        if (cand < lo - 1e-12 || cand > hi + 1e-12) continue;
        cand = std::clamp(cand, lo, hi);
        double obj = is_radius ? eval(cand, out.lambda_bar) : eval(out.r, cand);
        if (obj > out.objective) {
          coord = cand;
          out.objective = obj;
          out.trace.push_back({out.r, out.lambda_bar, obj});
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
  };

  out.converged = false;
  for (int round = 0; round < max_rounds; ++round) {
    double r0 = out.r, l0 = out.lambda_bar;
    climb(out.r, 0.0, r_max, true);
    climb(out.lambda_bar, 0.0, lam_max, false);
    if (std::abs(out.r - r0) <= step + 1e-12 && std::abs(out.lambda_bar - l0) <= step + 1e-12) {
      out.converged = true;
      break;
    }
  }
  return out;
}

TwoRadiusResult tune_two_radius(const SimConfig& sim, const DispatchPolicy& policy,
                                const PricingPolicy& pricing, double r_star,
                                const DemandCurve& quote_curve, const RawCosts& raw, double step,
                                double max_delta) {
  sim.validate();
  if (r_star < 0) throw std::invalid_argument("tune_two_radius: r_star must be >= 0");
  TwoRadiusResult out;
  out.objective = -std::numeric_limits<double>::infinity();
  for (double delta = 0; delta <= std::min(max_delta, r_star) + 1e-12; delta += step) {
    double d = std::min(delta, r_star);
    DispatchRule rule = DispatchRule::two_radius(r_star - d, r_star + d, policy);
    double obj = simulate(sim, rule, pricing, quote_curve, raw).metrics.objective_eq4;
    out.trace.push_back({r_star - d, d, obj});
    if (obj > out.objective) {
      out.objective = obj;
      out.delta = d;
    }
  }
  return out;
}

PricingPolicy extend_pricing_off_path(const PricingPolicy& pricing, const ZigzagPath& path) {
  path.validate();
  const int L = pricing.L(), M = pricing.M();
  // Queue lengths the path visits in each row.
  std::vector<std::vector<int>> row_ms(L + 1);
  for (const State& s : path.states)
    if (s.l <= L) row_ms[s.l].push_back(s.m);
  PricingPolicy out(L, M, 0.0);
  for (int l = 0; l <= L; ++l) {
    // Rows the path never visits fall back to the nearest visited row.
    int src = -1;
    for (int d = 0; d <= L && src < 0; ++d) {
      if (l - d >= 0 && !row_ms[l - d].empty())
        src = l - d;
      else if (l + d <= L && !row_ms[l + d].empty())
        src = l + d;
    }
    if (src < 0) throw std::invalid_argument("extend_pricing_off_path: path off the grid");
    for (int m = 0; m <= M; ++m) {
      int best_m = row_ms[src].front();
      for (int pm : row_ms[src])
        if (std::abs(pm - m) < std::abs(best_m - m)) best_m = pm;
      out.lambda(l, m) = pricing.lambda(src, best_m);
    }
  }
  return out;
}

std::vector<SweepRow> robustness_sweep(const SimConfig& base,
                                       const std::vector<SweepPolicy>& policies,
                                       const std::vector<double>& lambda_values,
                                       const std::vector<uint64_t>& seeds,
                                       const DemandCurve& quote_curve, const RawCosts& raw) {
  base.validate();
  if (policies.empty() || lambda_values.empty() || seeds.empty())
    throw std::invalid_argument("robustness_sweep: empty inputs");
  std::vector<SweepRow> rows;
  for (double lam : lambda_values) {
    SimConfig sim = base;
    sim.cfg.Lambda = lam;
    for (const SweepPolicy& pol : policies) {
      double sum = 0, sumsq = 0;
      for (uint64_t seed : seeds) {
        sim.seed = seed;
        double obj = simulate(sim, pol.rule, pol.pricing, quote_curve, raw).metrics.objective_eq4;
        sum += obj;
        sumsq += obj * obj;
      }
      double n = static_cast<double>(seeds.size());
      double mean = sum / n;
      double var = n > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1)) : 0.0;
      rows.push_back({lam, pol.name, mean, std::sqrt(var / n)});
    }
  }
  return rows;
}

}  // namespace spatialq
