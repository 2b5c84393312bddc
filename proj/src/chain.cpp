#include "spatialq/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace spatialq {

namespace {

long state_key(State s) { return static_cast<long>(s.l) * 1000003L + s.m; }

/// Walks the dispatch closure from s, accumulating per-dispatch pickup
/// attributions (1/mu - t0 at each post-dispatch state).
State closure_with_stats(const DispatchPolicy& policy, State s, const RateTable& rates, double t0,
                         int* dispatches, double* pickup_sum) {
  while (s.m >= 1 && s.l < policy.L() && policy.phi(s.l, s.m) == 1) {
    s = {s.l + 1, s.m - 1};
    ++*dispatches;
    *pickup_sum += 1.0 / rates.mu(s.l, s.m) - t0;
  }
  return s;
}

/// Strongly connected components (iterative Tarjan) over rate > 0 edges.
std::vector<int> scc_of(const Ctmc& chain) {
  const int n = static_cast<int>(chain.states.size());
  std::vector<int> comp(n, -1), low(n), num(n, -1), stack_flag(n, 0);
  std::vector<int> stack, call_state, call_edge;
  int counter = 0, ncomp = 0;
  for (int root = 0; root < n; ++root) {
    if (num[root] >= 0) continue;
    call_state = {root};
    call_edge = {0};
    num[root] = low[root] = counter++;
    stack.push_back(root);
    stack_flag[root] = 1;
    while (!call_state.empty()) {
      int v = call_state.back();
      int& ei = call_edge.back();
      if (ei < static_cast<int>(chain.transitions[v].size())) {
        const auto& t = chain.transitions[v][ei++];
        if (t.rate <= 0) continue;
        int w = t.target;
        if (num[w] < 0) {
          num[w] = low[w] = counter++;
          stack.push_back(w);
          stack_flag[w] = 1;
          call_state.push_back(w);
          call_edge.push_back(0);
        } else if (stack_flag[w]) {
          low[v] = std::min(low[v], num[w]);
        }
      } else {
        if (low[v] == num[v]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            stack_flag[w] = 0;
            comp[w] = ncomp;
            if (w == v) break;
          }
          ++ncomp;
        }
        call_state.pop_back();
        call_edge.pop_back();
        if (!call_state.empty()) {
          int parent = call_state.back();
          low[parent] = std::min(low[parent], low[v]);
        }
      }
    }
  }
  return comp;
}

}  // namespace

int StationaryDistribution::index_of(State s) const {
  for (size_t i = 0; i < support.size(); ++i)
    if (support[i] == s) return static_cast<int>(i);
  return -1;
}

double StationaryDistribution::prob(State s) const {
  int i = index_of(s);
  return i < 0 ? 0.0 : probs[i];
}

double StationaryDistribution::mean_l() const {
  double v = 0;
  for (size_t i = 0; i < support.size(); ++i) v += probs[i] * support[i].l;
  return v;
}

double StationaryDistribution::mean_m() const {
  double v = 0;
  for (size_t i = 0; i < support.size(); ++i) v += probs[i] * support[i].m;
  return v;
}

Ctmc build_closure_chain(const DispatchPolicy& policy, const PricingPolicy& pricing,
                         const RateTable& rates, const ModelConfig& cfg) {
  policy.validate();
  Ctmc chain;
  std::unordered_map<long, int> index;
  auto intern = [&](State s) {
    auto it = index.find(state_key(s));
    if (it != index.end()) return it->second;
    int id = static_cast<int>(chain.states.size());
    index.emplace(state_key(s), id);
    chain.states.push_back(s);
    chain.transitions.emplace_back();
    return id;
  };

  intern(apply_dispatch_closure(policy, {0, 0}));
  for (int i = 0; i < static_cast<int>(chain.states.size()); ++i) {
    State s = chain.states[i];
    // Arrivals: below the cap the rider joins the queue and the closure may
    // dispatch. At m = M an arrival is only accepted together with an
    // immediate dispatch (EC.1's d_a >= 1 at the cap), which requires an
    // idle driver; at (L, M) arrivals are blocked outright.
    if (s.m < cfg.M || s.l < cfg.L) {
      double lam = pricing.lambda(s.l, s.m);
      if (lam > 0) {
        Ctmc::Transition t;
        t.rate = lam;
        State post = {s.l, s.m + 1};
        if (s.m == cfg.M) {
          post = {s.l + 1, s.m};  // forced dispatch keeps the queue at the cap
          ++t.dispatches;
          t.pickup_sum += 1.0 / rates.mu(post.l, post.m) - cfg.t0;
        }
        State next =
            closure_with_stats(policy, post, rates, cfg.t0, &t.dispatches, &t.pickup_sum);
        t.target = intern(next);
        chain.transitions[i].push_back(t);
      }
    }
    if (s.l >= 1) {
      Ctmc::Transition t;
      t.rate = s.l * rates.mu(s.l, s.m);
      State next = closure_with_stats(policy, {s.l - 1, s.m}, rates, cfg.t0, &t.dispatches,
                                      &t.pickup_sum);
      t.target = intern(next);
      chain.transitions[i].push_back(t);
    }
  }
  return chain;
}

StationaryDistribution ctmc_stationary(const Ctmc& chain) {
  const int n = static_cast<int>(chain.states.size());
  if (n == 0) throw std::invalid_argument("ctmc_stationary: empty chain");

  // Restrict to the recurrent class reached from state 0: follow condensation
  // edges from state 0's component until a terminal component is found.
  std::vector<int> comp = scc_of(chain);
  int cur = comp[0];
  while (true) {
    int next = -1;
    for (int i = 0; i < n && next < 0; ++i) {
      if (comp[i] != cur) continue;
      for (const auto& t : chain.transitions[i])
        if (t.rate > 0 && comp[t.target] != cur) {
          next = comp[t.target];
          break;
        }
    }
    if (next < 0) break;
    cur = next;
  }
  std::vector<int> members, local(n, -1);
  for (int i = 0; i < n; ++i)
    if (comp[i] == cur) {
      local[i] = static_cast<int>(members.size());
      members.push_back(i);
    }
  const int k = static_cast<int>(members.size());

  StationaryDistribution dist;
  for (int i : members) dist.support.push_back(chain.states[i]);
  dist.probs.assign(k, 0.0);

  if (k == 1) {
    dist.probs[0] = 1.0;
    return dist;
  }

  if (k <= 1000) {
    // Dense solve of pi Q = 0 with the last balance equation replaced by the
    // normalization sum pi = 1. A is the transposed generator.
    std::vector<std::vector<double>> A(k, std::vector<double>(k + 1, 0.0));
    for (int li = 0; li < k; ++li) {
      int i = members[li];
      for (const auto& t : chain.transitions[i]) {
        if (t.rate <= 0 || local[t.target] < 0) continue;
        A[local[t.target]][li] += t.rate;
        A[li][li] -= t.rate;
      }
    }
    for (int c = 0; c < k; ++c) A[k - 1][c] = 1.0;
    A[k - 1][k] = 1.0;
    for (int col = 0; col < k; ++col) {
      int piv = col;
      for (int r = col + 1; r < k; ++r)
        if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
      std::swap(A[col], A[piv]);
      if (std::abs(A[col][col]) < 1e-300)
        throw std::runtime_error("ctmc_stationary: singular generator solve");
      for (int r = col + 1; r < k; ++r) {
        double f = A[r][col] / A[col][col];
        if (f == 0) continue;
        for (int c = col; c <= k; ++c) A[r][c] -= f * A[col][c];
      }
    }
    for (int r = k - 1; r >= 0; --r) {
      double v = A[r][k];
      for (int c = r + 1; c < k; ++c) v -= A[r][c] * dist.probs[c];
      dist.probs[r] = v / A[r][r];
    }
  } else {
    // Power iteration on the uniformized kernel P = I + Q / Mq.
    double mq = 0;
    std::vector<double> outflow(k, 0.0);
    for (int li = 0; li < k; ++li)
      for (const auto& t : chain.transitions[members[li]])
        if (t.rate > 0 && local[t.target] >= 0) outflow[li] += t.rate;
    for (double v : outflow) mq = std::max(mq, v);
    mq *= 1.05;
    std::vector<double> pi(k, 1.0 / k), next(k);
    for (int iter = 0; iter < 2000000; ++iter) {
      std::fill(next.begin(), next.end(), 0.0);
      for (int li = 0; li < k; ++li) {
        double stay = pi[li];
        for (const auto& t : chain.transitions[members[li]]) {
          if (t.rate <= 0 || local[t.target] < 0) continue;
          double p = t.rate / mq;
          next[local[t.target]] += pi[li] * p;
          stay -= pi[li] * p;
        }
        next[li] += stay;
      }
      double norm = 0, diff = 0;
      for (double v : next) norm += v;
      for (int i = 0; i < k; ++i) {
        next[i] /= norm;
        diff = std::max(diff, std::abs(next[i] - pi[i]));
      }
      pi.swap(next);
      if (diff < 1e-14) break;
    }
    dist.probs = pi;
  }

  // Clean up tiny negative round-off and renormalize.
  double total = 0;
  for (double& p : dist.probs) {
    if (p < 0 && p > -1e-12) p = 0;
    total += p;
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

StationaryDistribution path_stationary(const ZigzagPath& path,
                                       const std::vector<double>& lambda_on_path,
                                       const RateTable& rates) {
  path.validate();
  const int I = path.size();
  if (static_cast<int>(lambda_on_path.size()) != I)
    throw std::invalid_argument("path_stationary: lambda vector length mismatch");

  // Log-space cumulative detailed-balance products guard against overflow on
  // long paths.
  std::vector<double> logpi(I, 0.0);
  std::vector<bool> reachable(I, true);
  for (int i = 0; i + 1 < I; ++i) {
    double birth = (i + 1 == I) ? 0.0 : lambda_on_path[i];
    const State& next = path[i + 1];
    if (next.l == 0)
      throw std::invalid_argument("path_stationary: zero death rate past the origin");
    double death = next.l * rates.mu(next.l, next.m);
    if (!reachable[i] || birth <= 0) {
      reachable[i + 1] = false;
      continue;
    }
    logpi[i + 1] = logpi[i] + std::log(birth) - std::log(death);
  }

  StationaryDistribution dist;
  dist.support = path.states;
  dist.probs.assign(I, 0.0);
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < I; ++i)
    if (reachable[i]) peak = std::max(peak, logpi[i]);
  double total = 0;
  for (int i = 0; i < I; ++i) {
    if (!reachable[i]) continue;
    dist.probs[i] = std::exp(logpi[i] - peak);
    total += dist.probs[i];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

StationaryDistribution path_stationary(const ZigzagPath& path, const PricingPolicy& pricing,
                                       const RateTable& rates) {
  std::vector<double> lambdas(path.size());
  for (int i = 0; i < path.size(); ++i) {
    const State& s = path[i];
    // At the queue cap arrivals are still possible when an idle driver can
    // be dispatched with them; only (L, M) blocks outright.
    lambdas[i] = (s.m >= pricing.M() && s.l >= pricing.L()) ? 0.0 : pricing.lambda(s.l, s.m);
  }
  if (!lambdas.empty()) lambdas.back() = 0.0;  // the path's terminal blocks arrivals
  return path_stationary(path, lambdas, rates);
}

StationaryDistribution generator_stationary(const DispatchPolicy& policy,
                                            const PricingPolicy& pricing, const RateTable& rates,
                                            const ModelConfig& cfg) {
  return ctmc_stationary(build_closure_chain(policy, pricing, rates, cfg));
}

double objective(const StationaryDistribution& dist, const std::vector<double>& lambdas,
                 const ReducedCosts& costs, const DemandCurve& curve, double t0) {
  if (lambdas.size() != dist.support.size())
    throw std::invalid_argument("objective: lambda vector length mismatch");
  double value = 0;
  for (size_t i = 0; i < dist.support.size(); ++i) {
    const State& s = dist.support[i];
    double lam = lambdas[i];
    double reward = lam > 0 ? lam * (costs.p0_eff + curve.price_of_rate(lam) * t0) : 0.0;
    value += dist.probs[i] * (reward - costs.c_d * s.l - costs.c_r * s.m);
  }
  return value;
}

double objective(const StationaryDistribution& dist, const PricingPolicy& pricing,
                 const ReducedCosts& costs, const DemandCurve& curve, double t0) {
  std::vector<double> lambdas(dist.support.size());
  for (size_t i = 0; i < dist.support.size(); ++i) {
    const State& s = dist.support[i];
    lambdas[i] = (s.m >= pricing.M() && s.l >= pricing.L()) ? 0.0 : pricing.lambda(s.l, s.m);
  }
  return objective(dist, lambdas, costs, curve, t0);
}

double static_objective(double lambda_bar, const ZigzagPath& path, int cutoff,
                        const RateTable& rates, const ReducedCosts& costs,
                        const DemandCurve& curve, double t0) {
  if (cutoff < 1 || cutoff > path.size())
    throw std::invalid_argument("static_objective: cutoff out of range");
  if (lambda_bar < 0) throw std::invalid_argument("static_objective: lambda_bar < 0");
  ZigzagPath trunc;
  trunc.states.assign(path.states.begin(), path.states.begin() + cutoff);
  std::vector<double> lambdas(cutoff, lambda_bar);
  lambdas.back() = 0.0;
  StationaryDistribution dist = path_stationary(trunc, lambdas, rates);
  return objective(dist, lambdas, costs, curve, t0);
}

EvalReport metrics(const StationaryDistribution& dist, const DispatchPolicy& policy,
                   const PricingPolicy& pricing, const RateTable& rates, const DemandCurve& curve,
                   const ModelConfig& cfg, const ReducedCosts& costs) {
  EvalReport report;
  report.mean_l = dist.mean_l();
  report.mean_m = dist.mean_m();

  double arrival_rate = 0, price_mass = 0, price_arrival = 0;
  for (size_t i = 0; i < dist.support.size(); ++i) {
    const State& s = dist.support[i];
    double lam = (s.m >= cfg.M && s.l >= cfg.L) ? 0.0 : pricing.lambda(s.l, s.m);
    double p1 = curve.price_of_rate(lam);
    double price = cfg.p0 + p1 * cfg.t0;
    report.revenue_rate += dist.probs[i] * lam * price;
    report.throughput += dist.probs[i] * s.l * rates.mu(s.l, s.m);
    price_mass += dist.probs[i] * price;
    price_arrival += dist.probs[i] * lam * price;
    arrival_rate += dist.probs[i] * lam;
    double reward = lam > 0 ? lam * (costs.p0_eff + p1 * cfg.t0) : 0.0;
    report.objective += dist.probs[i] * (reward - costs.c_d * s.l - costs.c_r * s.m);
  }
  report.avg_price = price_mass;
  report.avg_price_arrival =
      arrival_rate > 0 ? price_arrival / arrival_rate : std::numeric_limits<double>::quiet_NaN();
  report.avg_queue_time =
      arrival_rate > 0 ? report.mean_m / arrival_rate : std::numeric_limits<double>::quiet_NaN();

  // Dispatch-frequency-weighted pickup time from the closure chain.
  Ctmc chain = build_closure_chain(policy, pricing, rates, cfg);
  double dispatch_rate = 0, pickup_weighted = 0;
  for (size_t i = 0; i < chain.states.size(); ++i) {
    double p = dist.prob(chain.states[i]);
    if (p <= 0) continue;
    for (const auto& t : chain.transitions[i]) {
      dispatch_rate += p * t.rate * t.dispatches;
      pickup_weighted += p * t.rate * t.pickup_sum;
    }
  }
  report.avg_pickup_time = dispatch_rate > 0 ? pickup_weighted / dispatch_rate
                                             : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace spatialq
