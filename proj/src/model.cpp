#include "spatialq/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spatialq {

void ModelConfig::validate() const {
  if (L < 1) throw std::invalid_argument("ModelConfig: L must be >= 1");
  if (M < 0) throw std::invalid_argument("ModelConfig: M must be >= 0");
  if (Lambda <= 0) throw std::invalid_argument("ModelConfig: Lambda must be > 0");
  if (t0 <= 0) throw std::invalid_argument("ModelConfig: t0 must be > 0");
  if (p_max <= 0) throw std::invalid_argument("ModelConfig: p_max must be > 0");
  if (p0 < 0) throw std::invalid_argument("ModelConfig: p0 must be >= 0");
}

ReducedCosts reduce_costs(const RawCosts& raw, double p0, double t0) {
  ReducedCosts out;
  out.c_d = raw.w_s_d + raw.w_p_r - raw.w_o_d;
  out.c_r = raw.w_q_r;
  out.p0_eff = p0 + raw.w_p_r * t0;
  if (out.c_d <= 0)
    throw std::invalid_argument("reduce_costs: c_d = w_s_d + w_p_r - w_o_d must be > 0");
  if (out.c_r <= 0) throw std::invalid_argument("reduce_costs: c_r = w_q_r must be > 0");
  return out;
}

std::vector<std::string> cost_warnings(const RawCosts& raw) {
  std::vector<std::string> warnings;
  if (raw.w_s_d <= 0 || raw.w_o_d <= 0 || raw.w_p_r <= 0 || raw.w_q_r <= 0)
    warnings.push_back("cost rates are expected to be strictly positive");
  if (raw.w_s_d < raw.w_o_d)
    warnings.push_back("w_s_d < w_o_d: in-service drivers usually cost at least as much as idle ones");
  if (raw.w_p_r < raw.w_q_r)
    warnings.push_back("w_p_r < w_q_r: pickup waits are usually penalized at least as much as queue waits");
  return warnings;
}

RawCosts raw_from_reduced(const ReducedCosts& costs, double w_o_d, double w_p_r) {
  if (costs.c_d <= 0 || costs.c_r <= 0)
    throw std::invalid_argument("raw_from_reduced: c_d and c_r must be > 0");
  return {costs.c_d + w_o_d - w_p_r, w_o_d, w_p_r, costs.c_r};
}

void DemandCurve::check_rate(double lambda) const {
  if (lambda < 0 || lambda > max_rate() * (1 + 1e-12))
    throw std::domain_error("DemandCurve: lambda outside [0, Lambda]");
}

void DemandCurve::check_price(double p1) const {
  if (p1 < 0 || p1 > max_price() * (1 + 1e-12))
    throw std::domain_error("DemandCurve: p1 outside [0, p_max]");
}

double DemandCurve::best_rate(double bonus, double t0, double cap) const {
  cap = std::min(cap, max_rate());
  if (cap <= 0) return 0.0;
  auto value = [&](double lam) { return lam * (bonus + price_of_rate(lam) * t0); };
  // Golden-section search; adequate for unimodal revenue curves.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = cap;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = value(x1), f2 = value(x2);
  for (int iter = 0; iter < 200 && (b - a) > 1e-12 * cap; ++iter) {
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
  double mid = 0.5 * (a + b);
  // The endpoints can dominate when the curve is monotone over [0, cap].
  double best = mid, best_v = value(mid);
  for (double cand : {0.0, cap}) {
    if (value(cand) > best_v) {
      best = cand;
      best_v = value(cand);
    }
  }
  return best;
}

LinearDemandCurve::LinearDemandCurve(double Lambda, double p_max) : Lambda_(Lambda), p_max_(p_max) {
  if (Lambda <= 0 || p_max <= 0)
    throw std::invalid_argument("LinearDemandCurve: Lambda and p_max must be > 0");
}

double LinearDemandCurve::price_of_rate(double lambda) const {
  check_rate(lambda);
  return p_max_ * (1.0 - lambda / Lambda_);
}

double LinearDemandCurve::rate_of_price(double p1) const {
  check_price(p1);
  return Lambda_ * (1.0 - p1 / p_max_);
}

double LinearDemandCurve::best_rate(double bonus, double t0, double cap) const {
  cap = std::min(cap, Lambda_);
  if (cap <= 0) return 0.0;
  // Objective lam * (bonus + p_max (1 - lam/Lambda) t0) is a downward parabola
  // with vertex at Lambda (bonus + p_max t0) / (2 p_max t0).
  double vertex = Lambda_ * (bonus + p_max_ * t0) / (2.0 * p_max_ * t0);
  return std::clamp(vertex, 0.0, cap);
}

void DispatchPolicy::validate() const {
  for (int l = 0; l <= L(); ++l)
    if (phi(l, 0) != 0) throw std::invalid_argument("DispatchPolicy: phi(l,0) must be 0");
  for (int m = 0; m <= M(); ++m)
    if (phi(L(), m) != 0) throw std::invalid_argument("DispatchPolicy: phi(L,m) must be 0");
}

void ZigzagPath::validate() const {
  if (states.empty()) throw std::invalid_argument("ZigzagPath: empty path");
  if (states.front().l != 0) throw std::invalid_argument("ZigzagPath: origin must have l = 0");
  for (size_t i = 0; i + 1 < states.size(); ++i) {
    const State& a = states[i];
    const State& b = states[i + 1];
    bool right = (b.l == a.l && b.m == a.m + 1);
    bool down = (b.l == a.l + 1 && b.m == a.m);
    if (!right && !down)
      throw std::invalid_argument("ZigzagPath: steps must be single right/down moves");
  }
}

ZigzagCheck is_zigzag(const DispatchPolicy& policy) {
  const int L = policy.L(), M = policy.M();
  for (int l = 0; l <= L; ++l) {
    bool seen_one = false;
    for (int m = 0; m <= M; ++m) {
      uint8_t v = policy.phi(l, m);
      if (v == 1) seen_one = true;
      if (v == 0 && seen_one) return {false, 'r', l};
    }
  }
  for (int m = 0; m <= M; ++m) {
    bool seen_zero = false;
    for (int l = 0; l <= L; ++l) {
      uint8_t v = policy.phi(l, m);
      if (v == 0) seen_zero = true;
      if (v == 1 && seen_zero) return {false, 'c', m};
    }
  }
  return {};
}

ZigzagPath path_of_policy(const DispatchPolicy& policy) {
  policy.validate();
  if (!is_zigzag(policy).ok) throw std::invalid_argument("path_of_policy: policy is not zigzag");
  const int L = policy.L(), M = policy.M();

  // Origin (Definition 3 (1)): last hold column in row 0, i.e. the m with
  // phi(0,m)=0 and phi(0,m+1)=1, truncated at M for never-dispatch rows.
  int m1 = M;
  for (int m = 0; m < M; ++m) {
    if (policy.phi(0, m) == 0 && policy.phi(0, m + 1) == 1) {
      m1 = m;
      break;
    }
  }

  ZigzagPath path;
  State cur{0, m1};
  path.states.push_back(cur);
  while (cur.m < M) {
    if (policy.phi(cur.l, cur.m + 1) == 0) {
      cur = {cur.l, cur.m + 1};  // rightward: hold on arrival
    } else if (cur.l < L) {
      // Downward: dispatch on arrival lands at (l+1, m); zigzag column
      // monotonicity guarantees phi(l+1, m) = 0 when phi(l, m) = 0.
      cur = {cur.l + 1, cur.m};
    } else {
      break;  // row L with phi(L, m+1) = 1 cannot occur (boundary invariant)
    }
    path.states.push_back(cur);
  }
  path.validate();
  return path;
}

DispatchPolicy policy_of_path(const ZigzagPath& path, int L, int M) {
  path.validate();
  DispatchPolicy policy(L, M);
  // Largest m the path visits in each row; rows beyond the path hold everywhere.
  std::vector<int> m_max(L + 1, -1);
  for (const State& s : path.states) {
    if (s.l > L || s.m > M) throw std::invalid_argument("policy_of_path: path exceeds grid");
    m_max[s.l] = std::max(m_max[s.l], s.m);
  }
  for (int l = 0; l < L; ++l) {
    if (m_max[l] < 0) continue;
    for (int m = m_max[l] + 1; m <= M; ++m) policy.phi(l, m) = 1;
  }
  policy.validate();
  return policy;
}

State apply_dispatch_closure(const DispatchPolicy& policy, State s) {
  while (s.m >= 1 && s.l < policy.L() && policy.phi(s.l, s.m) == 1) {
    s = {s.l + 1, s.m - 1};
  }
  return s;
}

}  // namespace spatialq
