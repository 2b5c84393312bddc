#include "spatialq/rates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "spatialq/rng.hpp"

namespace spatialq {

void RateTable::recompute_bound() {
  mu_bar = 0;
  for (double v : mu.data()) mu_bar = std::max(mu_bar, v);
}

double mean_trip_time(double side, double speed) {
  if (side <= 0 || speed <= 0) throw std::invalid_argument("mean_trip_time: side, speed > 0");
  const double c = (2.0 + std::sqrt(2.0) + 5.0 * std::log(1.0 + std::sqrt(2.0))) / 15.0;
  return side * c / speed;
}

namespace {

/// Mean nearest-pair distance between n_d uniform drivers and n_r uniform
/// riders in a side x side square, over the given number of replications.
double mc_min_pair_distance(int n_d, int n_r, int reps, Rng& rng, double side) {
  std::vector<double> dx(n_d), dy(n_d);
  double total = 0;
  for (int rep = 0; rep < reps; ++rep) {
    for (int i = 0; i < n_d; ++i) {
      dx[i] = rng.uniform(0, side);
      dy[i] = rng.uniform(0, side);
    }
    double best = 1e300;
    for (int j = 0; j < n_r; ++j) {
      double rx = rng.uniform(0, side);
      double ry = rng.uniform(0, side);
      for (int i = 0; i < n_d; ++i) {
        double d2 = (dx[i] - rx) * (dx[i] - rx) + (dy[i] - ry) * (dy[i] - ry);
        if (d2 < best) best = d2;
      }
    }
    total += std::sqrt(best);
  }
  return total / reps;
}

}  // namespace

RateTable mc_estimate_rates(const ModelConfig& cfg, int samples_per_state, uint64_t seed) {
  cfg.validate();
  if (samples_per_state < 1)
    throw std::invalid_argument("mc_estimate_rates: samples_per_state >= 1");
  const double side = 10.0;
  RateTable table(cfg.L, cfg.M);
  for (int l = 0; l <= cfg.L; ++l) {
    for (int m = 0; m <= cfg.M; ++m) {
      // The +1 convention: one extra driver and rider in every state's
      // sample, so degenerate states (l = L or m = 0) still define a rate.
      int n_d = cfg.L - l + 1;
      int n_r = m + 1;
      // Per-cell sub-stream keyed by (l, m) keeps the estimate independent of
      // evaluation order and bit-identical for a fixed seed.
      Rng rng(seed, (static_cast<uint64_t>(l) << 32) | static_cast<uint64_t>(m));
      double pickup = mc_min_pair_distance(n_d, n_r, samples_per_state, rng, side);
      table.mu(l, m) = 1.0 / (pickup + cfg.t0);
    }
  }
  table.recompute_bound();
  return table;
}

StateType classify_state(const RateTable& rates, State s) {
  if (s.l == rates.L() || s.m == 0) return StateType::Type1;
  double here = s.l * rates.mu(s.l, s.m);
  double neighbor = (s.l + 1) * rates.mu(s.l + 1, s.m - 1);
  return here > neighbor ? StateType::Type1 : StateType::Type2;
}

std::vector<Assumption2Violation> check_assumption2(const RateTable& rates, double tol_scale) {
  const int L = rates.L(), M = rates.M();
  const double tol = tol_scale * rates.mu_bar;
  std::vector<Assumption2Violation> out;
  auto total = [&](int l, int m) { return l * rates.mu(l, m); };

  // d1(l,m) = l mu_{l,m+1} - l mu_{l,m}: non-increasing in m, non-decreasing in l.
  auto d1 = [&](int l, int m) { return total(l, m + 1) - total(l, m); };
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m + 2 <= M; ++m)
      if (d1(l, m + 1) > d1(l, m) + tol)
        out.push_back({1, 'm', {l, m}, d1(l, m + 1) - d1(l, m)});
  for (int l = 0; l + 1 <= L; ++l)
    for (int m = 0; m + 1 <= M; ++m)
      if (d1(l + 1, m) < d1(l, m) - tol)
        out.push_back({1, 'l', {l, m}, d1(l, m) - d1(l + 1, m)});

  // d2(l,m) = (l+1) mu_{l+1,m} - l mu_{l,m}: non-increasing in l, non-decreasing in m.
  auto d2 = [&](int l, int m) { return total(l + 1, m) - total(l, m); };
  for (int l = 0; l + 2 <= L; ++l)
    for (int m = 0; m <= M; ++m)
      if (d2(l + 1, m) > d2(l, m) + tol)
        out.push_back({2, 'l', {l, m}, d2(l + 1, m) - d2(l, m)});
  for (int l = 0; l + 1 <= L; ++l)
    for (int m = 0; m + 1 <= M; ++m)
      if (d2(l, m + 1) < d2(l, m) - tol)
        out.push_back({2, 'm', {l, m}, d2(l, m) - d2(l, m + 1)});
  return out;
}

DispatchPolicy closed_form_zigzag(const RateTable& rates) {
  DispatchPolicy policy(rates.L(), rates.M());
  for (int l = 0; l <= rates.L(); ++l)
    for (int m = 0; m <= rates.M(); ++m)
      policy.phi(l, m) = classify_state(rates, {l, m}) == StateType::Type2 ? 1 : 0;
  policy.validate();
  return policy;
}

PowerLawFit fit_powerlaw(const std::vector<PickupSampleRow>& samples, long min_count, int L) {
  // Log-log OLS: log eta = b0 + a1 log(m+1) + a2 log(L-l+1).
  if (L < 0)
    for (const auto& r : samples) L = std::max(L, r.l);

  std::vector<std::array<double, 3>> X;
  std::vector<double> y;
  for (const auto& r : samples) {
    if (r.count < min_count) continue;
    if (r.avg_pickup <= 0) throw std::invalid_argument("fit_powerlaw: non-positive pickup time");
    X.push_back({1.0, std::log(r.m + 1.0), std::log(L - r.l + 1.0)});
    y.push_back(std::log(r.avg_pickup));
  }
  const int n = static_cast<int>(X.size());
  if (n < 3) throw std::invalid_argument("fit_powerlaw: fewer than 3 usable samples");

  // Normal equations (3x3) solved by Gaussian elimination with partial pivoting.
  double A[3][4] = {};
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) A[a][b] += X[i][a] * X[i][b];
      A[a][3] += X[i][a] * y[i];
    }
  double XtX[3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) XtX[a][b] = A[a][b];
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    if (std::abs(A[col][col]) < 1e-14)
      throw std::invalid_argument("fit_powerlaw: singular design (collinear regressors)");
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      double f = A[r][col] / A[col][col];
      for (int c = col; c < 4; ++c) A[r][c] -= f * A[col][c];
    }
  }
  double beta[3];
  for (int a = 0; a < 3; ++a) beta[a] = A[a][3] / A[a][a];

  // Residual variance and (X'X)^{-1} diagonal for standard errors.
  double rss = 0;
  for (int i = 0; i < n; ++i) {
    double pred = beta[0] * X[i][0] + beta[1] * X[i][1] + beta[2] * X[i][2];
    rss += (y[i] - pred) * (y[i] - pred);
  }
  double sigma2 = n > 3 ? rss / (n - 3) : 0.0;
  double inv[3][3];
  {
    double B[3][6] = {};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) B[a][b] = XtX[a][b];
      B[a][3 + a] = 1.0;
    }
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(B[r][col]) > std::abs(B[piv][col])) piv = r;
      std::swap(B[col], B[piv]);
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        double f = B[r][col] / B[col][col];
        for (int c = 0; c < 6; ++c) B[r][c] -= f * B[col][c];
      }
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) inv[a][b] = B[a][3 + b] / B[a][a];
  }

  PowerLawFit fit;
  fit.C = std::exp(beta[0]);
  fit.alpha1 = beta[1];
  fit.alpha2 = beta[2];
  fit.se_log_C = std::sqrt(std::max(0.0, sigma2 * inv[0][0]));
  fit.se_C = fit.C * fit.se_log_C;  // delta method
  fit.se_alpha1 = std::sqrt(std::max(0.0, sigma2 * inv[1][1]));
  fit.se_alpha2 = std::sqrt(std::max(0.0, sigma2 * inv[2][2]));
  fit.n_samples = n;
  return fit;
}

RateTable powerlaw_rate_table(const PowerLawFit& fit, const ModelConfig& cfg) {
  cfg.validate();
  if (fit.C <= 0) throw std::invalid_argument("powerlaw_rate_table: C must be > 0");
  RateTable table(cfg.L, cfg.M);
  for (int l = 0; l <= cfg.L; ++l)
    for (int m = 0; m <= cfg.M; ++m) {
      double eta = fit.C * std::pow(m + 1.0, fit.alpha1) * std::pow(cfg.L - l + 1.0, fit.alpha2);
      table.mu(l, m) = 1.0 / (eta + cfg.t0);
    }
  table.recompute_bound();
  return table;
}

}  // namespace spatialq
