#pragma once

// ARIMA counterfactual forecaster. Orders are searched over a small grid;
// each candidate is fit by minimizing the conditional sum of squares (errors
// conditioned on the first p observations of the differenced series, with
// pre-sample innovations set to zero) and scored by small-sample-corrected
// AICc. Candidates whose AR polynomial has roots on or inside the unit
// circle are discarded. Forecasts are recursive mean forecasts with future
// innovations at zero, integrated back through the differencing.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cfcast/error.hpp"
#include "cfcast/numerics.hpp"

namespace cfcast {

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;
};

struct ArimaModel {
  ArimaOrder order;
  std::vector<double> ar;   // length p
  std::vector<double> ma;   // length q
  double intercept = 0.0;
  double sigma2 = 0.0;      // innovation variance from the CSS fit
  double aicc = 0.0;
};

inline std::vector<double> difference(std::span<const double> y, int d) {
  std::vector<double> out(y.begin(), y.end());
  for (int k = 0; k < d; ++k) {
    std::vector<double> next(out.size() - 1);
    for (std::size_t t = 0; t + 1 < out.size(); ++t)
      next[t] = out[t + 1] - out[t];
    out = std::move(next);
  }
  return out;
}

/// First value of each successive difference of y, as needed by integrate().
inline std::vector<double> initial_conditions(std::span<const double> y,
                                              int d) {
  std::vector<double> init(static_cast<std::size_t>(d));
  std::vector<double> cur(y.begin(), y.end());
  for (int k = 0; k < d; ++k) {
    init[k] = cur.front();
    std::vector<double> next(cur.size() - 1);
    for (std::size_t t = 0; t + 1 < cur.size(); ++t)
      next[t] = cur[t + 1] - cur[t];
    cur = std::move(next);
  }
  return init;
}

/// Inverse of difference(): reconstructs the original series from its d-th
/// differences and the initial value at each difference level.
inline std::vector<double> integrate(std::span<const double> w, int d,
                                     std::span<const double> initial) {
  if (static_cast<int>(initial.size()) != d)
    fail(errc::length_mismatch, "need d initial values");
  std::vector<double> cur(w.begin(), w.end());
  for (int k = d - 1; k >= 0; --k) {
    std::vector<double> next(cur.size() + 1);
    next[0] = initial[k];
    for (std::size_t t = 0; t < cur.size(); ++t) next[t + 1] = next[t] + cur[t];
    cur = std::move(next);
  }
  return cur;
}

namespace detail {

// Residual recursion of the CSS objective. e[t] = 0 for t < p; innovations
// before the conditioning point are zero.
inline void css_residuals(std::span<const double> w, int p, int q,
                          std::span<const double> params,
                          std::vector<double>& e) {
  const int m = static_cast<int>(w.size());
  const double c = params[0];
  e.assign(w.size(), 0.0);
  for (int t = p; t < m; ++t) {
    double v = w[t] - c;
    for (int i = 1; i <= p; ++i) v -= params[i] * w[t - i];
    for (int j = 1; j <= q; ++j)
      if (t - j >= p) v -= params[p + j] * e[t - j];
    e[t] = v;
  }
}

// Mean squared CSS and its analytic gradient via the same recursions.
inline double css_objective(std::span<const double> w, int p, int q,
                            std::span<const double> params,
                            std::span<double> grad) {
  const int m = static_cast<int>(w.size());
  const int n_eff = m - p;
  const int n_par = 1 + p + q;
  std::vector<double> e;
  css_residuals(w, p, q, params, e);
  // de[t][k]: derivative of e[t] w.r.t. parameter k
  std::vector<std::vector<double>> de(
      static_cast<std::size_t>(n_par), std::vector<double>(w.size(), 0.0));
  for (int t = p; t < m; ++t) {
    de[0][t] = -1.0;
    for (int i = 1; i <= p; ++i) de[i][t] = -w[t - i];
    for (int j = 1; j <= q; ++j)
      if (t - j >= p) de[p + j][t] = -e[t - j];
    for (int j = 1; j <= q; ++j) {
      if (t - j < p) continue;
      const double theta = params[p + j];
      for (int k = 0; k < n_par; ++k) de[k][t] -= theta * de[k][t - j];
    }
  }
  double css = 0.0;
  std::fill(grad.begin(), grad.end(), 0.0);
  for (int t = p; t < m; ++t) {
    css += e[t] * e[t];
    for (int k = 0; k < n_par; ++k) grad[k] += 2.0 * e[t] * de[k][t];
  }
  for (int k = 0; k < n_par; ++k) grad[k] /= n_eff;
  return css / n_eff;
}

// AR stationarity: all companion-matrix eigenvalues strictly inside the unit
// circle (equivalently, polynomial roots outside it).
inline bool ar_is_stationary(std::span<const double> ar) {
  const int p = static_cast<int>(ar.size());
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) companion(0, i) = ar[i];
  for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    if (std::abs(eig.eigenvalues()[i]) >= 1.0 - 1e-6) return false;
  return true;
}

}  // namespace detail

inline std::vector<ArimaOrder> default_order_grid() {
  std::vector<ArimaOrder> grid;
  for (int d = 0; d <= 1; ++d)
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; q <= 3; ++q) grid.push_back({p, d, q});
  return grid;
}

/// Fit one candidate order by CSS. Returns false when the fitted AR part is
/// non-stationary or the sample is too small for the order.
inline bool fit_arima_order(std::span<const double> series, ArimaOrder order,
                            ArimaModel& out) {
  if (order.p < 0 || order.q < 0 || order.d < 0 || order.p > 3 ||
      order.q > 3 || order.d > 1)
    throw std::invalid_argument("order outside supported grid (p,q<=3, d<=1)");
  const auto w = difference(series, order.d);
  const int m = static_cast<int>(w.size());
  const int k = order.p + order.q + 2;  // + intercept + variance
  const int n_eff = m - order.p;
  if (n_eff - k - 1 <= 0) return false;

  std::vector<double> init(1 + order.p + order.q, 0.0);
  double mean = 0.0;
  for (double v : w) mean += v;
  init[0] = mean / m;

  Objective objective = [&](std::span<const double> params,
                            std::span<double> grad) {
    return detail::css_objective(w, order.p, order.q, params, grad);
  };
  OptimizerConfig cfg;
  cfg.step_size = 0.05;
  cfg.max_iters = 600;
  cfg.tolerance = 1e-12;
  auto params = minimize(objective, init, cfg);

  out.order = order;
  out.intercept = params[0];
  out.ar.assign(params.begin() + 1, params.begin() + 1 + order.p);
  out.ma.assign(params.begin() + 1 + order.p, params.end());
  if (!detail::ar_is_stationary(out.ar)) return false;

  std::vector<double> e;
  detail::css_residuals(w, order.p, order.q, params, e);
  double css = 0.0;
  for (int t = order.p; t < m; ++t) css += e[t] * e[t];
  out.sigma2 = css / n_eff;
  const double safe_sigma2 = std::max(out.sigma2, 1e-300);
  out.aicc = n_eff * std::log(safe_sigma2) + 2.0 * k +
             2.0 * k * (k + 1) / static_cast<double>(n_eff - k - 1);
  return true;
}

/// Grid search over orders by AICc among candidates passing the
/// stationarity check.
inline ArimaModel fit_carima(std::span<const double> series_pre,
                             std::span<const ArimaOrder> grid = {}) {
  if (series_pre.size() < 20)
    fail(errc::too_short, "need at least 20 pre-intervention steps, have " +
                              std::to_string(series_pre.size()));
  std::vector<ArimaOrder> default_grid;
  if (grid.empty()) {
    default_grid = default_order_grid();
    grid = default_grid;
  }
  bool found = false;
  ArimaModel best;
  for (const auto& order : grid) {
    ArimaModel cand;
    if (!fit_arima_order(series_pre, order, cand)) continue;
    if (!found || cand.aicc < best.aicc) {
      best = cand;
      found = true;
    }
  }
  if (!found) fail(errc::no_valid_model, "no candidate order was stationary");
  return best;
}

/// Recursive mean forecast (future innovations zero), integrated back
/// through the differencing. Deterministic.
inline std::vector<double> forecast_arima(const ArimaModel& model,
                                          std::span<const double> series_pre,
                                          int h) {
  const int p = model.order.p, d = model.order.d, q = model.order.q;
  auto w = difference(series_pre, d);
  const int m = static_cast<int>(w.size());
  std::vector<double> params;
  params.push_back(model.intercept);
  params.insert(params.end(), model.ar.begin(), model.ar.end());
  params.insert(params.end(), model.ma.begin(), model.ma.end());
  std::vector<double> e;
  detail::css_residuals(w, p, q, params, e);
  e.resize(w.size() + static_cast<std::size_t>(h), 0.0);  // future noise = 0

  std::vector<double> wext = w;
  wext.reserve(w.size() + h);
  for (int k = 0; k < h; ++k) {
    const int t = m + k;
    double v = model.intercept;
    for (int i = 1; i <= p; ++i) v += model.ar[i - 1] * wext[t - i];
    for (int j = 1; j <= q; ++j)
      if (t - j >= p) v += model.ma[j - 1] * e[t - j];
    wext.push_back(v);
  }

  std::vector<double> fc(wext.begin() + m, wext.end());
  if (d == 0) return fc;
  // integrate forecasts forward from the last observed levels
  std::vector<double> levels(fc.size());
  double last = series_pre[series_pre.size() - 1];
  if (d == 1) {
    for (int k = 0; k < h; ++k) {
      last += fc[k];
      levels[k] = last;
    }
    return levels;
  }
  // d > 1 is outside the supported grid
  throw std::invalid_argument("forecasting supports d <= 1");
}

}  // namespace cfcast
