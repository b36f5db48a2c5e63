#pragma once

// Simplified global quantile forecaster. One model is trained on
// pre-intervention moving windows pooled across every unit (treated and
// control alike): each unit is deseasonalized by its pre-period seasonal
// profile, each window is levelled by subtracting its input mean, and the
// model maps (input window + seasonal features for the target steps +
// covariate lags) to an h x K grid of quantile outputs through one tanh
// recurrent cell and an affine head. hidden_size 0 drops the cell and leaves
// a pure affine quantile model. Training minimizes mean pinball loss over
// all windows and quantile levels; the last tenth of each unit's windows is
// held out and the parameters with the best held-out quantile-averaged CRPS
// are kept.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfcast/error.hpp"
#include "cfcast/numerics.hpp"
#include "cfcast/panel.hpp"
#include "cfcast/rng.hpp"

namespace cfcast {

struct ProbCpConfig {
  int window_w = 0;  // 0 -> 2 * seasonality
  int seasonality = 7;
  std::vector<double> taus{0.05, 0.25, 0.5, 0.75, 0.95};
  int hidden_size = 16;
  int epochs = 400;
  int batch_size = 0;  // 0 -> full batch
  OptimizerConfig optimizer{0.02, 0, 1e-12, 0};

  int resolved_window() const {
    return window_w > 0 ? window_w : 2 * seasonality;
  }
  void validate() const {
    if (seasonality < 1) throw std::invalid_argument("seasonality must be >= 1");
    if (hidden_size < 0) throw std::invalid_argument("hidden_size must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (taus.empty()) fail(errc::unsorted_taus, "no quantile levels");
    for (std::size_t k = 0; k < taus.size(); ++k) {
      if (!(taus[k] > 0.0 && taus[k] < 1.0))
        fail(errc::bad_tau, "tau must be in (0,1)");
      if (k > 0 && !(taus[k] > taus[k - 1]))
        fail(errc::unsorted_taus, "taus must be strictly increasing");
    }
  }
};

struct QuantileForecast {
  std::string unit_id;
  std::vector<double> taus;
  Matrix paths;               // h x K, quantiles non-decreasing within a row
  std::vector<double> point;  // median column
};

class ProbCpModel {
 public:
  ProbCpConfig cfg;
  int window = 0;
  int horizon = 0;
  int n_cov = 0;
  std::vector<std::string> covariate_names;
  std::vector<double> params;
  double holdout_crps = 0.0;
  double train_loss = 0.0;

  int n_taus() const { return static_cast<int>(cfg.taus.size()); }
  int n_outputs() const { return horizon * n_taus(); }
  int feature_dim() const {
    const int base = cfg.hidden_size > 0 ? cfg.hidden_size : window;
    return base + horizon + n_cov;
  }
  int param_count() const {
    const int h = cfg.hidden_size;
    const int cell = h > 0 ? h + h * h + h : 0;
    return cell + n_outputs() * feature_dim() + n_outputs();
  }

  /// Raw forward pass on a levelled, deseasonalized window. Outputs are in
  /// the same levelled space, step-major (step * K + k).
  std::vector<double> forward(std::span<const double> input,
                              std::span<const double> exog,
                              std::span<const double> cov) const {
    std::vector<double> out(static_cast<std::size_t>(n_outputs()), 0.0);
    std::vector<double> state;
    forward_impl(input, exog, cov, out, nullptr, &state);
    return out;
  }

  // Forward with optional caching of the recurrent states for backprop.
  // states (when requested) holds W+1 vectors of length H: s_0 = 0 .. s_W.
  void forward_impl(std::span<const double> input,
                    std::span<const double> exog, std::span<const double> cov,
                    std::span<double> out,
                    std::vector<std::vector<double>>* states_out,
                    std::vector<double>* final_state) const {
    const int h = cfg.hidden_size;
    const int f_dim = feature_dim();
    const int n_out = n_outputs();
    std::vector<double> features(static_cast<std::size_t>(f_dim), 0.0);
    if (h > 0) {
      const double* win = params.data();
      const double* urec = win + h;
      const double* bcell = urec + h * h;
      std::vector<double> state(static_cast<std::size_t>(h), 0.0);
      std::vector<double> next(static_cast<std::size_t>(h), 0.0);
      if (states_out) {
        states_out->clear();
        states_out->push_back(state);
      }
      for (int j = 0; j < window; ++j) {
        for (int i = 0; i < h; ++i) {
          double a = win[i] * input[j] + bcell[i];
          const double* urow = urec + i * h;
          for (int k = 0; k < h; ++k) a += urow[k] * state[k];
          next[i] = std::tanh(a);
        }
        state.swap(next);
        if (states_out) states_out->push_back(state);
      }
      std::copy(state.begin(), state.end(), features.begin());
      if (final_state) *final_state = state;
    } else {
      std::copy(input.begin(), input.end(), features.begin());
    }
    const int base = h > 0 ? h : window;
    for (int j = 0; j < horizon; ++j) features[base + j] = exog[j];
    for (int c = 0; c < n_cov; ++c) features[base + horizon + c] = cov[c];

    const int cell = h > 0 ? h + h * h + h : 0;
    const double* whead = params.data() + cell;
    const double* bhead = whead + n_out * f_dim;
    for (int o = 0; o < n_out; ++o) {
      double v = bhead[o];
      const double* row = whead + o * f_dim;
      for (int f = 0; f < f_dim; ++f) v += row[f] * features[f];
      out[o] = v;
    }
  }
};

namespace detail {

struct ProbCpWindow {
  std::vector<double> input;   // levelled, deseasonalized
  std::vector<double> target;  // same space as input
  std::vector<double> exog;    // seasonal profile at the target steps
  std::vector<double> cov;     // covariate values at the last input step
};

// Mean pinball loss over one window, accumulating the parameter gradient.
inline double probcp_window_loss_grad(const ProbCpModel& model,
                                      const ProbCpWindow& win,
                                      std::span<double> grad) {
  const int h = model.cfg.hidden_size;
  const int n_out = model.n_outputs();
  const int f_dim = model.feature_dim();
  const int k_taus = model.n_taus();
  const int horizon = model.horizon;

  std::vector<double> out(static_cast<std::size_t>(n_out));
  std::vector<std::vector<double>> states;
  model.forward_impl(win.input, win.exog, win.cov, out,
                     h > 0 ? &states : nullptr, nullptr);

  const double inv = 1.0 / static_cast<double>(n_out);
  double loss = 0.0;
  std::vector<double> dout(static_cast<std::size_t>(n_out));
  for (int step = 0; step < horizon; ++step) {
    for (int k = 0; k < k_taus; ++k) {
      const int o = step * k_taus + k;
      const double tau = model.cfg.taus[k];
      loss += pinball_loss(win.target[step], out[o], tau);
      dout[o] = pinball_grad_q(win.target[step], out[o], tau) * inv;
    }
  }
  loss *= inv;

  // rebuild the feature vector seen by the head
  std::vector<double> features(static_cast<std::size_t>(f_dim), 0.0);
  const int base = h > 0 ? h : model.window;
  if (h > 0) {
    std::copy(states.back().begin(), states.back().end(), features.begin());
  } else {
    std::copy(win.input.begin(), win.input.end(), features.begin());
  }
  for (int j = 0; j < horizon; ++j) features[base + j] = win.exog[j];
  for (int c = 0; c < model.n_cov; ++c)
    features[base + horizon + c] = win.cov[c];

  const int cell = h > 0 ? h + h * h + h : 0;
  const double* whead = model.params.data() + cell;
  double* gwhead = grad.data() + cell;
  double* gbhead = gwhead + n_out * f_dim;
  std::vector<double> dfeat(static_cast<std::size_t>(f_dim), 0.0);
  for (int o = 0; o < n_out; ++o) {
    const double g = dout[o];
    if (g == 0.0) continue;
    const double* row = whead + o * f_dim;
    double* grow = gwhead + o * f_dim;
    for (int f = 0; f < f_dim; ++f) {
      grow[f] += g * features[f];
      dfeat[f] += g * row[f];
    }
    gbhead[o] += g;
  }

  if (h > 0) {
    // backprop through time over the recurrent cell
    const double* urec = model.params.data() + h;
    double* gwin = grad.data();
    double* gurec = gwin + h;
    double* gbcell = gurec + h * h;
    std::vector<double> dstate(dfeat.begin(), dfeat.begin() + h);
    std::vector<double> dprev(static_cast<std::size_t>(h), 0.0);
    for (int j = model.window - 1; j >= 0; --j) {
      const auto& s_next = states[j + 1];
      const auto& s_prev = states[j];
      std::fill(dprev.begin(), dprev.end(), 0.0);
      for (int i = 0; i < h; ++i) {
        const double da = dstate[i] * (1.0 - s_next[i] * s_next[i]);
        if (da == 0.0) continue;
        gwin[i] += da * win.input[j];
        gbcell[i] += da;
        const double* urow = urec + i * h;
        double* gurow = gurec + i * h;
        for (int k = 0; k < h; ++k) {
          gurow[k] += da * s_prev[k];
          dprev[k] += da * urow[k];
        }
      }
      dstate.swap(dprev);
    }
  }
  return loss;
}

}  // namespace detail

/// Fits the global quantile model on all units' pre-intervention windows.
inline ProbCpModel fit_probcp_lite(const PanelDataset& panel,
                                   ProbCpConfig cfg) {
  cfg.validate();
  const int w = cfg.resolved_window();
  const int h = panel.horizon();
  const int t0 = panel.t0();
  if (t0 < w + h)
    fail(errc::too_short, "units need at least " + std::to_string(w + h) +
                              " pre-intervention steps, have " +
                              std::to_string(t0));

  ProbCpModel model;
  model.cfg = cfg;
  model.window = w;
  model.horizon = h;
  for (const auto& [name, _] : panel.units().front().covariates)
    model.covariate_names.push_back(name);
  model.n_cov = static_cast<int>(model.covariate_names.size());

  // assemble training and holdout windows
  std::vector<detail::ProbCpWindow> train, holdout;
  for (const auto& unit : panel.units()) {
    std::span<const double> pre(unit.values.data(),
                                static_cast<std::size_t>(t0));
    const auto profile = seasonal_profile(pre, cfg.seasonality);
    const auto deseason = subtract_profile(pre, profile);
    UnitSeries shadow;
    shadow.unit_id = unit.unit_id;
    shadow.values = deseason;
    auto windows = sliding_windows(shadow, w, h, t0);
    const std::size_t n_win = windows.size();
    const std::size_t held =
        n_win >= 2 ? std::max<std::size_t>(1, (n_win + 9) / 10) : 0;
    for (std::size_t i = 0; i < n_win; ++i) {
      auto& win = windows[i];
      detail::ProbCpWindow pw;
      double mean = 0.0;
      for (double v : win.input) mean += v;
      mean /= static_cast<double>(win.input.size());
      pw.input = std::move(win.input);
      for (double& v : pw.input) v -= mean;
      pw.target = std::move(win.target);
      for (double& v : pw.target) v -= mean;
      pw.exog.resize(static_cast<std::size_t>(h));
      for (int j = 0; j < h; ++j)
        pw.exog[j] = profile[(win.position + j) % cfg.seasonality];
      for (const auto& name : model.covariate_names)
        pw.cov.push_back(unit.covariates.at(name)[win.position - 1]);
      if (i + held >= n_win)
        holdout.push_back(std::move(pw));
      else
        train.push_back(std::move(pw));
    }
  }
  if (train.empty()) train.swap(holdout);  // degenerate panels: no early stop

  // seeded init: small random cell, zero head
  auto engine = make_engine(derive_seed(cfg.optimizer.seed, 11));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> init(static_cast<std::size_t>(model.param_count()), 0.0);
  if (cfg.hidden_size > 0) {
    const double scale = 0.2 / std::sqrt(static_cast<double>(cfg.hidden_size));
    const int cell = cfg.hidden_size + cfg.hidden_size * cfg.hidden_size +
                     cfg.hidden_size;
    for (int i = 0; i < cell - cfg.hidden_size; ++i)
      init[i] = scale * gauss(engine);  // input + recurrent weights, zero bias
  }
  model.params = init;

  const std::size_t n_train = train.size();
  const std::size_t batch =
      cfg.batch_size > 0
          ? std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                  n_train)
          : n_train;
  const std::size_t batches_per_epoch = (n_train + batch - 1) / batch;

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
  std::size_t call = 0;

  Objective objective = [&](std::span<const double> p,
                            std::span<double> grad) {
    std::copy(p.begin(), p.end(), model.params.begin());
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t epoch = call / batches_per_epoch;
    const std::size_t slot = call % batches_per_epoch;
    ++call;
    if (batch < n_train && slot == 0) {
      auto shuffler =
          make_engine(derive_seed(cfg.optimizer.seed, 13, epoch));
      std::shuffle(order.begin(), order.end(), shuffler);
    }
    const std::size_t lo = slot * batch;
    const std::size_t hi = std::min(lo + batch, n_train);
    double loss = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      loss += detail::probcp_window_loss_grad(model, train[order[i]], grad);
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (double& g : grad) g *= inv;
    return loss * inv;
  };

  auto holdout_crps = [&](std::span<const double> p) {
    std::copy(p.begin(), p.end(), model.params.begin());
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& win : holdout) {
      auto out = model.forward(win.input, win.exog, win.cov);
      for (int step = 0; step < h; ++step) {
        std::span<const double> row(out.data() + step * model.n_taus(),
                                    static_cast<std::size_t>(model.n_taus()));
        total += crps_from_quantiles(win.target[step], row, cfg.taus);
        ++count;
      }
    }
    return total / static_cast<double>(count);
  };

  std::vector<double> best_params = init;
  double best_crps = std::numeric_limits<double>::infinity();
  IterationObserver observer = [&](int iter, std::span<const double> p,
                                   double value) {
    model.train_loss = value;
    if (holdout.empty()) return;
    if (static_cast<std::size_t>(iter) % batches_per_epoch != 0) return;
    const double crps = holdout_crps(p);
    if (crps < best_crps) {
      best_crps = crps;
      best_params.assign(p.begin(), p.end());
    }
  };

  OptimizerConfig opt = cfg.optimizer;
  opt.max_iters = cfg.epochs * static_cast<int>(batches_per_epoch);
  if (!(opt.step_size > 0)) opt.step_size = 0.02;
  if (!(opt.tolerance > 0)) opt.tolerance = 1e-12;
  auto fitted = minimize(objective, init, opt, observer);

  if (holdout.empty() || !std::isfinite(best_crps)) {
    model.params = fitted;
    model.holdout_crps = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double final_crps = holdout_crps(fitted);
    if (final_crps < best_crps) {
      best_crps = final_crps;
      best_params = fitted;
    }
    model.params = best_params;
    model.holdout_crps = best_crps;
  }
  return model;
}

/// One-shot counterfactual quantile paths for [t0, t0+h), from the last
/// pre-intervention window. Quantile columns are sorted per step; the point
/// path is the tau=0.5 column (nearest level if 0.5 is absent).
inline QuantileForecast predict_counterfactual_quantiles(
    const ProbCpModel& model, const PanelDataset& panel,
    std::string_view unit_id) {
  const auto& unit = panel.unit(unit_id);
  const int t0 = panel.t0();
  const int w = model.window;
  const int h = model.horizon;
  const int s = model.cfg.seasonality;
  if (t0 < w) fail(errc::too_short, "pre-period shorter than the window");

  std::span<const double> pre(unit.values.data(), static_cast<std::size_t>(t0));
  const auto profile = seasonal_profile(pre, s);
  std::vector<double> input(w);
  double mean = 0.0;
  for (int j = 0; j < w; ++j) {
    input[j] = unit.values[t0 - w + j] - profile[(t0 - w + j) % s];
    mean += input[j];
  }
  mean /= static_cast<double>(w);
  for (double& v : input) v -= mean;

  std::vector<double> exog(static_cast<std::size_t>(h));
  for (int j = 0; j < h; ++j) exog[j] = profile[(t0 + j) % s];
  std::vector<double> cov;
  for (const auto& name : model.covariate_names)
    cov.push_back(unit.covariates.at(name)[t0 - 1]);

  auto out = model.forward(input, exog, cov);

  const int k_taus = model.n_taus();
  QuantileForecast fc;
  fc.unit_id = std::string(unit_id);
  fc.taus = model.cfg.taus;
  fc.paths = Matrix(static_cast<std::size_t>(h),
                    static_cast<std::size_t>(k_taus));
  std::size_t median_col = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < k_taus; ++k) {
    const double dist = std::abs(model.cfg.taus[k] - 0.5);
    if (dist < best_dist) {
      best_dist = dist;
      median_col = static_cast<std::size_t>(k);
    }
  }
  fc.point.resize(static_cast<std::size_t>(h));
  std::vector<double> row(static_cast<std::size_t>(k_taus));
  for (int step = 0; step < h; ++step) {
    for (int k = 0; k < k_taus; ++k)
      row[k] = out[step * k_taus + k] + mean + profile[(t0 + step) % s];
    std::sort(row.begin(), row.end());
    for (int k = 0; k < k_taus; ++k) fc.paths(step, k) = row[k];
    fc.point[step] = fc.paths(step, median_col);
  }
  return fc;
}

}  // namespace cfcast
