#pragma once

// Drivers that apply one estimator to a whole panel and produce post-period
// forecasts for EVERY unit, controls included: control-unit predictions feed
// the error metrics and the placebo test. The local estimators treat each
// unit in turn as the target, with the other control units as its donor
// pool; the global ones fit once and predict everyone.

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfcast/arima.hpp"
#include "cfcast/effect.hpp"
#include "cfcast/mixer.hpp"
#include "cfcast/model_io.hpp"
#include "cfcast/panel.hpp"
#include "cfcast/probcp.hpp"
#include "cfcast/sc.hpp"

namespace cfcast {

struct ModelRun {
  ForecastSet forecasts;
  nlohmann::json model_doc;
};

inline ModelRun run_probcp(const PanelDataset& panel, ProbCpConfig cfg) {
  auto model = fit_probcp_lite(panel, cfg);
  ModelRun run;
  run.forecasts.model = "probcp";
  run.forecasts.taus = model.cfg.taus;
  for (const auto& unit : panel.units()) {
    auto fc = predict_counterfactual_quantiles(model, panel, unit.unit_id);
    run.forecasts.points.emplace(unit.unit_id, std::move(fc.point));
    run.forecasts.quantiles.emplace(unit.unit_id, std::move(fc.paths));
  }
  run.model_doc = probcp_to_json(model);
  return run;
}

inline ModelRun run_mixer(const PanelDataset& panel, MixerConfig cfg) {
  auto model = fit_mixer_lite(panel, cfg);
  ModelRun run;
  run.forecasts.model = "mixer";
  for (const auto& unit : panel.units())
    run.forecasts.points.emplace(unit.unit_id,
                                 predict_mixer(model, panel, unit.unit_id));
  run.model_doc = mixer_to_json(model);
  return run;
}

struct AscmConfig {
  std::vector<double> lambda_grid = default_lambda_grid();
};

inline ModelRun run_ascm(const PanelDataset& panel, const AscmConfig& cfg) {
  const int t0 = panel.t0();
  const int h = panel.horizon();
  const auto controls = panel.control_indices();
  ModelRun run;
  run.forecasts.model = "ascm";
  std::map<std::string, AugmentedModel> fitted;
  for (const auto& unit : panel.units()) {
    // donor pool: all controls except the unit itself
    std::vector<std::size_t> donors;
    std::vector<std::string> donor_ids;
    for (auto c : controls) {
      if (panel.units()[c].unit_id == unit.unit_id) continue;
      donors.push_back(c);
      donor_ids.push_back(panel.units()[c].unit_id);
    }
    Matrix pre(static_cast<std::size_t>(t0), donors.size());
    Matrix post(static_cast<std::size_t>(h), donors.size());
    for (std::size_t j = 0; j < donors.size(); ++j) {
      const auto& dvals = panel.units()[donors[j]].values;
      for (int t = 0; t < t0; ++t) pre(t, j) = dvals[t];
      for (int t = 0; t < h; ++t) post(t, j) = dvals[t0 + t];
    }
    std::span<const double> treated_pre(unit.values.data(),
                                        static_cast<std::size_t>(t0));
    auto model = fit_ascm(treated_pre, pre, post, cfg.lambda_grid, donor_ids);
    run.forecasts.points.emplace(unit.unit_id, predict_ascm(model, post));
    fitted.emplace(unit.unit_id, std::move(model));
  }
  run.model_doc = ascm_to_json(fitted);
  return run;
}

struct CarimaConfig {
  int seasonality = 7;
  bool deseasonalize = true;
  std::vector<ArimaOrder> grid;  // empty -> default grid
};

inline ModelRun run_carima(const PanelDataset& panel, const CarimaConfig& cfg) {
  const int t0 = panel.t0();
  const int h = panel.horizon();
  ModelRun run;
  run.forecasts.model = "carima";
  std::map<std::string, ArimaModel> fitted;
  for (const auto& unit : panel.units()) {
    std::span<const double> pre(unit.values.data(),
                                static_cast<std::size_t>(t0));
    std::vector<double> profile;
    std::vector<double> series(pre.begin(), pre.end());
    if (cfg.deseasonalize) {
      profile = seasonal_profile(pre, cfg.seasonality);
      series = subtract_profile(pre, profile);
    }
    auto model = fit_carima(series, cfg.grid);
    auto forecast = forecast_arima(model, series, h);
    if (cfg.deseasonalize) forecast = add_profile(forecast, profile, t0);
    run.forecasts.points.emplace(unit.unit_id, std::move(forecast));
    fitted.emplace(unit.unit_id, std::move(model));
  }
  run.model_doc = carima_to_json(fitted, cfg.seasonality, cfg.deseasonalize);
  return run;
}

// ---------------------------------------------------------------------------
// json-config dispatch used by the command line

inline ProbCpConfig probcp_config_from_json(const nlohmann::json& j,
                                            int seasonality,
                                            std::uint64_t seed) {
  ProbCpConfig cfg;
  cfg.seasonality = seasonality;
  cfg.optimizer.seed = seed;
  if (j.contains("window_w")) cfg.window_w = j["window_w"].get<int>();
  if (j.contains("taus")) cfg.taus = j["taus"].get<std::vector<double>>();
  if (j.contains("hidden_size")) cfg.hidden_size = j["hidden_size"].get<int>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("step_size"))
    cfg.optimizer.step_size = j["step_size"].get<double>();
  return cfg;
}

inline MixerConfig mixer_config_from_json(const nlohmann::json& j,
                                          int seasonality,
                                          std::uint64_t seed) {
  MixerConfig cfg;
  cfg.seasonality = seasonality;
  cfg.optimizer.seed = seed;
  if (j.contains("window_w")) cfg.window_w = j["window_w"].get<int>();
  if (j.contains("n_blocks")) cfg.n_blocks = j["n_blocks"].get<int>();
  if (j.contains("hidden_mult")) cfg.hidden_mult = j["hidden_mult"].get<int>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("step_size"))
    cfg.optimizer.step_size = j["step_size"].get<double>();
  if (j.contains("activation")) {
    const auto name = j["activation"].get<std::string>();
    if (name == "linear") cfg.activation = Activation::linear;
    else if (name == "relu") cfg.activation = Activation::relu;
    else if (name == "tanh") cfg.activation = Activation::tanh_act;
    else throw std::invalid_argument("unknown activation " + name);
  }
  return cfg;
}

inline ModelRun run_model(const PanelDataset& panel, const std::string& name,
                          const nlohmann::json& model_cfg, int seasonality,
                          std::uint64_t seed) {
  if (name == "probcp")
    return run_probcp(panel,
                      probcp_config_from_json(model_cfg, seasonality, seed));
  if (name == "mixer")
    return run_mixer(panel,
                     mixer_config_from_json(model_cfg, seasonality, seed));
  if (name == "ascm") {
    AscmConfig cfg;
    if (model_cfg.contains("lambda_grid"))
      cfg.lambda_grid = model_cfg["lambda_grid"].get<std::vector<double>>();
    return run_ascm(panel, cfg);
  }
  if (name == "carima") {
    CarimaConfig cfg;
    cfg.seasonality = seasonality;
    if (model_cfg.contains("deseasonalize"))
      cfg.deseasonalize = model_cfg["deseasonalize"].get<bool>();
    return run_carima(panel, cfg);
  }
  fail(errc::unknown_model,
       name + " (expected probcp, mixer, ascm, or carima)");
}

}  // namespace cfcast
