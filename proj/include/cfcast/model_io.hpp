#pragma once

// JSON parameter documents for fitted models: named arrays plus a config
// echo, enough to reload and re-predict without refitting.

#include <map>
#include <string>

#include <json.hpp>

#include "cfcast/arima.hpp"
#include "cfcast/mixer.hpp"
#include "cfcast/probcp.hpp"
#include "cfcast/sc.hpp"

namespace cfcast {

inline nlohmann::json probcp_to_json(const ProbCpModel& m) {
  nlohmann::json j;
  j["model"] = "probcp";
  j["config"] = {{"window_w", m.cfg.window_w},
                 {"seasonality", m.cfg.seasonality},
                 {"taus", m.cfg.taus},
                 {"hidden_size", m.cfg.hidden_size},
                 {"epochs", m.cfg.epochs},
                 {"batch_size", m.cfg.batch_size},
                 {"step_size", m.cfg.optimizer.step_size},
                 {"seed", m.cfg.optimizer.seed}};
  j["window"] = m.window;
  j["horizon"] = m.horizon;
  j["covariates"] = m.covariate_names;
  j["params"] = m.params;
  j["holdout_crps"] = m.holdout_crps;
  return j;
}

inline ProbCpModel probcp_from_json(const nlohmann::json& j) {
  ProbCpModel m;
  const auto& c = j.at("config");
  m.cfg.window_w = c.at("window_w").get<int>();
  m.cfg.seasonality = c.at("seasonality").get<int>();
  m.cfg.taus = c.at("taus").get<std::vector<double>>();
  m.cfg.hidden_size = c.at("hidden_size").get<int>();
  m.cfg.epochs = c.at("epochs").get<int>();
  m.cfg.batch_size = c.at("batch_size").get<int>();
  m.cfg.optimizer.step_size = c.at("step_size").get<double>();
  m.cfg.optimizer.seed = c.at("seed").get<std::uint64_t>();
  m.window = j.at("window").get<int>();
  m.horizon = j.at("horizon").get<int>();
  m.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  m.n_cov = static_cast<int>(m.covariate_names.size());
  m.params = j.at("params").get<std::vector<double>>();
  m.holdout_crps = j.value("holdout_crps", 0.0);
  return m;
}

inline nlohmann::json mixer_to_json(const MixerModel& m) {
  nlohmann::json j;
  j["model"] = "mixer";
  j["config"] = {{"n_blocks", m.cfg.n_blocks},
                 {"hidden_mult", m.cfg.hidden_mult},
                 {"window_w", m.cfg.window_w},
                 {"seasonality", m.cfg.seasonality},
                 {"epochs", m.cfg.epochs},
                 {"batch_size", m.cfg.batch_size},
                 {"activation", static_cast<int>(m.cfg.activation)},
                 {"step_size", m.cfg.optimizer.step_size},
                 {"seed", m.cfg.optimizer.seed}};
  j["window"] = m.window;
  j["horizon"] = m.horizon;
  j["channels"] = m.channels;
  j["covariates"] = m.covariate_names;
  j["params"] = m.params;
  j["train_loss"] = m.train_loss;
  return j;
}

inline MixerModel mixer_from_json(const nlohmann::json& j) {
  MixerModel m;
  const auto& c = j.at("config");
  m.cfg.n_blocks = c.at("n_blocks").get<int>();
  m.cfg.hidden_mult = c.at("hidden_mult").get<int>();
  m.cfg.window_w = c.at("window_w").get<int>();
  m.cfg.seasonality = c.at("seasonality").get<int>();
  m.cfg.epochs = c.at("epochs").get<int>();
  m.cfg.batch_size = c.at("batch_size").get<int>();
  m.cfg.activation = static_cast<Activation>(c.at("activation").get<int>());
  m.cfg.optimizer.step_size = c.at("step_size").get<double>();
  m.cfg.optimizer.seed = c.at("seed").get<std::uint64_t>();
  m.window = j.at("window").get<int>();
  m.horizon = j.at("horizon").get<int>();
  m.channels = j.at("channels").get<int>();
  m.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  m.params = j.at("params").get<std::vector<double>>();
  m.train_loss = j.value("train_loss", 0.0);
  return m;
}

inline nlohmann::json ascm_to_json(
    const std::map<std::string, AugmentedModel>& models) {
  nlohmann::json j;
  j["model"] = "ascm";
  nlohmann::json units;
  for (const auto& [unit_id, m] : models) {
    units[unit_id] = {{"donor_ids", m.base.donor_ids},
                      {"gamma", m.base.gamma},
                      {"intercept", m.base.intercept},
                      {"residuals", m.base.residuals},
                      {"lambda", m.lambda},
                      {"ridge_coeffs", m.ridge_coeffs},
                      {"bias_estimate", m.bias_estimate}};
  }
  j["units"] = std::move(units);
  return j;
}

inline std::map<std::string, AugmentedModel> ascm_from_json(
    const nlohmann::json& j) {
  std::map<std::string, AugmentedModel> out;
  for (const auto& [unit_id, u] : j.at("units").items()) {
    AugmentedModel m;
    m.base.donor_ids = u.at("donor_ids").get<std::vector<std::string>>();
    m.base.gamma = u.at("gamma").get<std::vector<double>>();
    m.base.intercept = u.at("intercept").get<double>();
    m.base.residuals = u.at("residuals").get<std::vector<double>>();
    m.lambda = u.at("lambda").get<double>();
    m.ridge_coeffs = u.at("ridge_coeffs").get<std::vector<double>>();
    m.bias_estimate = u.at("bias_estimate").get<std::vector<double>>();
    out.emplace(unit_id, std::move(m));
  }
  return out;
}

inline nlohmann::json carima_to_json(
    const std::map<std::string, ArimaModel>& models, int seasonality,
    bool deseasonalized) {
  nlohmann::json j;
  j["model"] = "carima";
  j["config"] = {{"seasonality", seasonality},
                 {"deseasonalize", deseasonalized}};
  nlohmann::json units;
  for (const auto& [unit_id, m] : models) {
    units[unit_id] = {{"order", {m.order.p, m.order.d, m.order.q}},
                      {"ar", m.ar},
                      {"ma", m.ma},
                      {"intercept", m.intercept},
                      {"sigma2", m.sigma2},
                      {"aicc", m.aicc}};
  }
  j["units"] = std::move(units);
  return j;
}

inline std::map<std::string, ArimaModel> carima_from_json(
    const nlohmann::json& j) {
  std::map<std::string, ArimaModel> out;
  for (const auto& [unit_id, u] : j.at("units").items()) {
    ArimaModel m;
    const auto order = u.at("order").get<std::vector<int>>();
    m.order = {order[0], order[1], order[2]};
    m.ar = u.at("ar").get<std::vector<double>>();
    m.ma = u.at("ma").get<std::vector<double>>();
    m.intercept = u.at("intercept").get<double>();
    m.sigma2 = u.at("sigma2").get<double>();
    m.aicc = u.at("aicc").get<double>();
    out.emplace(unit_id, std::move(m));
  }
  return out;
}

}  // namespace cfcast
