#pragma once

// Turns observed outcomes plus counterfactual forecasts into effect
// estimates, control-unit error metrics, and the placebo test. Error metrics
// are computed on control units only; treated units contribute the effect
// paths. The placebo statistic per unit is its post-period MASE (scale-free
// across units), compared between groups with the one-sided rank-sum test.

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfcast/error.hpp"
#include "cfcast/metrics.hpp"
#include "cfcast/numerics.hpp"
#include "cfcast/panel.hpp"
#include "cfcast/ranktest.hpp"

namespace cfcast {

/// One model's post-period forecasts for every unit of a panel.
struct ForecastSet {
  std::string model;
  std::map<std::string, std::vector<double>> points;  // unit -> path length h
  std::map<std::string, Matrix> quantiles;            // optional, h x K
  std::vector<double> taus;                           // set when quantiles are
};

struct EffectSummary {
  std::map<std::string, std::vector<double>> per_unit_paths;  // treated only
  std::vector<double> att_path;
  double att = 0.0;
};

/// Per-unit effect paths (observed - counterfactual) and their averages.
inline EffectSummary effect_and_att(
    const PanelDataset& panel,
    const std::map<std::string, std::vector<double>>& forecasts) {
  const int t0 = panel.t0();
  const int h = panel.horizon();
  EffectSummary out;
  out.att_path.assign(static_cast<std::size_t>(h), 0.0);
  const auto treated = panel.treated_indices();
  for (auto idx : treated) {
    const auto& unit = panel.units()[idx];
    auto it = forecasts.find(unit.unit_id);
    if (it == forecasts.end())
      fail(errc::missing_forecast, "no forecast for treated unit " +
                                       unit.unit_id);
    if (static_cast<int>(it->second.size()) != h)
      fail(errc::length_mismatch, "forecast for " + unit.unit_id +
                                      " does not span the horizon");
    std::vector<double> path(static_cast<std::size_t>(h));
    for (int t = 0; t < h; ++t) {
      path[t] = unit.values[t0 + t] - it->second[t];
      out.att_path[t] += path[t];
    }
    out.per_unit_paths.emplace(unit.unit_id, std::move(path));
  }
  double total = 0.0;
  for (double& v : out.att_path) {
    v /= static_cast<double>(treated.size());
    total += v;
  }
  out.att = total / static_cast<double>(h);
  return out;
}

/// att divided by the mean treated outcome over the last S pre-intervention
/// steps (one season, the year-equivalent for monthly data).
inline double relative_att(const PanelDataset& panel, double att, int s) {
  const int t0 = panel.t0();
  if (s < 1 || s > t0) throw std::invalid_argument("bad season length");
  double denom = 0.0;
  int count = 0;
  for (auto idx : panel.treated_indices())
    for (int t = t0 - s; t < t0; ++t) {
      denom += panel.units()[idx].values[t];
      ++count;
    }
  denom /= static_cast<double>(count);
  if (denom == 0.0) fail(errc::zero_denominator, "pre-period mean is zero");
  return att / denom;
}

/// Placebo test: treated prediction errors stochastically larger than
/// control ones. Callers supply scale-free per-unit error statistics.
inline WilcoxonResult placebo_test(std::span<const double> control_errors,
                                   std::span<const double> treated_errors) {
  return rank_sum_test(control_errors, treated_errors);
}

struct ModelEffect {
  std::string model;
  std::map<std::string, std::vector<double>> per_unit_paths;
  std::vector<double> att_path;
  double att = 0.0;
  double relative_att = 0.0;
  double smape_controls = 0.0;
  double mase_controls = 0.0;
  std::optional<double> smape_counterfactual;  // treated vs truth
  WilcoxonResult placebo;
};

struct EffectReport {
  int t0 = 0;
  int horizon = 0;
  int seasonality = 0;
  std::optional<double> true_att;
  std::vector<ModelEffect> models;
};

/// Assembles the full report for one or more models' forecasts. When the
/// simulation truth is supplied, adds the counterfactual sMAPE on treated
/// units and echoes the true effect.
inline EffectReport build_report(const PanelDataset& panel,
                                 const std::vector<ForecastSet>& forecasts,
                                 int seasonality,
                                 const SimulationTruth* truth = nullptr) {
  if (forecasts.empty())
    throw std::invalid_argument("need at least one model's forecasts");
  EffectReport report;
  report.t0 = panel.t0();
  report.horizon = panel.horizon();
  report.seasonality = seasonality;
  if (truth) report.true_att = truth->true_att;

  const int t0 = panel.t0();
  const int h = panel.horizon();
  for (const auto& set : forecasts) {
    ModelEffect me;
    me.model = set.model;

    std::vector<double> control_errors, treated_errors;
    double smape_sum = 0.0, mase_sum = 0.0;
    int n_controls = 0;
    for (const auto& unit : panel.units()) {
      auto it = set.points.find(unit.unit_id);
      if (it == set.points.end())
        fail(errc::missing_forecast,
             "model " + set.model + " has no forecast for " + unit.unit_id);
      std::span<const double> actual(unit.values.data() + t0,
                                     static_cast<std::size_t>(h));
      std::span<const double> insample(unit.values.data(),
                                       static_cast<std::size_t>(t0));
      const double unit_mase = mase(actual, it->second, insample, seasonality);
      if (unit.treated) {
        treated_errors.push_back(unit_mase);
      } else {
        control_errors.push_back(unit_mase);
        smape_sum += smape(actual, it->second);
        mase_sum += unit_mase;
        ++n_controls;
      }
    }
    me.smape_controls = smape_sum / n_controls;
    me.mase_controls = mase_sum / n_controls;
    me.placebo = placebo_test(control_errors, treated_errors);

    auto summary = effect_and_att(panel, set.points);
    me.per_unit_paths = std::move(summary.per_unit_paths);
    me.att_path = std::move(summary.att_path);
    me.att = summary.att;
    me.relative_att = relative_att(panel, me.att, seasonality);

    if (truth) {
      double cf_sum = 0.0;
      int cf_count = 0;
      for (const auto& [unit_id, cf] : truth->counterfactuals) {
        const auto& pred = set.points.at(unit_id);
        cf_sum += smape(cf, pred);
        ++cf_count;
      }
      me.smape_counterfactual = cf_sum / cf_count;
    }
    report.models.push_back(std::move(me));
  }
  return report;
}

}  // namespace cfcast
