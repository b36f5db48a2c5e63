#pragma once

// Emission side of the pipeline: forecast CSVs (all units' post periods,
// point plus optional quantile columns), the effect-report JSON and flat CSV,
// and a static SVG chart of observed vs counterfactual per treated unit.

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfcast/effect.hpp"
#include "cfcast/io.hpp"
#include "cfcast/panel.hpp"

namespace cfcast {

namespace detail {

inline std::string tau_column_name(double tau) {
  const double pct = tau * 100.0;
  const long rounded = std::lround(pct);
  if (std::abs(pct - rounded) < 1e-9 && rounded >= 0 && rounded <= 99) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "q%02ld", rounded);
    return buf;
  }
  return "q" + format_double(tau);
}

inline double tau_from_column_name(const std::string& name) {
  const std::string body = name.substr(1);
  double v = 0.0;
  if (!parse_double(body, v)) return -1.0;
  return body.find('.') == std::string::npos ? v / 100.0 : v;
}

}  // namespace detail

inline void write_forecasts_csv(const std::string& path,
                                const ForecastSet& set,
                                const PeriodAxis& axis, int t0) {
  std::ofstream out(path, std::ios::binary);
  out << "unit_id,period,point";
  for (double tau : set.taus) out << ',' << detail::tau_column_name(tau);
  out << '\n';
  for (const auto& [unit_id, points] : set.points) {
    const Matrix* q = nullptr;
    if (auto it = set.quantiles.find(unit_id); it != set.quantiles.end())
      q = &it->second;
    for (std::size_t k = 0; k < points.size(); ++k) {
      out << unit_id << ',' << axis.label(t0 + static_cast<int>(k)) << ','
          << detail::format_double(points[k]);
      if (q)
        for (std::size_t c = 0; c < q->cols(); ++c)
          out << ',' << detail::format_double((*q)(k, c));
      out << '\n';
    }
  }
}

/// Reads a forecast CSV back into a ForecastSet; the model label is taken
/// from the caller (conventionally the file stem).
inline ForecastSet read_forecasts_csv(const std::string& path,
                                      const std::string& model_label) {
  ForecastSet set;
  set.model = model_label;
  std::map<std::string, std::map<std::string, std::vector<double>>> rows;

  auto in = detail::open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) fail(errc::missing_column, path + " is empty");
  auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "unit_id" || header[1] != "period" ||
      header[2] != "point")
    fail(errc::missing_column, path + ": expected unit_id,period,point");
  for (std::size_t c = 3; c < header.size(); ++c) {
    const double tau = detail::tau_from_column_name(header[c]);
    if (!(tau > 0.0 && tau < 1.0))
      fail(errc::missing_column, path + ": bad quantile column " + header[c]);
    set.taus.push_back(tau);
  }
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      fail(errc::unparseable_value,
           path + " row " + std::to_string(row) + ": wrong field count");
    auto& per_unit = rows[f[0]];
    for (std::size_t c = 2; c < f.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(f[c], v))
        fail(errc::unparseable_value,
             path + " row " + std::to_string(row) + ": value '" + f[c] + "'");
      per_unit[header[c] == "point" ? "point" : header[c]].push_back(v);
    }
  }
  for (auto& [unit_id, cols] : rows) {
    set.points[unit_id] = cols.at("point");
    if (!set.taus.empty()) {
      const std::size_t h = cols.at("point").size();
      Matrix q(h, set.taus.size());
      for (std::size_t c = 0; c < set.taus.size(); ++c) {
        const auto& col = cols.at(detail::tau_column_name(set.taus[c]));
        for (std::size_t k = 0; k < h; ++k) q(k, c) = col[k];
      }
      set.quantiles.emplace(unit_id, std::move(q));
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// report emission

inline nlohmann::json report_to_json(const EffectReport& report) {
  nlohmann::json j;
  j["t0"] = report.t0;
  j["horizon"] = report.horizon;
  j["seasonality"] = report.seasonality;
  if (report.true_att) j["true_att"] = *report.true_att;
  j["models"] = nlohmann::json::array();
  for (const auto& m : report.models) {
    nlohmann::json jm;
    jm["model"] = m.model;
    jm["att"] = m.att;
    jm["relative_att"] = m.relative_att;
    jm["att_path"] = m.att_path;
    jm["smape"] = m.smape_controls;
    jm["mase"] = m.mase_controls;
    jm["p_value"] = m.placebo.p_value;
    jm["method"] = m.placebo.method == WilcoxonResult::Method::exact
                       ? "exact"
                       : "normal-approximation";
    jm["u_statistic"] = m.placebo.u_statistic;
    jm["n_control"] = m.placebo.n_control;
    jm["n_treated"] = m.placebo.n_treated;
    if (m.smape_counterfactual)
      jm["smape_counterfactual"] = *m.smape_counterfactual;
    nlohmann::json paths;
    for (const auto& [unit_id, path] : m.per_unit_paths) paths[unit_id] = path;
    jm["per_unit_effect"] = std::move(paths);
    j["models"].push_back(std::move(jm));
  }
  return j;
}

inline void write_report_json(const std::string& path,
                              const EffectReport& report) {
  std::ofstream out(path, std::ios::binary);
  out << report_to_json(report).dump(2) << '\n';
}

inline void write_report_csv(const std::string& path,
                             const EffectReport& report) {
  std::ofstream out(path, std::ios::binary);
  out << "model,att,relative_att,smape,mase,p_value,method,"
         "smape_counterfactual\n";
  for (const auto& m : report.models) {
    out << m.model << ',' << detail::format_double(m.att) << ','
        << detail::format_double(m.relative_att) << ','
        << detail::format_double(m.smape_controls) << ','
        << detail::format_double(m.mase_controls) << ','
        << detail::format_double(m.placebo.p_value) << ','
        << (m.placebo.method == WilcoxonResult::Method::exact
                ? "exact"
                : "normal-approximation")
        << ',';
    if (m.smape_counterfactual)
      out << detail::format_double(*m.smape_counterfactual);
    out << '\n';
  }
}

/// Plain line chart: one panel per treated unit, observed series in full,
/// counterfactual forecast over the post period, a marker at t0.
inline void write_effect_chart_svg(const std::string& path,
                                   const PanelDataset& panel,
                                   const ForecastSet& set) {
  const int t0 = panel.t0();
  const int len = panel.length();
  const auto treated = panel.treated_indices();
  const int panel_w = 640, panel_h = 120, margin = 32;
  const int total_h =
      margin + static_cast<int>(treated.size()) * (panel_h + margin);

  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='"
      << panel_w + 2 * margin << "' height='" << total_h << "'>\n";
  out << "<text x='" << margin << "' y='16' font-family='sans-serif' "
      << "font-size='13'>" << set.model
      << ": observed vs counterfactual</text>\n";

  int y_off = margin;
  for (auto idx : treated) {
    const auto& unit = panel.units()[idx];
    const auto& forecast = set.points.at(unit.unit_id);
    double lo = unit.values[0], hi = unit.values[0];
    for (double v : unit.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (double v : forecast) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    auto x_at = [&](int t) {
      return margin + static_cast<double>(t) / (len - 1) * panel_w;
    };
    auto y_at = [&](double v) {
      return y_off + panel_h - (v - lo) / (hi - lo) * panel_h;
    };
    out << "<text x='" << margin << "' y='" << y_off - 4
        << "' font-family='sans-serif' font-size='11'>" << unit.unit_id
        << "</text>\n";
    out << "<polyline fill='none' stroke='#444' stroke-width='1' points='";
    for (int t = 0; t < len; ++t)
      out << x_at(t) << ',' << y_at(unit.values[t]) << ' ';
    out << "'/>\n";
    out << "<polyline fill='none' stroke='#c33' stroke-width='1.5' points='";
    for (std::size_t k = 0; k < forecast.size(); ++k)
      out << x_at(t0 + static_cast<int>(k)) << ',' << y_at(forecast[k]) << ' ';
    out << "'/>\n";
    out << "<line x1='" << x_at(t0) << "' y1='" << y_off << "' x2='"
        << x_at(t0) << "' y2='" << y_off + panel_h
        << "' stroke='#888' stroke-dasharray='4 3'/>\n";
    y_off += panel_h + margin;
  }
  out << "</svg>\n";
}

}  // namespace cfcast
