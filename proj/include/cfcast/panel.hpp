#pragma once

// Canonical data model for panels of unit time series sharing one
// intervention time, plus the windowing and seasonal-profile utilities every
// estimator builds on. Panels are immutable after construction and safe to
// share across threads.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfcast/error.hpp"

namespace cfcast {

struct UnitSeries {
  std::string unit_id;
  std::vector<double> values;
  bool treated = false;
  // Named covariate sequences, each exactly as long as values. Ordered map so
  // iteration (and therefore feature layout) is deterministic.
  std::map<std::string, std::vector<double>> covariates;
};

/// True post-intervention outcomes of treated units, known only for
/// simulated panels.
struct SimulationTruth {
  std::map<std::string, std::vector<double>> counterfactuals;  // length h
  double true_att = 0.0;
};

struct Window {
  std::string unit_id;
  std::vector<double> input;      // length W
  std::vector<double> target;     // length h
  std::vector<double> exogenous;  // filled by the consumer (seasonal terms &c)
  int position = 0;               // index of the first target step
};

class PanelDataset {
 public:
  PanelDataset() = default;

  int t0() const noexcept { return t0_; }
  int length() const noexcept {
    return units_.empty() ? 0 : static_cast<int>(units_.front().values.size());
  }
  int horizon() const noexcept { return length() - t0_; }

  const std::vector<UnitSeries>& units() const noexcept { return units_; }

  const UnitSeries& unit(std::string_view id) const {
    for (const auto& u : units_)
      if (u.unit_id == id) return u;
    fail(errc::unknown_unit, std::string(id));
  }

  std::size_t unit_index(std::string_view id) const {
    for (std::size_t i = 0; i < units_.size(); ++i)
      if (units_[i].unit_id == id) return i;
    fail(errc::unknown_unit, std::string(id));
  }

  std::vector<std::size_t> treated_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < units_.size(); ++i)
      if (units_[i].treated) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> control_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < units_.size(); ++i)
      if (!units_[i].treated) out.push_back(i);
    return out;
  }

  friend PanelDataset build_panel(std::vector<UnitSeries> records, int t0);

 private:
  std::vector<UnitSeries> units_;
  int t0_ = 0;
};

/// Validates and assembles a panel. Unit order is the input order.
inline PanelDataset build_panel(std::vector<UnitSeries> records, int t0) {
  if (records.empty()) throw std::invalid_argument("no units");
  const std::size_t len = records.front().values.size();
  if (len == 0) fail(errc::length_mismatch, "unit has empty values");
  bool any_treated = false, any_control = false;
  for (const auto& u : records) {
    if (u.values.size() != len)
      fail(errc::length_mismatch,
           "unit " + u.unit_id + " has length " +
               std::to_string(u.values.size()) + ", expected " +
               std::to_string(len));
    for (double v : u.values)
      if (!std::isfinite(v))
        fail(errc::unparseable_value,
             "unit " + u.unit_id + " contains a non-finite value");
    for (const auto& [name, seq] : u.covariates)
      if (seq.size() != len)
        fail(errc::length_mismatch,
             "covariate " + name + " of unit " + u.unit_id +
                 " does not match the series length");
    (u.treated ? any_treated : any_control) = true;
  }
  if (t0 <= 0 || t0 >= static_cast<int>(len))
    fail(errc::bad_t0, "t0=" + std::to_string(t0) + " not inside (0," +
                           std::to_string(len) + ")");
  if (!any_treated) fail(errc::no_treated, "panel has no treated unit");
  if (!any_control) fail(errc::no_control, "panel has no control unit");
  PanelDataset p;
  p.units_ = std::move(records);
  p.t0_ = t0;
  return p;
}

/// Non-owning time slice of a panel. Reading through a view never copies or
/// mutates the underlying storage.
struct PanelSlice {
  const PanelDataset* panel = nullptr;
  int offset = 0;
  int length = 0;

  std::span<const double> series(std::size_t unit_index) const {
    const auto& vals = panel->units()[unit_index].values;
    return std::span<const double>(vals).subspan(
        static_cast<std::size_t>(offset), static_cast<std::size_t>(length));
  }
  std::span<const double> series(std::string_view unit_id) const {
    return series(panel->unit_index(unit_id));
  }
};

inline std::pair<PanelSlice, PanelSlice> split_pre_post(
    const PanelDataset& panel) {
  PanelSlice pre{&panel, 0, panel.t0()};
  PanelSlice post{&panel, panel.t0(), panel.length() - panel.t0()};
  return {pre, post};
}

/// All stride-1 windows of `series` whose target ends at or before `limit`.
/// Exogenous features are left empty; forecasters fill them from context.
inline std::vector<Window> sliding_windows(const UnitSeries& series, int w,
                                           int h, int limit) {
  if (w < 1 || h < 1) throw std::invalid_argument("window and horizon >= 1");
  if (limit > static_cast<int>(series.values.size()))
    throw std::invalid_argument("limit exceeds series length");
  if (limit < w + h)
    fail(errc::too_short, "need at least " + std::to_string(w + h) +
                              " steps before the limit, have " +
                              std::to_string(limit));
  std::vector<Window> out;
  out.reserve(static_cast<std::size_t>(limit - w - h + 1));
  for (int pos = w; pos + h <= limit; ++pos) {
    Window win;
    win.unit_id = series.unit_id;
    win.input.assign(series.values.begin() + (pos - w),
                     series.values.begin() + pos);
    win.target.assign(series.values.begin() + pos,
                      series.values.begin() + (pos + h));
    win.position = pos;
    out.push_back(std::move(win));
  }
  return out;
}

/// Mean seasonal deviation per phase (t mod S), centered so the entries sum
/// to zero. Subtracting the tiled profile deseasonalizes the series;
/// re-adding it restores the input exactly.
inline std::vector<double> seasonal_profile(std::span<const double> values,
                                            int s) {
  if (s < 1) throw std::invalid_argument("seasonal period must be >= 1");
  if (static_cast<int>(values.size()) < s)
    fail(errc::too_short, "need at least S=" + std::to_string(s) +
                              " values, have " +
                              std::to_string(values.size()));
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());

  std::vector<double> profile(static_cast<std::size_t>(s), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(s), 0);
  for (std::size_t t = 0; t < values.size(); ++t) {
    profile[t % s] += values[t] - mean;
    ++counts[t % s];
  }
  double profile_mean = 0.0;
  for (int k = 0; k < s; ++k) {
    profile[k] /= static_cast<double>(counts[k]);
    profile_mean += profile[k];
  }
  profile_mean /= static_cast<double>(s);
  for (double& p : profile) p -= profile_mean;
  return profile;
}

inline std::vector<double> subtract_profile(std::span<const double> values,
                                            std::span<const double> profile) {
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] -= profile[t % profile.size()];
  return out;
}

inline std::vector<double> add_profile(std::span<const double> values,
                                       std::span<const double> profile,
                                       int first_position) {
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] += profile[(first_position + t) % profile.size()];
  return out;
}

}  // namespace cfcast
