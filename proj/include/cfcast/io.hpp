#pragma once

// File-format layer: panel/covariate/truth/forecast CSVs, scenario manifests
// and study configuration JSON. Periods are either non-negative integer
// indices or ISO-8601 year-months (an optional fixed day-of-month suffix is
// tolerated); dates are mapped to 0-based indices at ingestion and never
// used internally. Values are written with shortest-round-trip formatting,
// so write -> read reproduces doubles bit-exactly.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfcast/error.hpp"
#include "cfcast/panel.hpp"

namespace cfcast {

// ---------------------------------------------------------------------------
// periods

class PeriodAxis {
 public:
  enum class Kind { integer, month };

  static PeriodAxis from_labels(const std::vector<std::string>& sorted_labels);

  int size() const { return size_; }
  Kind kind() const { return kind_; }

  std::string label(int index) const {
    if (kind_ == Kind::integer) return std::to_string(start_ + index);
    const long m = start_ + index;
    const long year = m / 12;
    const long month = m % 12 + 1;
    char buf[16];
    if (has_day_)
      std::snprintf(buf, sizeof(buf), "%04ld-%02ld-%02d", year, month, day_);
    else
      std::snprintf(buf, sizeof(buf), "%04ld-%02ld", year, month);
    return buf;
  }

  /// Index of a label on this axis; BadT0 if it does not parse or lies
  /// outside the covered range.
  int index_of(const std::string& label) const {
    long key = 0;
    int day = 0;
    if (!parse_label(label, kind_, key, day))
      fail(errc::bad_t0, "period '" + label + "' does not parse");
    const long idx = key - start_;
    if (idx < 0 || idx >= size_)
      fail(errc::bad_t0, "period '" + label + "' is outside the panel range");
    return static_cast<int>(idx);
  }

  static bool parse_label(const std::string& s, Kind& kind, long& key,
                          int& day) {
    if (s.empty()) return false;
    const bool all_digits =
        s.find_first_not_of("0123456789") == std::string::npos;
    if (all_digits) {
      kind = Kind::integer;
      key = std::stol(s);
      day = 0;
      return true;
    }
    // YYYY-MM or YYYY-MM-DD
    int year = 0, month = 0;
    day = 0;
    const int n = std::sscanf(s.c_str(), "%d-%d-%d", &year, &month, &day);
    if (n < 2 || month < 1 || month > 12 || year < 0) return false;
    if (n == 3 && (day < 1 || day > 31)) return false;
    kind = Kind::month;
    key = static_cast<long>(year) * 12 + (month - 1);
    return true;
  }

  static bool parse_label(const std::string& s, Kind expected, long& key,
                          int& day) {
    Kind k;
    if (!parse_label(s, k, key, day)) return false;
    return k == expected;
  }

 private:
  Kind kind_ = Kind::integer;
  long start_ = 0;
  int size_ = 0;
  int day_ = 1;
  bool has_day_ = false;

  friend PeriodAxis make_integer_axis(int start, int size);
};

inline PeriodAxis make_integer_axis(int start, int size) {
  PeriodAxis axis;
  axis.kind_ = PeriodAxis::Kind::integer;
  axis.start_ = start;
  axis.size_ = size;
  return axis;
}

inline PeriodAxis PeriodAxis::from_labels(
    const std::vector<std::string>& sorted_labels) {
  if (sorted_labels.empty())
    fail(errc::gap_in_periods, "no periods found");
  PeriodAxis axis;
  long key = 0;
  int day = 0;
  Kind kind;
  if (!parse_label(sorted_labels.front(), kind, key, day))
    fail(errc::unparseable_value,
         "period '" + sorted_labels.front() + "' does not parse");
  axis.kind_ = kind;
  axis.start_ = key;
  axis.size_ = static_cast<int>(sorted_labels.size());
  axis.day_ = day > 0 ? day : 1;
  axis.has_day_ = day > 0;
  long prev = key;
  for (std::size_t i = 1; i < sorted_labels.size(); ++i) {
    Kind k;
    int d = 0;
    if (!parse_label(sorted_labels[i], k, key, d) || k != kind)
      fail(errc::unparseable_value,
           "period '" + sorted_labels[i] + "' does not parse consistently");
    if (axis.has_day_ != (d > 0) || (axis.has_day_ && d != axis.day_))
      fail(errc::gap_in_periods,
           "period '" + sorted_labels[i] + "' breaks the day-of-period rule");
    if (key != prev + 1)
      fail(errc::gap_in_periods, "gap between " + sorted_labels[i - 1] +
                                     " and " + sorted_labels[i]);
    prev = key;
  }
  return axis;
}

// ---------------------------------------------------------------------------
// csv primitives

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc{} && res.ptr == e;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

// Tabular reader shared by every CSV schema: validates the header, hands
// rows (with 1-based row numbers) to the sink.
template <typename RowSink>
void read_csv(const std::string& path,
              const std::vector<std::string>& expected_header, RowSink sink) {
  auto in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line))
    fail(errc::missing_column, path + " is empty");
  auto header = split_csv_line(line);
  if (header.size() < expected_header.size())
    fail(errc::missing_column, path + ": header has " +
                                   std::to_string(header.size()) +
                                   " columns, need " +
                                   std::to_string(expected_header.size()));
  for (std::size_t i = 0; i < expected_header.size(); ++i)
    if (header[i] != expected_header[i])
      fail(errc::missing_column, path + ": expected column '" +
                                     expected_header[i] + "', found '" +
                                     header[i] + "'");
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      fail(errc::unparseable_value,
           path + " row " + std::to_string(row) + ": wrong field count");
    sink(row, fields);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// panel csv

struct PanelTable {
  std::vector<UnitSeries> units;  // sorted by unit_id
  PeriodAxis axis;
};

inline PanelTable read_panel_csv(const std::string& path) {
  std::map<std::string, std::map<std::string, double>> cells;
  std::set<std::string> labels;
  detail::read_csv(path, {"unit_id", "period", "value"},
                   [&](int row, const std::vector<std::string>& f) {
                     double v = 0.0;
                     if (!detail::parse_double(f[2], v))
                       fail(errc::unparseable_value,
                            path + " row " + std::to_string(row) +
                                ": value '" + f[2] + "'");
                     auto [it, inserted] = cells[f[0]].emplace(f[1], v);
                     if (!inserted)
                       fail(errc::duplicate_key,
                            path + " row " + std::to_string(row) + ": (" +
                                f[0] + ", " + f[1] + ") appears twice");
                     labels.insert(f[1]);
                   });
  if (cells.empty()) fail(errc::gap_in_periods, path + " has no data rows");

  std::vector<std::string> sorted_labels(labels.begin(), labels.end());
  PanelTable table{.units = {}, .axis = PeriodAxis::from_labels(sorted_labels)};
  for (auto& [unit_id, series] : cells) {
    UnitSeries u;
    u.unit_id = unit_id;
    u.values.reserve(sorted_labels.size());
    for (const auto& label : sorted_labels) {
      auto it = series.find(label);
      if (it == series.end())
        fail(errc::gap_in_periods,
             path + ": unit " + unit_id + " is missing period " + label);
      u.values.push_back(it->second);
    }
    table.units.push_back(std::move(u));
  }
  return table;
}

inline void write_panel_csv(const std::string& path,
                            const std::vector<UnitSeries>& units,
                            const PeriodAxis& axis) {
  std::ofstream out(path, std::ios::binary);
  out << "unit_id,period,value\n";
  for (const auto& u : units)
    for (std::size_t t = 0; t < u.values.size(); ++t)
      out << u.unit_id << ',' << axis.label(static_cast<int>(t)) << ','
          << detail::format_double(u.values[t]) << '\n';
}

// ---------------------------------------------------------------------------
// truth csv

inline void write_truth_csv(const std::string& path,
                            const SimulationTruth& truth,
                            const PeriodAxis& axis, int t0) {
  std::ofstream out(path, std::ios::binary);
  out << "unit_id,period,counterfactual\n";
  for (const auto& [unit_id, values] : truth.counterfactuals)
    for (std::size_t k = 0; k < values.size(); ++k)
      out << unit_id << ',' << axis.label(t0 + static_cast<int>(k)) << ','
          << detail::format_double(values[k]) << '\n';
}

inline SimulationTruth read_truth_csv(const std::string& path,
                                      double true_att = 0.0) {
  SimulationTruth truth;
  truth.true_att = true_att;
  detail::read_csv(path, {"unit_id", "period", "counterfactual"},
                   [&](int row, const std::vector<std::string>& f) {
                     double v = 0.0;
                     if (!detail::parse_double(f[2], v))
                       fail(errc::unparseable_value,
                            path + " row " + std::to_string(row) +
                                ": value '" + f[2] + "'");
                     truth.counterfactuals[f[0]].push_back(v);
                   });
  return truth;
}

// ---------------------------------------------------------------------------
// covariates

/// Attaches covariates from a `unit_id,period,name,value` file. Each
/// covariate is z-scored with pre-period moments (post-period values reuse
/// them, so nothing leaks). Zero-variance covariates map to all-zeros and
/// produce a warning line instead of NaNs.
inline std::vector<std::string> join_covariates(std::vector<UnitSeries>& units,
                                                const PeriodAxis& axis,
                                                const std::string& path,
                                                int t0) {
  std::map<std::string, std::size_t> unit_index;
  for (std::size_t i = 0; i < units.size(); ++i)
    unit_index[units[i].unit_id] = i;

  std::map<std::string, std::vector<std::vector<double>>> raw;
  std::map<std::string, std::vector<std::vector<bool>>> seen;
  detail::read_csv(
      path, {"unit_id", "period", "name", "value"},
      [&](int row, const std::vector<std::string>& f) {
        auto it = unit_index.find(f[0]);
        if (it == unit_index.end())
          fail(errc::unknown_unit, path + " row " + std::to_string(row) +
                                       ": unit " + f[0]);
        const int t = axis.index_of(f[1]);
        double v = 0.0;
        if (!detail::parse_double(f[3], v))
          fail(errc::unparseable_value,
               path + " row " + std::to_string(row) + ": value '" + f[3] + "'");
        auto& mat = raw[f[2]];
        auto& mask = seen[f[2]];
        if (mat.empty()) {
          mat.assign(units.size(), std::vector<double>(axis.size(), 0.0));
          mask.assign(units.size(), std::vector<bool>(axis.size(), false));
        }
        if (mask[it->second][t])
          fail(errc::duplicate_key, path + " row " + std::to_string(row) +
                                        ": (" + f[0] + ", " + f[1] + ", " +
                                        f[2] + ") appears twice");
        mat[it->second][t] = v;
        mask[it->second][t] = true;
      });

  std::vector<std::string> warnings;
  for (auto& [name, mat] : raw) {
    const auto& mask = seen[name];
    for (std::size_t i = 0; i < units.size(); ++i)
      for (int t = 0; t < axis.size(); ++t)
        if (!mask[i][t])
          fail(errc::coverage_gap, path + ": covariate " + name +
                                       " missing for unit " +
                                       units[i].unit_id + " period " +
                                       axis.label(t));
    double mean = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < units.size(); ++i)
      for (int t = 0; t < t0; ++t) {
        mean += mat[i][t];
        ++count;
      }
    mean /= count;
    double var = 0.0;
    for (std::size_t i = 0; i < units.size(); ++i)
      for (int t = 0; t < t0; ++t) var += (mat[i][t] - mean) * (mat[i][t] - mean);
    var /= count;
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < units.size(); ++i) {
      auto& dest = units[i].covariates[name];
      dest.assign(static_cast<std::size_t>(axis.size()), 0.0);
      if (sd > 0)
        for (int t = 0; t < axis.size(); ++t)
          dest[t] = (mat[i][t] - mean) / sd;
    }
    if (sd == 0.0)
      warnings.push_back("covariate " + name +
                         " has zero pre-period variance; mapped to zeros");
  }
  return warnings;
}

// ---------------------------------------------------------------------------
// study config / scenario manifest

struct StudyConfig {
  int t0 = -1;               // resolved index when >= 0
  std::string t0_period;     // unresolved label form
  std::vector<std::string> treated_units;
  int seasonality = 12;
  std::vector<std::string> covariate_files;
  std::uint64_t seed = 0;
  nlohmann::json model_configs;  // passthrough for per-model settings

  int resolve_t0(const PeriodAxis& axis) const {
    if (t0 >= 0) return t0;
    if (t0_period.empty()) fail(errc::bad_t0, "study gives no t0");
    return axis.index_of(t0_period);
  }
};

inline StudyConfig load_study(const std::string& path) {
  auto in = detail::open_for_read(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    fail(errc::schema_drift, path + ": " + e.what());
  }
  StudyConfig cfg;
  if (j.contains("t0")) {
    if (j["t0"].is_number_integer())
      cfg.t0 = j["t0"].get<int>();
    else
      cfg.t0_period = j["t0"].get<std::string>();
  }
  if (j.contains("t0_period")) cfg.t0_period = j["t0_period"].get<std::string>();
  if (j.contains("treated_units"))
    cfg.treated_units = j["treated_units"].get<std::vector<std::string>>();
  if (j.contains("seasonality")) cfg.seasonality = j["seasonality"].get<int>();
  if (j.contains("covariates"))
    cfg.covariate_files = j["covariates"].get<std::vector<std::string>>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("models")) cfg.model_configs = j["models"];
  return cfg;
}

/// Flags units as treated per the study and assembles the validated panel.
inline PanelDataset assemble_panel(PanelTable table, const StudyConfig& study) {
  const int t0 = study.resolve_t0(table.axis);
  std::set<std::string> treated(study.treated_units.begin(),
                                study.treated_units.end());
  for (auto& u : table.units) {
    auto it = treated.find(u.unit_id);
    if (it != treated.end()) {
      u.treated = true;
      treated.erase(it);
    } else {
      u.treated = false;
    }
  }
  if (!treated.empty())
    fail(errc::unknown_unit,
         "treated unit " + *treated.begin() + " is not in the panel");
  return build_panel(std::move(table.units), t0);
}

}  // namespace cfcast
