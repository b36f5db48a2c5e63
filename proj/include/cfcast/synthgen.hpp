#pragma once

// Synthetic benchmark generator: each unit is a linear combination of three
// sine waves (daily/weekly/monthly periods) around a base level, with
// per-step uniform amplitudes and a Gaussian-process level term whose
// covariance decays polynomially. An optional multiplicative exponential
// trend is applied on top. Interventions subtract quantile-graded constants
// (fractions of the treated group's pre-period standard deviation) from all
// post-intervention treated values, and the true counterfactuals are kept.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cfcast/error.hpp"
#include "cfcast/numerics.hpp"
#include "cfcast/panel.hpp"
#include "cfcast/rng.hpp"

namespace cfcast {

struct SynthConfig {
  int n_units = 50;
  int length = 90;
  bool trend = false;
  double trend_rate = 1.00005;
  std::uint64_t seed = 0;
  double base_level = 100.0;
  std::pair<double, double> beta_range{5.0, 10.0};
  std::array<double, 3> periods{1.0, 7.0, 30.0};

  void validate() const {
    if (n_units < 2) throw std::invalid_argument("need at least 2 units");
    if (length <= 24) throw std::invalid_argument("length must exceed 24");
    if (!(trend_rate > 0)) throw std::invalid_argument("trend_rate must be > 0");
  }
};

struct InterventionSpec {
  double treat_fraction = 0.3;
  int post_len = 24;
  // Subtracted constants in sigma units for decile pairs 1&2 .. 9&10.
  std::array<double, 5> decile_constants{0.3, 0.6, 0.9, 1.2, 1.5};
  double sigma = 0.0;  // computed by inject_intervention

  void validate() const {
    if (!(treat_fraction > 0.0 && treat_fraction < 1.0))
      throw std::invalid_argument("treat_fraction must be in (0,1)");
    if (post_len < 1) throw std::invalid_argument("post_len must be >= 1");
    for (std::size_t i = 1; i < decile_constants.size(); ++i)
      if (decile_constants[i] < decile_constants[i - 1])
        throw std::invalid_argument("decile constants must be non-decreasing");
  }
};

/// Covariance with unit diagonal and polynomial decay 1/|t1-t2| off it.
/// Not PSD in general; cholesky_psd repairs it before sampling.
inline Matrix gp_covariance(int length) {
  Matrix cov(static_cast<std::size_t>(length), static_cast<std::size_t>(length),
             0.0);
  for (int i = 0; i < length; ++i)
    for (int j = 0; j < length; ++j)
      cov(i, j) = i == j ? 1.0 : 1.0 / std::abs(i - j);
  return cov;
}

/// Shares one repaired factor across draws; factoring is O(length^3) and the
/// factor is identical for every unit of a scenario.
class GpSampler {
 public:
  explicit GpSampler(int length)
      : length_(length), factor_(cholesky_psd(gp_covariance(length))) {}

  std::vector<double> sample(std::uint64_t seed) const {
    auto engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(static_cast<std::size_t>(length_));
    for (double& v : z) v = normal(engine);
    std::vector<double> out(static_cast<std::size_t>(length_), 0.0);
    const Matrix& l = factor_.lower;
    for (int i = 0; i < length_; ++i) {
      double s = 0.0;
      for (int j = 0; j <= i; ++j) s += l(i, j) * z[j];
      out[i] = s;
    }
    return out;
  }

  /// Diagonal of the repaired covariance L L^T (differs from 1 after clipping).
  double repaired_variance(int t) const {
    double s = 0.0;
    for (int j = 0; j <= t; ++j) s += factor_.lower(t, j) * factor_.lower(t, j);
    return s;
  }

  double jitter() const { return factor_.jitter; }

 private:
  int length_;
  CholeskyResult factor_;
};

inline std::vector<double> sample_gp_beta0(int length, std::uint64_t seed) {
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  return GpSampler(length).sample(seed);
}

/// One evaluation of the generating function at 1-based step t with all
/// coefficients pinned, before any trend.
inline double eval_dgp(double base_level, double beta0, double beta1,
                       double beta2, double beta3, int t,
                       const std::array<double, 3>& periods = {1.0, 7.0, 30.0}) {
  const double two_pi = 2.0 * std::numbers::pi;
  return base_level + beta0 + beta1 * std::sin(two_pi * t / periods[0]) +
         beta2 * std::sin(two_pi * t / periods[1]) +
         beta3 * std::sin(two_pi * t / periods[2]);
}

namespace detail {

inline std::vector<double> generate_series_impl(const SynthConfig& cfg,
                                                std::uint64_t unit_seed,
                                                const GpSampler& gp) {
  const std::vector<double> beta0 = gp.sample(derive_seed(unit_seed, 1));
  auto engine = make_engine(derive_seed(unit_seed, 2));
  std::uniform_real_distribution<double> amp(cfg.beta_range.first,
                                             cfg.beta_range.second);
  std::vector<double> out(static_cast<std::size_t>(cfg.length));
  for (int t = 1; t <= cfg.length; ++t) {
    const double b1 = amp(engine), b2 = amp(engine), b3 = amp(engine);
    double v = eval_dgp(cfg.base_level, beta0[t - 1], b1, b2, b3, t,
                        cfg.periods);
    if (cfg.trend) v *= std::pow(cfg.trend_rate, t);
    out[t - 1] = v;
  }
  return out;
}

}  // namespace detail

inline std::vector<double> generate_series(const SynthConfig& cfg,
                                           std::uint64_t unit_seed) {
  cfg.validate();
  return detail::generate_series_impl(cfg, unit_seed, GpSampler(cfg.length));
}

/// All units of one scenario, untreated; unit ids are zero-padded so that
/// lexicographic sorting preserves generation order.
inline std::vector<UnitSeries> generate_units(const SynthConfig& cfg) {
  cfg.validate();
  GpSampler gp(cfg.length);
  std::vector<UnitSeries> units(static_cast<std::size_t>(cfg.n_units));
  for (int i = 0; i < cfg.n_units; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "unit_%03d", i);
    units[i].unit_id = id;
    units[i].values = detail::generate_series_impl(
        cfg, derive_seed(cfg.seed, 100, static_cast<std::uint64_t>(i)), gp);
  }
  return units;
}

/// Linear-interpolation quantile of a sorted sample at probability p.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct InjectResult {
  PanelDataset panel;
  SimulationTruth truth;
  InterventionSpec resolved;          // sigma filled in
  std::vector<double> decile_thresholds;  // 9 pre-period decile cuts
};

/// Splits units into treatment/control, computes the pooled treated
/// pre-period sigma and decile thresholds, and subtracts the graded constants
/// from every treated post-period value. Original values are stored as the
/// true counterfactuals.
inline InjectResult inject_intervention(std::vector<UnitSeries> units,
                                        InterventionSpec spec,
                                        std::uint64_t seed) {
  spec.validate();
  const int n = static_cast<int>(units.size());
  const int length = n > 0 ? static_cast<int>(units.front().values.size()) : 0;
  if (spec.post_len >= length)
    throw std::invalid_argument("post_len must be smaller than the length");
  const int n_treated =
      static_cast<int>(std::llround(n * spec.treat_fraction));
  if (n_treated < 1)
    throw std::invalid_argument("treat_fraction selects no units");
  if (n_treated >= n) fail(errc::no_control, "treat_fraction selects all units");
  const int t0 = length - spec.post_len;

  std::vector<int> order(units.size());
  for (int i = 0; i < n; ++i) order[i] = i;
  auto engine = make_engine(derive_seed(seed, 200));
  std::shuffle(order.begin(), order.end(), engine);
  for (auto& u : units) u.treated = false;
  for (int i = 0; i < n_treated; ++i) units[order[i]].treated = true;

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(n_treated) * t0);
  for (const auto& u : units)
    if (u.treated)
      pooled.insert(pooled.end(), u.values.begin(), u.values.begin() + t0);
  double mean = 0.0;
  for (double v : pooled) mean += v;
  mean /= static_cast<double>(pooled.size());
  double ss = 0.0;
  for (double v : pooled) ss += (v - mean) * (v - mean);
  const double sigma =
      std::sqrt(ss / static_cast<double>(pooled.size() - 1));  // sample sd
  if (!(sigma > 0.0))
    fail(errc::degenerate_sigma, "treated pre-period values are constant");
  spec.sigma = sigma;

  std::sort(pooled.begin(), pooled.end());
  std::vector<double> thresholds(9);
  for (int k = 1; k <= 9; ++k)
    thresholds[k - 1] = sorted_quantile(pooled, 0.1 * k);

  SimulationTruth truth;
  double shift_sum = 0.0;
  std::size_t shift_count = 0;
  for (auto& u : units) {
    if (!u.treated) continue;
    auto& cf = truth.counterfactuals[u.unit_id];
    cf.assign(u.values.begin() + t0, u.values.end());
    for (int t = t0; t < length; ++t) {
      double& y = u.values[t];
      int decile = 1;
      for (double thr : thresholds)
        if (y > thr) ++decile;  // above the pre-period max lands in decile 10
      const double c = spec.decile_constants[(decile - 1) / 2];
      y -= c * sigma;
      shift_sum += -c * sigma;
      ++shift_count;
    }
  }
  truth.true_att = shift_sum / static_cast<double>(shift_count);

  InjectResult out{build_panel(std::move(units), t0), std::move(truth),
                   spec, std::move(thresholds)};
  return out;
}

struct Scenario {
  std::string label;
  SynthConfig cfg;
  InjectResult data;
};

/// The eight benchmark combinations {50,300} x {90,420} x {stationary,trend}
/// for one seed, with the intervention injected and the truth stored.
inline std::vector<Scenario> generate_scenario_grid(
    std::uint64_t seed, const InterventionSpec& spec = {}) {
  std::vector<Scenario> out;
  int index = 0;
  for (int n_units : {50, 300}) {
    for (int length : {90, 420}) {
      for (bool trend : {false, true}) {
        SynthConfig cfg;
        cfg.n_units = n_units;
        cfg.length = length;
        cfg.trend = trend;
        cfg.seed = derive_seed(seed, 300, static_cast<std::uint64_t>(index));
        Scenario sc;
        sc.label = "n" + std::to_string(n_units) + "_len" +
                   std::to_string(length) +
                   (trend ? "_trend" : "_stationary");
        sc.cfg = cfg;
        sc.data = inject_intervention(generate_units(cfg), spec,
                                      derive_seed(seed, 301,
                                                  static_cast<std::uint64_t>(index)));
        out.push_back(std::move(sc));
        ++index;
      }
    }
  }
  return out;
}

}  // namespace cfcast
