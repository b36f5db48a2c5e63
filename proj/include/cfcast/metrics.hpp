#pragma once

#include <cmath>
#include <span>
#include <string>

#include "cfcast/error.hpp"

namespace cfcast {

/// Symmetric mean absolute percentage error:
///   (2/h) * sum |pred - actual| / (|actual| + |pred|).
/// Symmetric in its arguments and invariant to positive rescaling of both.
inline double smape(std::span<const double> actual,
                    std::span<const double> predicted) {
  if (actual.size() != predicted.size())
    fail(errc::length_mismatch, "actual/predicted lengths differ");
  if (actual.empty()) throw std::invalid_argument("empty series");
  double sum = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    const double denom = std::abs(actual[t]) + std::abs(predicted[t]);
    if (denom == 0.0)
      fail(errc::zero_denominator,
           "|actual| + |predicted| is zero at step " + std::to_string(t));
    sum += std::abs(predicted[t] - actual[t]) / denom;
  }
  return 2.0 * sum / static_cast<double>(actual.size());
}

/// Mean absolute scaled error: mean |pred - actual| divided by the in-sample
/// seasonal-naive mean absolute error at lag S.
inline double mase(std::span<const double> actual,
                   std::span<const double> predicted,
                   std::span<const double> insample, int s) {
  if (actual.size() != predicted.size())
    fail(errc::length_mismatch, "actual/predicted lengths differ");
  if (actual.empty()) throw std::invalid_argument("empty series");
  if (s < 1) throw std::invalid_argument("seasonal lag must be >= 1");
  const int n = static_cast<int>(insample.size());
  if (n <= s)
    fail(errc::too_short_insample,
         "need more than S=" + std::to_string(s) + " in-sample values, have " +
             std::to_string(n));
  double naive = 0.0;
  for (int t = s; t < n; ++t) naive += std::abs(insample[t] - insample[t - s]);
  naive /= static_cast<double>(n - s);
  if (naive == 0.0)
    fail(errc::zero_denominator, "seasonal-naive in-sample error is zero");
  double err = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t)
    err += std::abs(predicted[t] - actual[t]);
  err /= static_cast<double>(actual.size());
  return err / naive;
}

}  // namespace cfcast
