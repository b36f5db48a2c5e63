#pragma once

// One-sided Mann-Whitney/Wilcoxon rank-sum test of "treated values are
// stochastically larger than control values", used as the placebo test.
//
// Ties are handled with midranks. For small samples (n1 + n2 <= 20) the
// p-value is exact: every assignment of the observed midranks to the treated
// group is enumerated and the fraction with a rank sum at least as large as
// the observed one is reported. Larger samples use the normal approximation
// with tie correction and a 0.5 continuity correction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cfcast/error.hpp"

namespace cfcast {

struct WilcoxonResult {
  double u_statistic = 0.0;
  double p_value = 1.0;
  enum class Method { exact, normal_approximation } method = Method::exact;
  int n_control = 0;
  int n_treated = 0;
};

namespace detail {

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Midranks of the pooled sample, plus the tie term sum(t^3 - t).
inline void midranks(std::span<const double> pooled, std::vector<double>& ranks,
                     double& tie_term) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  ranks.assign(n, 0.0);
  tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
}

// P(rank sum of a random n1-subset >= observed), by full enumeration of
// combinations in lexicographic order.
inline double exact_rank_sum_p(const std::vector<double>& ranks,
                               std::size_t n_treated, double observed_sum) {
  const std::size_t n = ranks.size();
  std::vector<std::size_t> comb(n_treated);
  for (std::size_t i = 0; i < n_treated; ++i) comb[i] = i;
  std::uint64_t total = 0, at_least = 0;
  const double eps = 1e-9;
  while (true) {
    double sum = 0.0;
    for (std::size_t idx : comb) sum += ranks[idx];
    ++total;
    if (sum >= observed_sum - eps) ++at_least;
    // advance to the next combination
    std::size_t k = n_treated;
    while (k > 0) {
      --k;
      if (comb[k] != k + n - n_treated) {
        ++comb[k];
        for (std::size_t j = k + 1; j < n_treated; ++j)
          comb[j] = comb[j - 1] + 1;
        break;
      }
      if (k == 0) return static_cast<double>(at_least) /
                         static_cast<double>(total);
    }
  }
}

}  // namespace detail

enum class RankSumMethod { automatic, exact, normal };

/// One-sided rank-sum test of treated > control. By default the exact
/// enumeration is used up to 20 pooled observations; `method` can force
/// either path (used to cross-validate the two against each other).
inline WilcoxonResult rank_sum_test(
    std::span<const double> control, std::span<const double> treated,
    RankSumMethod method = RankSumMethod::automatic) {
  if (control.empty() || treated.empty())
    fail(errc::empty_group, control.empty() ? "control group is empty"
                                            : "treated group is empty");
  const std::size_t n1 = treated.size(), n2 = control.size();
  const std::size_t n = n1 + n2;
  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), treated.begin(), treated.end());
  pooled.insert(pooled.end(), control.begin(), control.end());

  std::vector<double> ranks;
  double tie_term = 0.0;
  detail::midranks(pooled, ranks, tie_term);

  double rank_sum_treated = 0.0;
  for (std::size_t i = 0; i < n1; ++i) rank_sum_treated += ranks[i];
  const double u = rank_sum_treated -
                   static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;

  WilcoxonResult res;
  res.u_statistic = u;
  res.n_treated = static_cast<int>(n1);
  res.n_control = static_cast<int>(n2);

  const bool use_exact = method == RankSumMethod::automatic
                             ? n <= 20
                             : method == RankSumMethod::exact;
  if (use_exact) {
    res.method = WilcoxonResult::Method::exact;
    std::vector<double> sorted_ranks = ranks;
    std::sort(sorted_ranks.begin(), sorted_ranks.end());
    res.p_value = detail::exact_rank_sum_p(sorted_ranks, n1, rank_sum_treated);
  } else {
    res.method = WilcoxonResult::Method::normal_approximation;
    const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
    const double dn = static_cast<double>(n);
    const double mu = dn1 * dn2 / 2.0;
    double var = dn1 * dn2 / 12.0 * (dn + 1.0 - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
      res.p_value = 1.0;  // every observation tied
      return res;
    }
    const double z = (u - mu - 0.5) / std::sqrt(var);
    res.p_value = detail::normal_sf(z);
  }
  return res;
}

}  // namespace cfcast
