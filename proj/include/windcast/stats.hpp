#pragma once

#include <span>
#include <vector>

namespace windcast::stats {

[[nodiscard]] double mean(std::span<const double> x);
/// Population variance (divides by n).
[[nodiscard]] double variance(std::span<const double> x);
[[nodiscard]] double standard_deviation(std::span<const double> x);

/// Sample autocorrelations r_1..r_max_lag (biased estimator, denominator
/// sum of squared deviations). Lags beyond n - 1 are reported as 0.
[[nodiscard]] std::vector<double> acf(std::span<const double> x, int max_lag);

/// Cross-correlation corr(x_t, y_{t+k}) for k = -max_lag..max_lag.
[[nodiscard]] std::vector<double> ccf(std::span<const double> x, std::span<const double> y, int max_lag);

[[nodiscard]] double pearson(std::span<const double> x, std::span<const double> y);

[[nodiscard]] double normal_cdf(double z);
/// Upper tail of the chi-square distribution.
[[nodiscard]] double chi_square_sf(double statistic, double dof);

}  // namespace windcast::stats
