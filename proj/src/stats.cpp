#include "windcast/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace windcast::stats {

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (const double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size());
}

double standard_deviation(std::span<const double> x) { return std::sqrt(variance(x)); }

std::vector<double> acf(std::span<const double> x, int max_lag) {
    std::vector<double> out(static_cast<std::size_t>(std::max(max_lag, 0)), 0.0);
    const std::size_t n = x.size();
    if (n < 2) return out;
    const double m = mean(x);
    double denom = 0.0;
    for (const double v : x) denom += (v - m) * (v - m);
    if (denom <= 0.0) return out;
    for (int k = 1; k <= max_lag && static_cast<std::size_t>(k) < n; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t + static_cast<std::size_t>(k) < n; ++t) {
            s += (x[t] - m) * (x[t + static_cast<std::size_t>(k)] - m);
        }
        out[static_cast<std::size_t>(k - 1)] = s / denom;
    }
    return out;
}

std::vector<double> ccf(std::span<const double> x, std::span<const double> y, int max_lag) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("ccf: series lengths differ");
    }
    const std::size_t n = x.size();
    std::vector<double> out(static_cast<std::size_t>(2 * max_lag + 1), 0.0);
    const double mx = mean(x);
    const double my = mean(y);
    const double sx = std::sqrt(variance(x));
    const double sy = std::sqrt(variance(y));
    if (n < 2 || sx <= 0.0 || sy <= 0.0) return out;
    for (int k = -max_lag; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const auto u = static_cast<std::ptrdiff_t>(t) + k;
            if (u < 0 || u >= static_cast<std::ptrdiff_t>(n)) continue;
            s += (x[t] - mx) * (y[static_cast<std::size_t>(u)] - my);
        }
        out[static_cast<std::size_t>(k + max_lag)] = s / (static_cast<double>(n) * sx * sy);
    }
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("pearson: need two equal-length series of length >= 2");
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double normal_cdf(double z) {
    return boost::math::cdf(boost::math::normal_distribution<double>(0.0, 1.0), z);
}

double chi_square_sf(double statistic, double dof) {
    if (statistic <= 0.0) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), statistic));
}

}  // namespace windcast::stats
