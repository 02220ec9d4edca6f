#include "windcast/basis.hpp"

#include "windcast/error.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace windcast::basis {

void BasisConfig::validate() const {
    auto check = [](int k, std::int64_t s, const char* name) {
        if (k == 0) {
            return;
        }
        if (k < 4) {
            throw ConfigError(std::string(name) + " basis size must be 0 (off) or at least 4");
        }
        if (s < k) {
            throw ConfigError(std::string(name) + " basis size exceeds its period");
        }
        if (k > 64) {
            throw ConfigError(std::string(name) + " basis size above 64 is not supported");
        }
    };
    check(k1, s1, "diurnal");
    check(k2, s2, "annual");
}

double cubic_bspline(double x) {
    const double a = std::abs(x);
    if (a < 1.0) {
        return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    }
    if (a < 2.0) {
        const double b = 2.0 - a;
        return b * b * b / 6.0;
    }
    return 0.0;
}

PeriodicBasis::PeriodicBasis(std::int64_t period, int k) : period_(period), k_(k) {
    if (k < 4) {
        throw ConfigError("periodic cubic B-spline basis needs at least 4 functions");
    }
    if (period < k) {
        throw ConfigError("periodic basis size " + std::to_string(k) + " exceeds the period " +
                          std::to_string(period));
    }
}

double PeriodicBasis::value(int i, std::int64_t t) const {
    std::int64_t r = t % period_;
    if (r < 0) {
        r += period_;
    }
    const double u = static_cast<double>(r) * static_cast<double>(k_) / static_cast<double>(period_);
    double x = u - static_cast<double>(i);
    const double half = 0.5 * static_cast<double>(k_);
    if (x >= half) {
        x -= k_;
    } else if (x < -half) {
        x += k_;
    }
    return cubic_bspline(x);
}

void PeriodicBasis::evaluate(std::int64_t t, std::span<double> out) const {
    for (int i = 0; i < k_; ++i) {
        out[static_cast<std::size_t>(i)] = value(i, t);
    }
}

Eigen::MatrixXd evaluate_basis(std::int64_t period, int k, std::span<const std::int64_t> t_indices) {
    const PeriodicBasis basis(period, k);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(t_indices.size()), k);
    for (std::size_t r = 0; r < t_indices.size(); ++r) {
        for (int i = 0; i < k; ++i) {
            out(static_cast<Eigen::Index>(r), i) = basis.value(i, t_indices[r]);
        }
    }
    return out;
}

Eigen::MatrixXd BasisBlock::combined() const {
    Eigen::MatrixXd out(diurnal.rows(), diurnal.cols() + annual.cols() + interaction.cols());
    out << diurnal, annual, interaction;
    return out;
}

BasisBlock build_basis_block(Eigen::Index T, int k1, int k2, std::int64_t s1, std::int64_t s2,
                             std::int64_t first_step) {
    const BasisConfig config{k1, k2, s1, s2};
    config.validate();
    const int d1 = config.diurnal_columns();
    const int d2 = config.annual_columns();
    BasisBlock block;
    block.diurnal.resize(T, d1);
    block.annual.resize(T, d2);
    block.interaction.resize(T, d1 * d2);
    std::vector<double> b1(static_cast<std::size_t>(k1));
    std::vector<double> b2(static_cast<std::size_t>(k2));
    const std::optional<PeriodicBasis> diurnal = k1 > 0 ? std::optional(PeriodicBasis(s1, k1)) : std::nullopt;
    const std::optional<PeriodicBasis> annual = k2 > 0 ? std::optional(PeriodicBasis(s2, k2)) : std::nullopt;
    for (Eigen::Index r = 0; r < T; ++r) {
        const std::int64_t t = first_step + r;
        if (diurnal) diurnal->evaluate(t, b1);
        if (annual) annual->evaluate(t, b2);
        for (int i = 0; i < d1; ++i) block.diurnal(r, i) = b1[static_cast<std::size_t>(i) + 1];
        for (int j = 0; j < d2; ++j) block.annual(r, j) = b2[static_cast<std::size_t>(j) + 1];
        for (int i = 0; i < d1; ++i) {
            for (int j = 0; j < d2; ++j) {
                block.interaction(r, i * d2 + j) =
                    b1[static_cast<std::size_t>(i) + 1] * b2[static_cast<std::size_t>(j) + 1];
            }
        }
    }
    return block;
}

PeriodicRegressors::PeriodicRegressors(const BasisConfig& config) : config_(config) {
    config_.validate();
    if (config_.k1 > 0) bases_.emplace_back(config_.s1, config_.k1);
    if (config_.k2 > 0) bases_.emplace_back(config_.s2, config_.k2);
}

void PeriodicRegressors::evaluate(std::int64_t t, std::span<double> out) const {
    const int d1 = config_.diurnal_columns();
    const int d2 = config_.annual_columns();
    // Largest k is small (default 6); fixed buffers avoid allocation per row.
    double b1[64];
    double b2[64];
    std::size_t next = 0;
    if (d1 > 0) {
        bases_.front().evaluate(t, std::span<double>(b1, static_cast<std::size_t>(config_.k1)));
    }
    if (d2 > 0) {
        bases_.back().evaluate(t, std::span<double>(b2, static_cast<std::size_t>(config_.k2)));
    }
    for (int i = 1; i <= d1; ++i) out[next++] = b1[i];
    for (int j = 1; j <= d2; ++j) out[next++] = b2[j];
    for (int i = 1; i <= d1; ++i) {
        for (int j = 1; j <= d2; ++j) {
            out[next++] = b1[i] * b2[j];
        }
    }
}

std::pair<int, int> PeriodicRegressors::index_pair(int c) const {
    const int d1 = config_.diurnal_columns();
    const int d2 = config_.annual_columns();
    if (c < d1) {
        return {c + 2, 1};
    }
    c -= d1;
    if (c < d2) {
        return {1, c + 2};
    }
    c -= d2;
    return {c / d2 + 2, c % d2 + 2};
}

}  // namespace windcast::basis
