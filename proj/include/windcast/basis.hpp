#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace windcast::basis {

/// Periodic-expansion settings. A basis size of 0 switches that period off
/// (no columns for it and no interactions).
struct BasisConfig {
    int k1 = 6;                 // diurnal basis size
    int k2 = 6;                 // annual basis size
    std::int64_t s1 = 144;      // observations per day
    std::int64_t s2 = 52596;    // observations per 365.25-day year

    [[nodiscard]] int diurnal_columns() const { return k1 > 0 ? k1 - 1 : 0; }
    [[nodiscard]] int annual_columns() const { return k2 > 0 ? k2 - 1 : 0; }
    /// Periodic columns per coefficient (without the constant).
    [[nodiscard]] int periodic_columns() const {
        return diurnal_columns() + annual_columns() + diurnal_columns() * annual_columns();
    }
    /// Constant plus periodic columns: the width of one coefficient expansion.
    [[nodiscard]] int expansion_width() const { return 1 + periodic_columns(); }

    void validate() const;

    friend bool operator==(const BasisConfig&, const BasisConfig&) = default;
};

/// Cubic B-splines on k equidistant knots wrapped around a period. Knot i
/// (0-based) sits at i * period / k, so the first function peaks at t = 0.
class PeriodicBasis {
public:
    PeriodicBasis(std::int64_t period, int k);

    [[nodiscard]] std::int64_t period() const { return period_; }
    [[nodiscard]] int size() const { return k_; }

    /// Value of basis function i (0-based) at time index t.
    [[nodiscard]] double value(int i, std::int64_t t) const;

    /// All k values at t.
    void evaluate(std::int64_t t, std::span<double> out) const;

private:
    std::int64_t period_;
    int k_;
};

/// Cardinal cubic B-spline centred at 0 with unit knot spacing.
[[nodiscard]] double cubic_bspline(double x);

/// T x k matrix of basis values at the given time indices.
[[nodiscard]] Eigen::MatrixXd evaluate_basis(std::int64_t period, int k,
                                             std::span<const std::int64_t> t_indices);

/// Diurnal, annual, and interaction columns (first basis function of each
/// period omitted). Interactions run i1 outer, i2 inner.
struct BasisBlock {
    Eigen::MatrixXd diurnal;
    Eigen::MatrixXd annual;
    Eigen::MatrixXd interaction;

    /// [diurnal | annual | interaction].
    [[nodiscard]] Eigen::MatrixXd combined() const;
};

/// Block for t = first_step, ..., first_step + T - 1.
[[nodiscard]] BasisBlock build_basis_block(Eigen::Index T, int k1, int k2, std::int64_t s1,
                                           std::int64_t s2, std::int64_t first_step = 0);

/// Lazy evaluator of the periodic columns for one time index, in the same
/// order as BasisBlock::combined().
class PeriodicRegressors {
public:
    explicit PeriodicRegressors(const BasisConfig& config);

    [[nodiscard]] int size() const { return config_.periodic_columns(); }
    [[nodiscard]] const BasisConfig& config() const { return config_; }

    void evaluate(std::int64_t t, std::span<double> out) const;

    /// 1-based (i1, i2) pair of periodic column c: (i1, 1) diurnal, (1, i2)
    /// annual, otherwise an interaction.
    [[nodiscard]] std::pair<int, int> index_pair(int c) const;

private:
    BasisConfig config_;
    std::vector<PeriodicBasis> bases_;  // present periods only
};

}  // namespace windcast::basis
