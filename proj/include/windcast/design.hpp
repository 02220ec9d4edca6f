#pragma once

#include "windcast/basis.hpp"
#include "windcast/timeseries.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace windcast::design {

/// Lag sets of the mean (J1 autoregressive, J2 threshold) and variance
/// (P positive-shock, Q negative-shock) models, plus threshold levels.
struct LagConfig {
    std::vector<int> j1;
    std::vector<int> j2;
    std::vector<int> p;
    std::vector<int> q;
    std::vector<double> alphas;

    /// Full-size configuration: J1 = 1..500 and 576, 720, 864, 1008;
    /// J2 = 1, 2, 4, 9, 18, 36, 72, 144; P = Q = 1..40 and 140..150.
    [[nodiscard]] static LagConfig full_scale();

    void validate() const;
    [[nodiscard]] int max_mean_lag() const;
    [[nodiscard]] int max_variance_lag() const;

    friend bool operator==(const LagConfig&, const LagConfig&) = default;
};

/// Which source components may enter each equation. The default keeps wind
/// components out of the three pressure equations.
struct MaskMatrix {
    std::array<std::array<std::uint8_t, kStateDim>, kStateDim> allowed{};

    [[nodiscard]] static MaskMatrix standard();
    [[nodiscard]] static MaskMatrix full();

    [[nodiscard]] std::vector<int> sources(int equation) const;

    friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;
};

enum class Family {
    kInterceptPeriodic,
    kAr,
    kArPeriodic,
    kThreshold,
    kThresholdPeriodic,
    kArchPos,
    kArchNeg,
    kArchPosPeriodic,
    kArchNegPeriodic,
    kVarianceInterceptPeriodic,
};

[[nodiscard]] std::string_view family_name(Family family);
[[nodiscard]] Family family_from_name(std::string_view name);

/// Metadata of one regressor. Equation and source are 0-based here and
/// printed 1-based. `periodic` indexes PeriodicRegressors columns, -1 for a
/// plain (time-constant) column.
struct ColumnSpec {
    Family family = Family::kInterceptPeriodic;
    int equation = 0;
    int source = -1;
    int lag = 0;
    int periodic = -1;
    int i1 = 0;  // 1-based basis index pair, 0 when periodic == -1
    int i2 = 0;
    int alpha_index = -1;
    double alpha = 0.0;

    /// Stable textual key used for serialization, e.g. "ar|m=4|src=1|lag=2|b=3,1".
    [[nodiscard]] std::string key() const;

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

using ColumnCatalog = std::vector<ColumnSpec>;

[[nodiscard]] ColumnCatalog mean_catalog(const LagConfig& lags, const basis::BasisConfig& basis,
                                         const MaskMatrix& mask, int equation);
[[nodiscard]] ColumnCatalog variance_catalog(const LagConfig& lags, const basis::BasisConfig& basis,
                                             int equation);

/// Closed-form widths: expansion * (1 + |J1| |src| + |J2| |alphas| |src|) and
/// expansion * (1 + |P| + |Q|), with expansion = 1 + periodic columns.
[[nodiscard]] std::size_t mean_column_count(const LagConfig& lags, const basis::BasisConfig& basis,
                                            const MaskMatrix& mask, int equation);
[[nodiscard]] std::size_t variance_column_count(const LagConfig& lags,
                                                const basis::BasisConfig& basis);

/// A regression problem: row r of X and y corresponds to state row first_row + r.
struct DesignProblem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    ColumnCatalog catalog;
    Eigen::Index first_row = 0;
};

/// Regressor value before the periodic factor: 1 for intercepts, the lagged
/// value for AR columns, max(lagged, c_alpha) for thresholds, and the
/// sign-split shock for ARCH columns (positive part for arch-pos, negated
/// non-positive part for arch-neg).
[[nodiscard]] double plain_value(const ColumnSpec& column, double lagged, double threshold);

/// Mean-model design for `equation` on state rows [first_row, T). The default
/// first_row (-1) is the largest mean lag.
[[nodiscard]] DesignProblem build_mean_design(const StateMatrix& states, const ThresholdSet& thresholds,
                                              const LagConfig& lags, const basis::BasisConfig& basis,
                                              const MaskMatrix& mask, int equation,
                                              Eigen::Index first_row = -1);

/// Variance-model design on state rows [first_row, T). `residuals` is T x 6,
/// aligned with the state rows that produced it; rows referenced through the
/// P and Q lags must be finite. Response is |residual|.
[[nodiscard]] DesignProblem build_variance_design(const Eigen::MatrixXd& residuals,
                                                  std::int64_t first_step, const LagConfig& lags,
                                                  const basis::BasisConfig& basis, int equation,
                                                  Eigen::Index first_row);

/// Audit dump: family,equation,source,lag,i1,i2,alpha (1-based indices, empty
/// when not applicable).
void write_catalog_csv(const std::filesystem::path& path, const ColumnCatalog& catalog);

}  // namespace windcast::design
