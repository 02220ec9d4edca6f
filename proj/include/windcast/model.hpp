#pragma once

#include "windcast/basis.hpp"
#include "windcast/design.hpp"
#include "windcast/timeseries.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace windcast {

/// One nonzero coefficient and the regressor it multiplies.
struct Term {
    design::ColumnSpec column;
    double coefficient = 0.0;

    friend bool operator==(const Term&, const Term&) = default;
};

/// Sparse mean and standard-deviation equations for one state component.
struct EquationModel {
    std::vector<Term> mean_terms;
    std::vector<Term> variance_terms;
    std::size_t mean_columns = 0;
    std::size_t variance_columns = 0;
    double mean_lambda = 0.0;
    double variance_lambda = 0.0;
    double sigma_floor = 0.0;
    bool failed = false;
    std::string failure;
};

struct IterationRecord {
    double delta = 0.0;  // RMS change of the fitted standard deviations
    std::array<double, kStateDim> mean_lambda{};
    std::array<double, kStateDim> variance_lambda{};
    std::array<int, kStateDim> mean_active{};
    std::array<int, kStateDim> variance_active{};
    std::array<bool, kStateDim> mean_converged{};
};

struct FittedModel {
    design::LagConfig lags;
    basis::BasisConfig basis;
    design::MaskMatrix mask;
    ThresholdSet thresholds;
    std::array<EquationModel, kStateDim> equations;

    std::int64_t first_step = 0;     // time index of in-sample row 0
    Eigen::Index n_rows = 0;         // in-sample rows
    Eigen::Index mean_start = 0;     // first row with a mean residual
    Eigen::Index variance_start = 0; // first row with a fitted sigma
    Eigen::MatrixXd residuals;       // T x 6, NaN before mean_start
    Eigen::MatrixXd sigma;           // T x 6, NaN before variance_start
    Eigen::MatrixXd standardized;    // rows variance_start..T-1 of residuals / sigma

    std::vector<IterationRecord> trace;
    int iterations = 0;
    bool converged = false;

    /// Optional per-iteration audit: weights used and sigma produced, rows
    /// variance_start..T-1.
    std::vector<Eigen::MatrixXd> weight_history;
    std::vector<Eigen::MatrixXd> sigma_history;

    [[nodiscard]] bool any_failed() const {
        for (const auto& eq : equations) {
            if (eq.failed) return true;
        }
        return false;
    }
};

/// Sum of coefficient * regressor over `terms`. `lagged(source, lag)` returns
/// the lagged state (mean terms) or lagged residual (variance terms);
/// `periodic` holds the periodic regressors at the target time.
template <class LaggedFn>
[[nodiscard]] double evaluate_terms(const std::vector<Term>& terms, std::span<const double> periodic,
                                    const ThresholdSet& thresholds, LaggedFn&& lagged) {
    double sum = 0.0;
    for (const Term& term : terms) {
        const design::ColumnSpec& c = term.column;
        double base = 1.0;
        if (c.source >= 0) {
            const double threshold =
                c.alpha_index >= 0 ? thresholds.value(c.source, static_cast<std::size_t>(c.alpha_index)) : 0.0;
            base = design::plain_value(c, lagged(c.source, c.lag), threshold);
        }
        if (c.periodic >= 0) {
            base = base * periodic[static_cast<std::size_t>(c.periodic)];
        }
        sum += term.coefficient * base;
    }
    return sum;
}

}  // namespace windcast
