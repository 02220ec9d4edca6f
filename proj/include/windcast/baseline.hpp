#pragma once

#include "windcast/design.hpp"
#include "windcast/timeseries.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace windcast::baseline {

enum class Kind { kPersistence, kAr, kVar };

[[nodiscard]] std::string_view kind_name(Kind kind);
[[nodiscard]] Kind kind_from_name(std::string_view name);

/// Linear benchmark on demeaned states. AR models are stored as diagonal
/// lag matrices so AR and VAR share one forecasting recursion.
struct BaselineModel {
    Kind kind = Kind::kPersistence;
    int order = 0;
    Eigen::VectorXd means = Eigen::VectorXd::Zero(kStateDim);
    std::vector<Eigen::MatrixXd> lag_matrices;  // A_1..A_order, 6 x 6
    std::array<int, kStateDim> component_orders{};
    Eigen::MatrixXd innovation_covariance = Eigen::MatrixXd::Zero(kStateDim, kStateDim);
    std::vector<double> aic;  // by order 0..p_max (VAR) or unused (AR)
    bool ridge_applied = false;
    double spectral_radius = 0.0;
    bool stable = true;
    std::vector<std::string> warnings;
};

struct BaselineOptions {
    int p_max = -1;                   // -1: 40 for AR, 10 for VAR
    std::optional<int> fixed_order;   // skip AIC and use this order
    std::optional<design::MaskMatrix> mask;  // VAR: allowed sources per equation
};

/// Biased (divide by n) autocovariances of a demeaned series, lags 0..max_lag.
[[nodiscard]] std::vector<double> autocovariances(std::span<const double> x, int max_lag);

struct LevinsonResult {
    std::vector<double> coefficients;
    double innovation_variance = 0.0;
};

/// Solves the order-p Yule-Walker equations for autocovariances gamma.
[[nodiscard]] LevinsonResult levinson_durbin(std::span<const double> gamma, int order);

[[nodiscard]] BaselineModel fit_baseline(Kind kind, const StateMatrix& states, const BaselineOptions& options = {});

/// Forecasts from state row `origin` (inclusive), H x 6.
[[nodiscard]] Eigen::MatrixXd baseline_forecast(const BaselineModel& model, const StateMatrix& states,
                                                Eigen::Index origin, int horizon);

/// Largest eigenvalue modulus of the companion matrix of the lag matrices.
[[nodiscard]] double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& lag_matrices);

}  // namespace windcast::baseline
