#pragma once

#include "windcast/model.hpp"
#include "windcast/timeseries.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace windcast::synthetic {

enum class Innovation { kGaussian, kStudentT };

/// Ground truth for a simulated TVARX-TARCHX series. Each equation's mean and
/// standard-deviation terms use the same catalog as the estimator. An
/// equation with no standard-deviation terms uses the constant `sigma`.
struct SyntheticSpec {
    Eigen::Index T = 5000;
    Eigen::Index burn_in = 1000;
    std::uint64_t seed = 1;
    std::int64_t first_step = 0;
    design::LagConfig lags;
    basis::BasisConfig basis{6, 0, 144, 52596};
    design::MaskMatrix mask = design::MaskMatrix::standard();
    ThresholdSet thresholds;
    std::array<std::vector<Term>, kStateDim> mean_terms;
    std::array<std::vector<Term>, kStateDim> variance_terms;
    std::array<double, kStateDim> sigma{1, 1, 1, 1, 1, 1};
    std::array<double, kStateDim> initial{};
    Innovation innovation = Innovation::kGaussian;
    double student_df = 5.0;
    double explosion_bound = 1e8;

    void validate() const;

    /// The truth as a model usable by the forecaster (residual pool empty).
    [[nodiscard]] FittedModel truth_model() const;
};

struct SimulationResult {
    StateMatrix states;
    Eigen::MatrixXd sigma;       // T x 6 true conditional standard deviations
    Eigen::MatrixXd shocks;      // T x 6 innovations sigma * eta
    Eigen::MatrixXd standardized;  // T x 6 eta
};

[[nodiscard]] SimulationResult simulate(const SyntheticSpec& spec);

/// Term for the catalog column with the given key.
[[nodiscard]] Term term(const design::ColumnCatalog& catalog, std::string_view key, double coefficient);

/// Spectral radius of the companion matrix built from the plain (non-periodic,
/// non-threshold) AR coefficients.
[[nodiscard]] double plain_ar_spectral_radius(const SyntheticSpec& spec);

[[nodiscard]] SyntheticSpec spec_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json spec_to_json(const SyntheticSpec& spec);

/// Coefficients plus realized moments of a simulation, for recovery checks.
[[nodiscard]] nlohmann::json truth_json(const SyntheticSpec& spec, const SimulationResult& result);

/// Observation-space view of simulated states: direction and speed from the
/// wind components, pressure from the pressure equation.
[[nodiscard]] ObservationFrame to_observations(const StateMatrix& states);

}  // namespace windcast::synthetic
