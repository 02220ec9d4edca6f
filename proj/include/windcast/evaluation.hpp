#pragma once

#include "windcast/timeseries.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace windcast::evaluation {

struct ErrorTable {
    std::vector<double> rmse;
    std::vector<double> mae;
    std::vector<int> count;     // finite errors per horizon
    std::vector<int> excluded;  // NaN errors (undefined directions)
};

/// Per-horizon RMSE and MAE of an N x H error matrix; NaN entries are
/// excluded and counted.
[[nodiscard]] ErrorTable rmse_mae(const Eigen::MatrixXd& errors);

/// Smallest angle between two directions in degrees, in [0, 180].
[[nodiscard]] double direction_error(double forecast_deg, double actual_deg);

/// Mean absolute error of angle per horizon (column).
[[nodiscard]] ErrorTable maeoa(const Eigen::MatrixXd& forecast_deg, const Eigen::MatrixXd& actual_deg);

struct DmResult {
    double statistic = 0.0;  // positive: model A has the larger loss
    double p_value = 1.0;    // two-sided
    double mean_difference = 0.0;
    double long_run_variance = 0.0;
    bool degenerate = false;
};

/// Diebold-Mariano test of equal expected loss. Long-run variance by a
/// Bartlett kernel with h - 1 lags; requires at least 30 pairs.
[[nodiscard]] DmResult diebold_mariano(std::span<const double> loss_a, std::span<const double> loss_b, int h);

/// Randomized PIT of `realization` within `ensemble` (sorted ascending):
/// (rank + V) / (n + 1) with the rank drawn uniformly among tied positions.
[[nodiscard]] double pit_value(std::span<const double> sorted_ensemble, double realization, double u_rank,
                               double u_offset);

struct PitHistogram {
    std::vector<int> counts;
    double max_deviation = 0.0;  // max |count/N - 1/bins|
    double chi_square = 0.0;
    double p_value = 1.0;
};

[[nodiscard]] PitHistogram pit_histogram(std::span<const double> pit_values, int bins);

/// PIT values for ensembles (one per realization) with ties randomized by `seed`.
[[nodiscard]] std::vector<double> pit_values(const std::vector<std::vector<double>>& ensembles,
                                             std::span<const double> realizations, std::uint64_t seed);

struct YawLoss {
    double raw = 1.0;    // cos^3 of the error
    double power = 1.0;  // raw floored at 0
    bool beyond_quarter_turn = false;
};

inline constexpr double kYawReferenceDeg = 30.0;

[[nodiscard]] YawLoss yaw_loss(double direction_error_deg);

enum Variable : int {
    kPressure = 0,
    kPressureMagnitude,
    kSpeed,
    kSpeedMagnitude,
    kWindDirection,
    kPressureDirection,
};
inline constexpr int kVariableCount = 6;
[[nodiscard]] std::string_view variable_name(int v);
[[nodiscard]] bool is_circular(int v);

/// Observation-space read-out of a state row for each evaluated variable.
/// Directions are NaN when undefined.
[[nodiscard]] std::array<double, kVariableCount> variables_of(const Eigen::Ref<const Eigen::RowVectorXd>& state);

struct Forecaster {
    std::string name;
    std::function<Eigen::MatrixXd(Eigen::Index origin, int horizon)> point;
    /// Optional sample paths (each H x 6) for PIT and band coverage.
    std::function<std::vector<Eigen::MatrixXd>(Eigen::Index origin, int horizon, std::uint64_t seed)> ensemble;
};

struct EvaluationOptions {
    int n_origins = 1000;
    int horizon = 144;
    std::uint64_t seed = 1;
    Eigen::Index first_origin = 0;  // inclusive
    Eigen::Index last_origin = -1;  // inclusive; -1: T - 1 - horizon
    int pit_bins = 20;
    std::vector<int> pit_horizons = {1, 36, 144};
    double coverage_level = 0.95;
    unsigned threads = 0;
};

struct PitSummary {
    int horizon = 0;
    int variable = 0;
    std::vector<double> values;
    PitHistogram histogram;
    double coverage = 0.0;  // fraction of realizations inside the central band
};

struct ModelScores {
    std::string name;
    std::array<Eigen::MatrixXd, kVariableCount> errors;  // N x H; signed, or angular for directions
    std::array<ErrorTable, kVariableCount> tables;
    std::vector<double> yaw_power;  // mean retained power per horizon
    std::vector<PitSummary> pit;
};

struct DmEntry {
    std::string model_a;
    std::string model_b;
    int variable = 0;
    int horizon = 0;
    DmResult squared;
    DmResult absolute;
};

struct EvaluationRun {
    std::vector<Eigen::Index> origins;  // sorted
    int horizon = 0;
    std::vector<ModelScores> models;
    std::vector<DmEntry> dm;
};

/// Draws origins without replacement from [first_origin, last_origin].
[[nodiscard]] std::vector<Eigen::Index> draw_origins(Eigen::Index first, Eigen::Index last, int n, std::uint64_t seed);

[[nodiscard]] EvaluationRun run_evaluation(const StateMatrix& states, const std::vector<Forecaster>& models,
                                           const EvaluationOptions& options);

void write_metrics_csv(const std::filesystem::path& path, const EvaluationRun& run);
void write_dm_csv(const std::filesystem::path& path, const EvaluationRun& run);
void write_pit_csv(const std::filesystem::path& path, const EvaluationRun& run);
void write_yaw_csv(const std::filesystem::path& path, const EvaluationRun& run);
[[nodiscard]] nlohmann::json summary_json(const EvaluationRun& run);

}  // namespace windcast::evaluation
