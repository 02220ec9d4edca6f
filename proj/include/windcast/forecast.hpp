#pragma once

#include "windcast/model.hpp"
#include "windcast/timeseries.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace windcast::forecast {

/// Columns of band and median matrices: the six state components, then the
/// Cartesian magnitudes W* and P*.
inline constexpr int kBandColumns = kStateDim + 2;
inline constexpr int kSpeedMagnitude = kStateDim;
inline constexpr int kPressureMagnitude = kStateDim + 1;

[[nodiscard]] std::vector<double> default_levels();

struct BootstrapOptions {
    int n_paths = 1000;
    std::uint64_t seed = 1;
    std::vector<double> levels = default_levels();
    /// Draw all six standardized residuals from the same pool row.
    bool joint_rows = true;
    bool clip_speed = true;
    bool clip_pressure = false;
    unsigned threads = 0;
    bool keep_paths = false;
};

/// Direction (degrees, NaN when undefined) and magnitude read-outs of state
/// forecasts, one entry per horizon.
struct Reconstruction {
    std::vector<double> wind_direction;
    std::vector<double> pressure_direction;
    std::vector<double> speed;               // from the speed equation
    std::vector<double> speed_magnitude;     // sqrt(w_s^2 + w_c^2)
    std::vector<double> pressure;            // from the pressure equation
    std::vector<double> pressure_magnitude;  // sqrt(p_s^2 + p_c^2)
    std::vector<std::uint8_t> wind_direction_undefined;
    std::vector<std::uint8_t> pressure_direction_undefined;
};

[[nodiscard]] Reconstruction reconstruct(const Eigen::MatrixXd& states);

struct ForecastResult {
    std::int64_t origin_step = 0;
    int horizon = 0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd point;  // H x 6 deterministic rollout
    Reconstruction reconstructed;
    std::vector<double> levels;
    Eigen::MatrixXd median;              // H x kBandColumns, empty without paths
    std::vector<Eigen::MatrixXd> bands;  // per level, H x kBandColumns
    std::vector<Eigen::MatrixXd> paths;  // n_paths x (H x 6) when kept
};

/// Deterministic rollout from state row `origin` (inclusive) of `states`:
/// shocks at their conditional mean zero, threshold terms evaluated on the
/// forecast values.
[[nodiscard]] Eigen::MatrixXd point_forecast(const FittedModel& model, const StateMatrix& states,
                                             Eigen::Index origin, int horizon);
[[nodiscard]] Eigen::MatrixXd point_forecast(const FittedModel& model, const StateMatrix& history, int horizon);

/// Residual bootstrap: standardized residuals are resampled from the model's
/// pool, scaled by the fitted standard-deviation recursion along each path.
[[nodiscard]] ForecastResult bootstrap_forecast(const FittedModel& model, const StateMatrix& states,
                                                Eigen::Index origin, int horizon,
                                                const BootstrapOptions& options);

/// In-sample mean residuals for state rows [begin, end).
[[nodiscard]] Eigen::MatrixXd mean_residuals(const FittedModel& model, const StateMatrix& states,
                                             Eigen::Index begin, Eigen::Index end);

/// CSV: horizon,component,point[,median,q<level>...]. Components are the six
/// states, speed_magnitude, pressure_magnitude, wind_direction and
/// pressure_direction.
void write_forecast_csv(const std::filesystem::path& path, const ForecastResult& result);
[[nodiscard]] nlohmann::json forecast_metadata(const ForecastResult& result, const std::string& model_hash);

}  // namespace windcast::forecast
