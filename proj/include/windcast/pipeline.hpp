#pragma once

#include "windcast/config.hpp"
#include "windcast/model.hpp"
#include "windcast/timeseries.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace windcast::pipeline {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitConvergenceError = 3;
inline constexpr int kExitConfigError = 4;

/// Maps an exception from a command onto its exit code.
[[nodiscard]] int exit_code_for(const std::exception& error);

/// The configured series: the data file (observations are gap-filled and
/// decomposed, state files are read as-is) or an in-memory simulation.
[[nodiscard]] StateMatrix load_states(const config::RunConfig& config);

/// Row index of the first out-of-sample observation; rows() when no split.
[[nodiscard]] Eigen::Index split_row(const config::RunConfig& config, const StateMatrix& states);

/// Writes model.json, catalog CSVs, diagnostics.json and trace.csv.
/// Returns kExitConvergenceError when an equation failed.
int run_fit(const config::RunConfig& config, std::ostream& log);

/// Writes forecast.csv and forecast.json for the configured origin.
int run_forecast(const config::RunConfig& config, const std::filesystem::path& model_path, std::ostream& log);

/// Scores the configured forecasters (plus extra model files) on the
/// out-of-sample split; writes metrics, DM, PIT and yaw-loss tables.
int run_evaluate(const config::RunConfig& config, const std::vector<std::filesystem::path>& model_paths,
                 std::ostream& log);

/// Writes data.csv (observations), states.csv and truth.json.
int run_simulate(const config::RunConfig& config, std::ostream& log);

/// Prints a model summary (with a model file) or the catalog sizes of the
/// configuration (without); writes catalog CSVs to the output directory.
int run_inspect(const config::RunConfig& config, const std::filesystem::path& model_path, std::ostream& out);

}  // namespace windcast::pipeline
