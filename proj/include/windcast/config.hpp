#pragma once

#include "windcast/basis.hpp"
#include "windcast/design.hpp"
#include "windcast/forecast.hpp"
#include "windcast/irwls.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace windcast::config {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "WINDCAST_OUT_DIR";

struct EvaluationSettings {
    int n_origins = 1000;
    int horizon = 144;
    std::uint64_t seed = 1;
    /// Forecasters to score: "windcast" (the fitted model) and the baselines
    /// "persistence", "ar", "var".
    std::vector<std::string> models = {"windcast", "persistence", "ar", "var"};
    /// Paths per origin for PIT and coverage; 0 skips them.
    int ensemble_paths = 200;
    /// Re-estimate the model on the data available at every origin.
    bool refit = false;
    int pit_bins = 20;
};

/// Everything a command needs. Serialized with to_json, it reproduces the run.
struct RunConfig {
    std::string data;            // observation or state CSV
    nlohmann::json synthetic;    // inline synthetic spec, used when `data` is empty
    std::string split;           // first out-of-sample timestamp; empty: no split
    double max_gap_fraction = 0.05;
    design::LagConfig lags;
    basis::BasisConfig basis{6, 0, 144, 52596};
    design::MaskMatrix mask = design::MaskMatrix::standard();
    int n_lambda = 100;
    double lambda_min_ratio = 1e-4;
    double lasso_tolerance = 1e-7;
    int max_sweeps = 100000;
    int aic_patience = irwls::kAicPatience;
    double irwls_tolerance = 1e-3;
    int max_iterations = 20;
    bool freeze_lambda = false;
    int n_paths = 1000;
    std::uint64_t seed = 1;
    std::vector<double> levels = forecast::default_levels();
    bool joint_rows = true;
    bool clip_speed = true;
    bool clip_pressure = false;
    std::string origin;  // forecast origin timestamp; empty: last row
    int horizon = 144;
    EvaluationSettings evaluation;
    std::string output_dir;
    unsigned threads = 0;

    /// Desk-scale defaults: J1 = 1..12, J2 = {1, 2}, alphas {0.1, 0.5, 0.9},
    /// P = Q = 1..6.
    [[nodiscard]] static design::LagConfig default_lags();

    void validate() const;

    [[nodiscard]] irwls::IrwlsOptions irwls_options() const;
    [[nodiscard]] forecast::BootstrapOptions bootstrap_options() const;
};

[[nodiscard]] nlohmann::json to_json(const RunConfig& config);

/// Unknown keys are rejected. "lags" may be the string "full" for the
/// full-size lag configuration.
[[nodiscard]] RunConfig from_json(const nlohmann::json& j);

/// Applies "a.b.c=value" to a config document. The value is parsed as JSON
/// when possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Reads the config file (if any), applies overrides in order, and fills the
/// output directory from the environment when unset.
[[nodiscard]] RunConfig load(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides);

}  // namespace windcast::config
