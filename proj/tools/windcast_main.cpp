#include "windcast/config.hpp"
#include "windcast/error.hpp"
#include "windcast/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string data;
    std::string output;
    std::string split;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("-c,--config", flags.config_file, "JSON config file");
    cmd->add_option("--set", flags.overrides, "Override a config key, e.g. --set bootstrap.n_paths=500")
        ->take_all();
    cmd->add_option("--data", flags.data, "Observation or state CSV (config key: data)");
    cmd->add_option("-o,--out", flags.output, "Output directory (config key: output_dir)");
    cmd->add_option("--split", flags.split, "First out-of-sample timestamp (config key: split)");
    cmd->add_option("--seed", flags.seed, "Bootstrap seed (config key: bootstrap.seed)");
    cmd->add_option("--threads", flags.threads, "Worker threads, 0 = hardware (config key: threads)");
}

windcast::config::RunConfig resolve(const CommonFlags& flags, std::vector<std::string> extra) {
    std::vector<std::string> overrides = flags.overrides;
    auto quoted = [](const std::string& s) { return nlohmann::json(s).dump(); };
    if (!flags.data.empty()) overrides.push_back("data=" + quoted(flags.data));
    if (!flags.output.empty()) overrides.push_back("output_dir=" + quoted(flags.output));
    if (!flags.split.empty()) overrides.push_back("split=" + quoted(flags.split));
    if (flags.seed) overrides.push_back("bootstrap.seed=" + std::to_string(*flags.seed));
    if (flags.threads) overrides.push_back("threads=" + std::to_string(*flags.threads));
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    std::optional<std::filesystem::path> file;
    if (!flags.config_file.empty()) file = flags.config_file;
    return windcast::config::load(file, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wind speed, wind direction and air pressure forecasting"};
    app.require_subcommand(1);

    CommonFlags fit_flags;
    CLI::App* fit = app.add_subcommand("fit", "Estimate the model on the in-sample split");
    add_common(fit, fit_flags);

    CommonFlags forecast_flags;
    std::string forecast_model;
    std::string origin;
    std::optional<int> horizon;
    std::optional<int> n_paths;
    CLI::App* forecast = app.add_subcommand("forecast", "Point and bootstrap forecasts from one origin");
    add_common(forecast, forecast_flags);
    forecast->add_option("-m,--model", forecast_model, "Fitted model JSON")->required();
    forecast->add_option("--origin", origin, "Origin timestamp (config key: forecast.origin)");
    forecast->add_option("--horizon", horizon, "Steps ahead (config key: forecast.horizon)");
    forecast->add_option("--paths", n_paths, "Bootstrap paths, 0 = point only (config key: bootstrap.n_paths)");

    CommonFlags evaluate_flags;
    std::vector<std::string> evaluate_models;
    std::optional<int> n_origins;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score forecasters on the out-of-sample split");
    add_common(evaluate, evaluate_flags);
    evaluate->add_option("-m,--model", evaluate_models, "Fitted model JSON (repeatable)");
    evaluate->add_option("-n,--origins", n_origins, "Number of origins (config key: evaluation.n_origins)");

    CommonFlags simulate_flags;
    CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic series from the config's spec");
    add_common(simulate, simulate_flags);

    CommonFlags inspect_flags;
    std::string inspect_model;
    CLI::App* inspect = app.add_subcommand("inspect", "Dump a model or the configured catalog");
    add_common(inspect, inspect_flags);
    inspect->add_option("-m,--model", inspect_model, "Fitted model JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : windcast::pipeline::kExitConfigError;
    }

    try {
        if (fit->parsed()) {
            return windcast::pipeline::run_fit(resolve(fit_flags, {}), std::cerr);
        }
        if (forecast->parsed()) {
            std::vector<std::string> extra;
            if (!origin.empty()) extra.push_back("forecast.origin=" + nlohmann::json(origin).dump());
            if (horizon) extra.push_back("forecast.horizon=" + std::to_string(*horizon));
            if (n_paths) extra.push_back("bootstrap.n_paths=" + std::to_string(*n_paths));
            return windcast::pipeline::run_forecast(resolve(forecast_flags, extra), forecast_model, std::cerr);
        }
        if (evaluate->parsed()) {
            std::vector<std::string> extra;
            if (n_origins) extra.push_back("evaluation.n_origins=" + std::to_string(*n_origins));
            std::vector<std::filesystem::path> paths(evaluate_models.begin(), evaluate_models.end());
            return windcast::pipeline::run_evaluate(resolve(evaluate_flags, extra), paths, std::cerr);
        }
        if (simulate->parsed()) {
            return windcast::pipeline::run_simulate(resolve(simulate_flags, {}), std::cerr);
        }
        return windcast::pipeline::run_inspect(resolve(inspect_flags, {}), inspect_model, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return windcast::pipeline::exit_code_for(e);
    }
}
