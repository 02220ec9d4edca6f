#include "windcast/pipeline.hpp"

#include "windcast/baseline.hpp"
#include "windcast/csv_io.hpp"
#include "windcast/error.hpp"
#include "windcast/evaluation.hpp"
#include "windcast/forecast.hpp"
#include "windcast/irwls.hpp"
#include "windcast/model_io.hpp"
#include "windcast/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>

namespace windcast::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path output_dir(const config::RunConfig& config) {
    const fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

design::ColumnCatalog full_catalog(const design::LagConfig& lags, const basis::BasisConfig& basis,
                                   const design::MaskMatrix& mask) {
    design::ColumnCatalog all;
    for (int e = 0; e < kStateDim; ++e) {
        const auto m = design::mean_catalog(lags, basis, mask, e);
        all.insert(all.end(), m.begin(), m.end());
    }
    for (int e = 0; e < kStateDim; ++e) {
        const auto v = design::variance_catalog(lags, basis, e);
        all.insert(all.end(), v.begin(), v.end());
    }
    return all;
}

void write_trace_csv(const fs::path& path, const FittedModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "iteration,delta";
    for (int e = 1; e <= kStateDim; ++e) {
        out << ",mean_lambda_" << e << ",mean_active_" << e << ",sd_lambda_" << e << ",sd_active_" << e;
    }
    out << '\n';
    for (std::size_t k = 0; k < model.trace.size(); ++k) {
        const IterationRecord& r = model.trace[k];
        out << (k + 1) << ',' << io::format_double(r.delta);
        for (std::size_t e = 0; e < kStateDim; ++e) {
            out << ',' << io::format_double(r.mean_lambda[e]) << ',' << r.mean_active[e] << ','
                << io::format_double(r.variance_lambda[e]) << ',' << r.variance_active[e];
        }
        out << '\n';
    }
}

json acf_json(const irwls::AcfSummary& s) {
    return json{{"band", s.band}, {"fraction_outside", s.fraction_outside}, {"acf", s.values}};
}

json diagnostics_json(const irwls::DiagnosticsReport& d) {
    json eqs = json::array();
    for (std::size_t e = 0; e < kStateDim; ++e) {
        eqs.push_back(json{{"component", kComponentNames[e]},
                           {"standardized", acf_json(d.equations[e].residual)},
                           {"absolute_standardized", acf_json(d.equations[e].absolute)}});
    }
    return json{{"n", d.n}, {"equations", eqs}, {"pressure_speed_ccf_lag", d.ccf_lag},
                {"pressure_speed_ccf", d.pressure_speed_ccf}};
}

Eigen::Index origin_row(const config::RunConfig& config, const StateMatrix& states) {
    if (config.origin.empty()) return states.rows() - 1;
    const std::int64_t step = step_index(io::parse_timestamp(config.origin));
    const std::int64_t row = step - states.first_step;
    if (row < 0 || row >= states.rows()) {
        throw DataError("forecast origin " + config.origin + " lies outside the data");
    }
    return static_cast<Eigen::Index>(row);
}

std::int64_t last_fitted_step(const FittedModel& model) {
    return model.first_step + model.n_rows - 1;
}

/// Point and ensemble forecasts of a fitted model; with `refit`, the model is
/// re-estimated on the data up to each origin.
evaluation::Forecaster model_forecaster(const std::string& name, std::shared_ptr<const FittedModel> model,
                                        const StateMatrix& states, const config::RunConfig& config) {
    struct Cache {
        std::mutex mutex;
        std::map<Eigen::Index, std::shared_ptr<const FittedModel>> models;
    };
    auto cache = std::make_shared<Cache>();
    const bool refit = config.evaluation.refit;
    auto model_at = [=, &states, &config](Eigen::Index origin) -> std::shared_ptr<const FittedModel> {
        if (!refit) return model;
        {
            const std::lock_guard lock(cache->mutex);
            if (auto it = cache->models.find(origin); it != cache->models.end()) return it->second;
        }
        auto options = config.irwls_options();
        options.threads = 1;
        auto fitted = std::make_shared<const FittedModel>(
            irwls::fit(states.slice(0, origin + 1), config.lags, config.basis, config.mask, options));
        const std::lock_guard lock(cache->mutex);
        cache->models.emplace(origin, fitted);
        return fitted;
    };
    evaluation::Forecaster f;
    f.name = name;
    const bool keep_for_ensemble = config.evaluation.ensemble_paths > 0;
    f.point = [=, &states](Eigen::Index origin, int horizon) {
        Eigen::MatrixXd out = forecast::point_forecast(*model_at(origin), states, origin, horizon);
        if (refit && !keep_for_ensemble) {
            const std::lock_guard lock(cache->mutex);
            cache->models.erase(origin);
        }
        return out;
    };
    if (config.evaluation.ensemble_paths > 0) {
        f.ensemble = [=, &states, &config](Eigen::Index origin, int horizon, std::uint64_t seed) {
            auto options = config.bootstrap_options();
            options.n_paths = config.evaluation.ensemble_paths;
            options.seed = seed;
            options.threads = 1;
            options.keep_paths = true;
            auto result = forecast::bootstrap_forecast(*model_at(origin), states, origin, horizon, options);
            if (refit) {
                const std::lock_guard lock(cache->mutex);
                cache->models.erase(origin);
            }
            return std::move(result.paths);
        };
    }
    return f;
}

evaluation::Forecaster baseline_forecaster(baseline::Kind kind, const StateMatrix& states, Eigen::Index split) {
    auto fitted = std::make_shared<const baseline::BaselineModel>(
        baseline::fit_baseline(kind, states.slice(0, split)));
    evaluation::Forecaster f;
    f.name = std::string(baseline::kind_name(kind));
    f.point = [fitted, &states](Eigen::Index origin, int horizon) {
        return baseline::baseline_forecast(*fitted, states, origin, horizon);
    };
    return f;
}

}  // namespace

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const DataError*>(&error) != nullptr) return kExitDataError;
    if (dynamic_cast<const ConvergenceError*>(&error) != nullptr) return kExitConvergenceError;
    if (dynamic_cast<const NumericalError*>(&error) != nullptr) return kExitConvergenceError;
    if (dynamic_cast<const ConfigError*>(&error) != nullptr) return kExitConfigError;
    return 1;
}

StateMatrix load_states(const config::RunConfig& config) {
    if (!config.data.empty()) {
        const fs::path path(config.data);
        if (!fs::exists(path)) throw DataError("data file not found: " + path.string());
        if (io::is_state_file(path)) return io::read_states(path);
        const ObservationFrame frame = interpolate_gaps(io::read_observations(path), config.max_gap_fraction);
        return decompose(frame);
    }
    if (config.synthetic.is_object()) {
        return synthetic::simulate(synthetic::spec_from_json(config.synthetic)).states;
    }
    throw ConfigError("config names neither a data file nor a synthetic spec");
}

Eigen::Index split_row(const config::RunConfig& config, const StateMatrix& states) {
    if (config.split.empty()) return states.rows();
    std::int64_t seconds = 0;
    try {
        seconds = io::parse_timestamp(config.split);
    } catch (const DataError& err) {
        throw ConfigError(std::string("split: ") + err.what());
    }
    const std::int64_t row = step_index(seconds) - states.first_step;
    return static_cast<Eigen::Index>(std::clamp<std::int64_t>(row, 0, states.rows()));
}

int run_fit(const config::RunConfig& config, std::ostream& log) {
    const StateMatrix all = load_states(config);
    const Eigen::Index split = split_row(config, all);
    const StateMatrix states = all.slice(0, split);
    log << "fitting on " << states.rows() << " rows (" << io::format_timestamp(states.step(0) * kStepSeconds)
        << " onwards)\n";
    const FittedModel model = irwls::fit(states, config.lags, config.basis, config.mask, config.irwls_options());
    const fs::path dir = output_dir(config);
    io::save_model(dir / "model.json", model, config::to_json(config));
    design::write_catalog_csv(dir / "catalog.csv", full_catalog(config.lags, config.basis, config.mask));
    write_trace_csv(dir / "trace.csv", model);
    if (!model.any_failed()) {
        const int max_lag = static_cast<int>(std::min<Eigen::Index>(200, model.standardized.rows() / 4));
        io::write_json(dir / "diagnostics.json", diagnostics_json(irwls::residual_diagnostics(model, max_lag)));
    }
    log << "iterations: " << model.iterations << (model.converged ? " (converged)" : " (iteration cap reached)")
        << '\n';
    for (std::size_t e = 0; e < kStateDim; ++e) {
        const EquationModel& eq = model.equations[e];
        log << kComponentNames[e] << ": ";
        if (eq.failed) {
            log << "FAILED: " << eq.failure << '\n';
        } else {
            log << eq.mean_terms.size() << "/" << eq.mean_columns << " mean terms, " << eq.variance_terms.size()
                << "/" << eq.variance_columns << " sd terms\n";
        }
    }
    log << "wrote " << (dir / "model.json").string() << '\n';
    return model.any_failed() ? kExitConvergenceError : kExitOk;
}

int run_forecast(const config::RunConfig& config, const fs::path& model_path, std::ostream& log) {
    const FittedModel model = io::load_model(model_path);
    const StateMatrix states = load_states(config);
    const Eigen::Index origin = origin_row(config, states);
    const forecast::ForecastResult result =
        forecast::bootstrap_forecast(model, states, origin, config.horizon, config.bootstrap_options());
    const fs::path dir = output_dir(config);
    forecast::write_forecast_csv(dir / "forecast.csv", result);
    json meta = forecast::forecast_metadata(result, io::model_hash(model));
    meta["model"] = model_path.string();
    meta["config"] = config::to_json(config);
    io::write_json(dir / "forecast.json", meta);
    log << "forecast from " << io::format_timestamp(result.origin_step * kStepSeconds) << ", H = " << result.horizon
        << ", " << result.n_paths << " paths\n";
    return kExitOk;
}

int run_evaluate(const config::RunConfig& config, const std::vector<fs::path>& model_paths, std::ostream& log) {
    const StateMatrix states = load_states(config);
    const Eigen::Index split = split_row(config, states);
    if (config.split.empty() || split <= 0 || split >= states.rows()) {
        throw ConfigError("evaluation needs a split timestamp strictly inside the data");
    }
    const std::int64_t first_oos_step = states.step(split);

    std::vector<evaluation::Forecaster> models;
    auto check_split = [&](const FittedModel& m, const std::string& name) {
        if (last_fitted_step(m) >= first_oos_step) {
            throw ConfigError("model '" + name + "' was fitted on data from the out-of-sample period (through " +
                              io::format_timestamp(last_fitted_step(m) * kStepSeconds) + ", split at " +
                              config.split + ")");
        }
    };
    for (const auto& path : model_paths) {
        auto m = std::make_shared<const FittedModel>(io::load_model(path));
        const std::string name = path.stem().string();
        check_split(*m, name);
        models.push_back(model_forecaster(name, m, states, config));
    }
    for (const auto& name : config.evaluation.models) {
        if (name == "windcast") {
            if (!model_paths.empty()) continue;
            std::shared_ptr<const FittedModel> m;
            if (!config.evaluation.refit) {
                log << "fitting windcast on " << split << " in-sample rows\n";
                m = std::make_shared<const FittedModel>(
                    irwls::fit(states.slice(0, split), config.lags, config.basis, config.mask, config.irwls_options()));
                if (m->any_failed()) throw ConvergenceError("in-sample fit has a failed equation");
            }
            models.push_back(model_forecaster(name, m, states, config));
        } else {
            models.push_back(baseline_forecaster(baseline::kind_from_name(name), states, split));
        }
    }
    if (models.empty()) throw ConfigError("no forecasters to evaluate");

    evaluation::EvaluationOptions options;
    options.n_origins = config.evaluation.n_origins;
    options.horizon = config.evaluation.horizon;
    options.seed = config.evaluation.seed;
    options.first_origin = split;
    options.pit_bins = config.evaluation.pit_bins;
    options.threads = config.threads;
    std::erase_if(options.pit_horizons, [&](int h) { return h > options.horizon; });
    const evaluation::EvaluationRun run = evaluation::run_evaluation(states, models, options);

    const fs::path dir = output_dir(config);
    evaluation::write_metrics_csv(dir / "metrics.csv", run);
    evaluation::write_dm_csv(dir / "dm.csv", run);
    evaluation::write_pit_csv(dir / "pit.csv", run);
    evaluation::write_yaw_csv(dir / "yaw.csv", run);
    json summary = evaluation::summary_json(run);
    summary["config"] = config::to_json(config);
    io::write_json(dir / "summary.json", summary);
    log << "evaluated " << models.size() << " forecasters over " << run.origins.size() << " origins\n";
    return kExitOk;
}

int run_simulate(const config::RunConfig& config, std::ostream& log) {
    if (!config.synthetic.is_object()) throw ConfigError("simulate needs a synthetic spec");
    const synthetic::SyntheticSpec spec = synthetic::spec_from_json(config.synthetic);
    const synthetic::SimulationResult sim = synthetic::simulate(spec);
    const fs::path dir = output_dir(config);
    io::write_observations(dir / "data.csv", synthetic::to_observations(sim.states));
    io::write_states(dir / "states.csv", sim.states);
    json truth = synthetic::truth_json(spec, sim);
    truth["config"] = config::to_json(config);
    io::write_json(dir / "truth.json", truth);
    log << "simulated " << sim.states.rows() << " rows into " << dir.string() << '\n';
    return kExitOk;
}

int run_inspect(const config::RunConfig& config, const fs::path& model_path, std::ostream& out) {
    json report;
    if (!model_path.empty()) {
        const FittedModel model = io::load_model(model_path);
        report["model"] = model_path.string();
        report["hash"] = io::model_hash(model);
        report["rows"] = model.n_rows;
        report["first"] = io::format_timestamp(model.first_step * kStepSeconds);
        report["iterations"] = model.iterations;
        report["converged"] = model.converged;
        json eqs = json::array();
        for (std::size_t e = 0; e < kStateDim; ++e) {
            const EquationModel& eq = model.equations[e];
            eqs.push_back(json{{"component", kComponentNames[e]},
                               {"mean_columns", eq.mean_columns},
                               {"mean_terms", io::terms_to_json(eq.mean_terms)},
                               {"mean_lambda", eq.mean_lambda},
                               {"sd_columns", eq.variance_columns},
                               {"sd_terms", io::terms_to_json(eq.variance_terms)},
                               {"sd_lambda", eq.variance_lambda},
                               {"failed", eq.failed}});
        }
        report["equations"] = eqs;
        design::write_catalog_csv(output_dir(config) / "catalog.csv",
                                  full_catalog(model.lags, model.basis, model.mask));
    } else {
        json eqs = json::array();
        for (int e = 0; e < kStateDim; ++e) {
            eqs.push_back(json{{"component", kComponentNames[static_cast<std::size_t>(e)]},
                               {"mean_columns", design::mean_column_count(config.lags, config.basis, config.mask, e)},
                               {"sd_columns", design::variance_column_count(config.lags, config.basis)}});
        }
        report["equations"] = eqs;
        report["config"] = config::to_json(config);
        design::write_catalog_csv(output_dir(config) / "catalog.csv",
                                  full_catalog(config.lags, config.basis, config.mask));
    }
    out << report.dump(2) << '\n';
    return kExitOk;
}

}  // namespace windcast::pipeline
