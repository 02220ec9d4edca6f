#include "windcast/config.hpp"

#include "windcast/error.hpp"
#include "windcast/model_io.hpp"

#include <cstdlib>
#include <numeric>
#include <set>

namespace windcast::config {

using nlohmann::json;

namespace {

std::vector<int> range(int lo, int hi) {
    std::vector<int> v(static_cast<std::size_t>(hi - lo + 1));
    std::iota(v.begin(), v.end(), lo);
    return v;
}

template <class T>
void read(const json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
    }
}

}  // namespace

design::LagConfig RunConfig::default_lags() {
    design::LagConfig lags;
    lags.j1 = range(1, 12);
    lags.j2 = {1, 2};
    lags.p = range(1, 6);
    lags.q = range(1, 6);
    lags.alphas = {0.1, 0.5, 0.9};
    return lags;
}

void RunConfig::validate() const {
    lags.validate();
    basis.validate();
    if (n_lambda < 1) throw ConfigError("n_lambda must be at least 1");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) throw ConfigError("lambda_min_ratio must lie in (0, 1)");
    if (!(lasso_tolerance > 0.0)) throw ConfigError("lasso tolerance must be positive");
    if (max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
    if (aic_patience < 0) throw ConfigError("aic_patience must be nonnegative (0 runs the whole grid)");
    if (!(irwls_tolerance > 0.0)) throw ConfigError("irwls tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
    if (n_paths < 0) throw ConfigError("n_paths must be nonnegative");
    if (n_paths > 0 && n_paths < 100) throw ConfigError("band output needs at least 100 bootstrap paths");
    for (const double l : levels) {
        if (!(l > 0.0 && l < 1.0)) throw ConfigError("quantile levels must lie in (0, 1)");
    }
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (!(max_gap_fraction >= 0.0 && max_gap_fraction <= 1.0)) throw ConfigError("max_gap_fraction must lie in [0, 1]");
    if (evaluation.horizon < 1) throw ConfigError("evaluation horizon must be at least 1");
    if (evaluation.n_origins < 1) throw ConfigError("evaluation needs at least one origin");
    if (evaluation.ensemble_paths < 0) throw ConfigError("ensemble_paths must be nonnegative");
    if (evaluation.pit_bins < 2) throw ConfigError("pit_bins must be at least 2");
    for (const auto& m : evaluation.models) {
        if (m != "windcast" && m != "persistence" && m != "ar" && m != "var") {
            throw ConfigError("unknown evaluation model '" + m + "'");
        }
    }
}

irwls::IrwlsOptions RunConfig::irwls_options() const {
    auto o = irwls::IrwlsOptions::defaults();
    o.tolerance = irwls_tolerance;
    o.max_iterations = max_iterations;
    o.freeze_lambda = freeze_lambda;
    o.threads = threads;
    for (auto* l : {&o.mean_lasso, &o.variance_lasso}) {
        l->n_lambda = n_lambda;
        l->lambda_min_ratio = lambda_min_ratio;
        l->tolerance = lasso_tolerance;
        l->max_sweeps = max_sweeps;
        l->aic_patience = aic_patience;
    }
    return o;
}

forecast::BootstrapOptions RunConfig::bootstrap_options() const {
    forecast::BootstrapOptions o;
    o.n_paths = n_paths;
    o.seed = seed;
    o.levels = levels;
    o.joint_rows = joint_rows;
    o.clip_speed = clip_speed;
    o.clip_pressure = clip_pressure;
    o.threads = threads;
    return o;
}

json to_json(const RunConfig& c) {
    json j;
    j["data"] = c.data;
    j["synthetic"] = c.synthetic;
    j["split"] = c.split;
    j["max_gap_fraction"] = c.max_gap_fraction;
    j["lags"] = io::lag_config_to_json(c.lags);
    j["basis"] = io::basis_config_to_json(c.basis);
    j["mask"] = io::mask_to_json(c.mask);
    j["lasso"] = json{{"n_lambda", c.n_lambda},
                      {"lambda_min_ratio", c.lambda_min_ratio},
                      {"tolerance", c.lasso_tolerance},
                      {"max_sweeps", c.max_sweeps},
                      {"aic_patience", c.aic_patience}};
    j["irwls"] = json{{"tolerance", c.irwls_tolerance},
                      {"max_iterations", c.max_iterations},
                      {"freeze_lambda", c.freeze_lambda}};
    j["bootstrap"] = json{{"n_paths", c.n_paths},         {"seed", c.seed},
                          {"levels", c.levels},           {"joint_rows", c.joint_rows},
                          {"clip_speed", c.clip_speed},   {"clip_pressure", c.clip_pressure}};
    j["forecast"] = json{{"origin", c.origin}, {"horizon", c.horizon}};
    const auto& e = c.evaluation;
    j["evaluation"] = json{{"n_origins", e.n_origins}, {"horizon", e.horizon},
                           {"seed", e.seed},           {"models", e.models},
                           {"ensemble_paths", e.ensemble_paths}, {"refit", e.refit},
                           {"pit_bins", e.pit_bins}};
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j;
}

RunConfig from_json(const json& j) {
    RunConfig c;
    c.lags = RunConfig::default_lags();
    try {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        reject_unknown(j,
                       {"data", "synthetic", "split", "max_gap_fraction", "lags", "basis", "mask", "lasso", "irwls",
                        "bootstrap", "forecast", "evaluation", "output_dir", "threads"},
                       "");
        read(j, "data", c.data);
        if (j.contains("synthetic")) c.synthetic = j.at("synthetic");
        read(j, "split", c.split);
        read(j, "max_gap_fraction", c.max_gap_fraction);
        if (j.contains("lags")) {
            const auto& l = j.at("lags");
            if (l.is_string()) {
                if (l.get<std::string>() != "full") throw ConfigError("lags must be an object or \"full\"");
                c.lags = design::LagConfig::full_scale();
            } else {
                reject_unknown(l, {"j1", "j2", "p", "q", "alphas"}, "lags.");
                read(l, "j1", c.lags.j1);
                read(l, "j2", c.lags.j2);
                read(l, "p", c.lags.p);
                read(l, "q", c.lags.q);
                read(l, "alphas", c.lags.alphas);
            }
        }
        if (j.contains("basis")) {
            reject_unknown(j.at("basis"), {"k1", "k2", "s1", "s2"}, "basis.");
            const auto& b = j.at("basis");
            read(b, "k1", c.basis.k1);
            read(b, "k2", c.basis.k2);
            read(b, "s1", c.basis.s1);
            read(b, "s2", c.basis.s2);
        }
        if (j.contains("mask")) c.mask = io::mask_from_json(j.at("mask"));
        if (j.contains("lasso")) {
            const auto& l = j.at("lasso");
            reject_unknown(l, {"n_lambda", "lambda_min_ratio", "tolerance", "max_sweeps", "aic_patience"}, "lasso.");
            read(l, "n_lambda", c.n_lambda);
            read(l, "lambda_min_ratio", c.lambda_min_ratio);
            read(l, "tolerance", c.lasso_tolerance);
            read(l, "max_sweeps", c.max_sweeps);
            read(l, "aic_patience", c.aic_patience);
        }
        if (j.contains("irwls")) {
            const auto& l = j.at("irwls");
            reject_unknown(l, {"tolerance", "max_iterations", "freeze_lambda"}, "irwls.");
            read(l, "tolerance", c.irwls_tolerance);
            read(l, "max_iterations", c.max_iterations);
            read(l, "freeze_lambda", c.freeze_lambda);
        }
        if (j.contains("bootstrap")) {
            const auto& b = j.at("bootstrap");
            reject_unknown(b, {"n_paths", "seed", "levels", "joint_rows", "clip_speed", "clip_pressure"}, "bootstrap.");
            read(b, "n_paths", c.n_paths);
            read(b, "seed", c.seed);
            read(b, "levels", c.levels);
            read(b, "joint_rows", c.joint_rows);
            read(b, "clip_speed", c.clip_speed);
            read(b, "clip_pressure", c.clip_pressure);
        }
        if (j.contains("forecast")) {
            const auto& f = j.at("forecast");
            reject_unknown(f, {"origin", "horizon"}, "forecast.");
            read(f, "origin", c.origin);
            read(f, "horizon", c.horizon);
        }
        if (j.contains("evaluation")) {
            const auto& e = j.at("evaluation");
            reject_unknown(e, {"n_origins", "horizon", "seed", "models", "ensemble_paths", "refit", "pit_bins"},
                           "evaluation.");
            read(e, "n_origins", c.evaluation.n_origins);
            read(e, "horizon", c.evaluation.horizon);
            read(e, "seed", c.evaluation.seed);
            read(e, "models", c.evaluation.models);
            read(e, "ensemble_paths", c.evaluation.ensemble_paths);
            read(e, "refit", c.evaluation.refit);
            read(e, "pit_bins", c.evaluation.pit_bins);
        }
        read(j, "output_dir", c.output_dir);
        read(j, "threads", c.threads);
    } catch (const json::exception& err) {
        throw ConfigError(std::string("malformed config: ") + err.what());
    }
    c.validate();
    return c;
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    std::string pointer = "/";
    for (const char ch : key) pointer += ch == '.' ? '/' : ch;
    try {
        doc[json::json_pointer(pointer)] = value;
    } catch (const json::exception& err) {
        throw ConfigError("cannot apply override '" + key + "': " + err.what());
    }
}

RunConfig load(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
    json doc = json::object();
    if (file) {
        if (!std::filesystem::exists(*file)) throw ConfigError("config file not found: " + file->string());
        try {
            doc = io::read_json(*file);
        } catch (const DataError& err) {
            throw ConfigError(err.what());
        }
    }
    for (const auto& o : overrides) apply_override(doc, o);
    RunConfig c = from_json(doc);
    if (c.output_dir.empty()) {
        const char* env = std::getenv(kOutputDirEnv);
        c.output_dir = env != nullptr && *env != '\0' ? env : "windcast-out";
    }
    return c;
}

}  // namespace windcast::config
