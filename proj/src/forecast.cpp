#include "windcast/forecast.hpp"

#include "windcast/csv_io.hpp"
#include "windcast/error.hpp"
#include "windcast/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace windcast::forecast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
using Row = std::array<double, kStateDim>;

void require_usable(const FittedModel& model) {
    for (int e = 0; e < kStateDim; ++e) {
        const auto& eq = model.equations[static_cast<std::size_t>(e)];
        if (eq.failed) {
            throw ConvergenceError("cannot forecast: equation " + std::string(kComponentNames[static_cast<std::size_t>(e)]) +
                                   " failed to fit (" + eq.failure + ")");
        }
    }
}

void check_origin(const StateMatrix& states, Eigen::Index origin, Eigen::Index needed, int horizon) {
    if (horizon < 1) {
        throw ConfigError("forecast horizon must be at least 1");
    }
    if (origin < 0 || origin >= states.rows()) {
        throw DataError("forecast origin lies outside the data");
    }
    if (origin + 1 < needed) {
        throw InsufficientDataError("forecast origin needs " + std::to_string(needed) +
                                    " rows of history, only " + std::to_string(origin + 1) + " available");
    }
}

// History window of `length` rows ending at `origin`, followed by room for
// the forecast horizon.
std::vector<Row> history_buffer(const StateMatrix& states, Eigen::Index origin, Eigen::Index length, int horizon) {
    std::vector<Row> buf(static_cast<std::size_t>(length + horizon));
    for (Eigen::Index r = 0; r < length; ++r) {
        const Eigen::Index src = origin + 1 - length + r;
        for (int c = 0; c < kStateDim; ++c) buf[static_cast<std::size_t>(r)][c] = states.values(src, c);
    }
    return buf;
}

Eigen::MatrixXd tail_matrix(const std::vector<Row>& buf, std::size_t start, int horizon) {
    Eigen::MatrixXd out(horizon, kStateDim);
    for (int h = 0; h < horizon; ++h) {
        for (int c = 0; c < kStateDim; ++c) out(h, c) = buf[start + static_cast<std::size_t>(h)][c];
    }
    return out;
}

void validate_levels(const std::vector<double>& levels) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0) || (i > 0 && !(levels[i] > levels[i - 1]))) {
            throw ConfigError("band levels must be strictly increasing and inside (0, 1)");
        }
    }
}

}  // namespace

std::vector<double> default_levels() { return {0.005, 0.025, 0.25, 0.5, 0.75, 0.975, 0.995}; }

Reconstruction reconstruct(const Eigen::MatrixXd& states) {
    Reconstruction r;
    const auto H = static_cast<std::size_t>(states.rows());
    r.wind_direction.resize(H);
    r.pressure_direction.resize(H);
    r.speed.resize(H);
    r.speed_magnitude.resize(H);
    r.pressure.resize(H);
    r.pressure_magnitude.resize(H);
    r.wind_direction_undefined.assign(H, 0);
    r.pressure_direction_undefined.assign(H, 0);
    for (std::size_t h = 0; h < H; ++h) {
        const auto row = static_cast<Eigen::Index>(h);
        const double ws = states(row, kWs);
        const double wc = states(row, kWc);
        const double ps = states(row, kPs);
        const double pc = states(row, kPc);
        r.speed[h] = states(row, kW);
        r.pressure[h] = states(row, kP);
        r.speed_magnitude[h] = std::hypot(ws, wc);
        r.pressure_magnitude[h] = std::hypot(ps, pc);
        if (ws == 0.0 && wc == 0.0) {
            r.wind_direction[h] = kNaN;
            r.wind_direction_undefined[h] = 1;
        } else {
            r.wind_direction[h] = direction_from_components(ws, wc);
        }
        if (ps == 0.0 && pc == 0.0) {
            r.pressure_direction[h] = kNaN;
            r.pressure_direction_undefined[h] = 1;
        } else {
            r.pressure_direction[h] = direction_from_components(ps, pc);
        }
    }
    return r;
}

Eigen::MatrixXd point_forecast(const FittedModel& model, const StateMatrix& states, Eigen::Index origin,
                               int horizon) {
    require_usable(model);
    const Eigen::Index L = model.lags.max_mean_lag();
    check_origin(states, origin, L, horizon);
    std::vector<Row> buf = history_buffer(states, origin, L, horizon);
    const basis::PeriodicRegressors periodic(model.basis);
    std::vector<double> per(static_cast<std::size_t>(periodic.size()));
    const std::int64_t origin_step = states.step(origin);
    for (int o = 1; o <= horizon; ++o) {
        const std::size_t i = static_cast<std::size_t>(L + o - 1);
        periodic.evaluate(origin_step + o, per);
        auto lagged = [&](int source, int lag) { return buf[i - static_cast<std::size_t>(lag)][source]; };
        for (int e = 0; e < kStateDim; ++e) {
            buf[i][e] = evaluate_terms(model.equations[static_cast<std::size_t>(e)].mean_terms, per,
                                       model.thresholds, lagged);
        }
    }
    return tail_matrix(buf, static_cast<std::size_t>(L), horizon);
}

Eigen::MatrixXd point_forecast(const FittedModel& model, const StateMatrix& history, int horizon) {
    return point_forecast(model, history, history.rows() - 1, horizon);
}

Eigen::MatrixXd mean_residuals(const FittedModel& model, const StateMatrix& states, Eigen::Index begin,
                               Eigen::Index end) {
    require_usable(model);
    const Eigen::Index L = model.lags.max_mean_lag();
    if (begin < L || end > states.rows() || begin > end) {
        throw InsufficientDataError("residual window lacks the history required by the mean lags");
    }
    const basis::PeriodicRegressors periodic(model.basis);
    std::vector<double> per(static_cast<std::size_t>(periodic.size()));
    Eigen::MatrixXd out(end - begin, kStateDim);
    for (Eigen::Index t = begin; t < end; ++t) {
        periodic.evaluate(states.step(t), per);
        auto lagged = [&](int source, int lag) { return states.values(t - lag, source); };
        for (int e = 0; e < kStateDim; ++e) {
            out(t - begin, e) = states.values(t, e) - evaluate_terms(model.equations[static_cast<std::size_t>(e)].mean_terms,
                                                                     per, model.thresholds, lagged);
        }
    }
    return out;
}

ForecastResult bootstrap_forecast(const FittedModel& model, const StateMatrix& states, Eigen::Index origin,
                                  int horizon, const BootstrapOptions& options) {
    validate_levels(options.levels);
    if (options.n_paths < 0) {
        throw ConfigError("number of bootstrap paths must be nonnegative");
    }
    ForecastResult result;
    result.point = point_forecast(model, states, origin, horizon);
    result.reconstructed = reconstruct(result.point);
    result.origin_step = states.step(origin);
    result.horizon = horizon;
    result.n_paths = options.n_paths;
    result.seed = options.seed;
    result.levels = options.levels;
    if (options.n_paths == 0) {
        return result;
    }
    const Eigen::MatrixXd& pool = model.standardized;
    if (pool.rows() == 0) {
        throw DataError("bootstrap needs a nonempty standardized residual pool");
    }

    const Eigen::Index L = model.lags.max_mean_lag();
    const Eigen::Index Lv = model.lags.max_variance_lag();
    check_origin(states, origin, L + Lv, horizon);
    const std::vector<Row> base = history_buffer(states, origin, L, horizon);
    std::vector<Row> eps_base(static_cast<std::size_t>(Lv + horizon));
    if (Lv > 0) {
        const Eigen::MatrixXd hist = mean_residuals(model, states, origin + 1 - Lv, origin + 1);
        for (Eigen::Index r = 0; r < Lv; ++r) {
            for (int c = 0; c < kStateDim; ++c) eps_base[static_cast<std::size_t>(r)][c] = hist(r, c);
        }
    }
    const basis::PeriodicRegressors periodic(model.basis);
    std::vector<std::vector<double>> per_steps(static_cast<std::size_t>(horizon),
                                               std::vector<double>(static_cast<std::size_t>(periodic.size())));
    for (int o = 1; o <= horizon; ++o) periodic.evaluate(result.origin_step + o, per_steps[static_cast<std::size_t>(o - 1)]);

    const auto n_paths = static_cast<std::size_t>(options.n_paths);
    std::vector<Eigen::MatrixXd> paths(n_paths);
    const auto pool_rows = static_cast<std::uint64_t>(pool.rows());
    parallel_for(n_paths, options.threads, [&](std::size_t path) {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::uint64_t> pick(0, pool_rows - 1);
        std::vector<Row> ys = base;
        std::vector<Row> es = eps_base;
        for (int o = 1; o <= horizon; ++o) {
            const std::size_t i = static_cast<std::size_t>(L + o - 1);
            const std::size_t j = static_cast<std::size_t>(Lv + o - 1);
            const auto& per = per_steps[static_cast<std::size_t>(o - 1)];
            auto lagged_y = [&](int source, int lag) { return ys[i - static_cast<std::size_t>(lag)][source]; };
            auto lagged_e = [&](int source, int lag) { return es[j - static_cast<std::size_t>(lag)][source]; };
            Row eta{};
            if (options.joint_rows) {
                const auto r = static_cast<Eigen::Index>(pick(rng));
                for (int e = 0; e < kStateDim; ++e) eta[e] = pool(r, e);
            } else {
                for (int e = 0; e < kStateDim; ++e) eta[e] = pool(static_cast<Eigen::Index>(pick(rng)), e);
            }
            for (int e = 0; e < kStateDim; ++e) {
                const EquationModel& eq = model.equations[static_cast<std::size_t>(e)];
                const double mu = evaluate_terms(eq.mean_terms, per, model.thresholds, lagged_y);
                const double sigma =
                    std::max(evaluate_terms(eq.variance_terms, per, model.thresholds, lagged_e), eq.sigma_floor);
                es[j][e] = sigma * eta[e];
                ys[i][e] = mu + es[j][e];
            }
        }
        paths[path] = tail_matrix(ys, static_cast<std::size_t>(L), horizon);
    });

    result.median.resize(horizon, kBandColumns);
    result.bands.assign(options.levels.size(), Eigen::MatrixXd(horizon, kBandColumns));
    std::vector<double> values(n_paths);
    for (int h = 0; h < horizon; ++h) {
        for (int c = 0; c < kBandColumns; ++c) {
            for (std::size_t p = 0; p < n_paths; ++p) {
                const Eigen::MatrixXd& m = paths[p];
                double v = 0.0;
                if (c == kSpeedMagnitude) {
                    v = std::hypot(m(h, kWs), m(h, kWc));
                } else if (c == kPressureMagnitude) {
                    v = std::hypot(m(h, kPs), m(h, kPc));
                } else {
                    v = m(h, c);
                    if ((c == kW && options.clip_speed) || (c == kP && options.clip_pressure)) v = std::max(v, 0.0);
                }
                values[p] = v;
            }
            std::sort(values.begin(), values.end());
            result.median(h, c) = quantile_sorted(values, 0.5);
            for (std::size_t l = 0; l < options.levels.size(); ++l) {
                result.bands[l](h, c) = quantile_sorted(values, options.levels[l]);
            }
        }
    }
    if (options.keep_paths) result.paths = std::move(paths);
    return result;
}

void write_forecast_csv(const std::filesystem::path& path, const ForecastResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    const bool bands = result.n_paths > 0 && result.median.rows() == result.horizon;
    out << "horizon,component,point";
    if (bands) {
        out << ",median";
        for (const double l : result.levels) out << ",q" << io::format_double(l);
    }
    out << '\n';
    static constexpr std::array<const char*, 4> kDerived{"speed_magnitude", "pressure_magnitude", "wind_direction",
                                                         "pressure_direction"};
    const Reconstruction& rec = result.reconstructed;
    for (int h = 0; h < result.horizon; ++h) {
        const auto hs = static_cast<std::size_t>(h);
        for (int c = 0; c < kStateDim + 4; ++c) {
            const bool state = c < kStateDim;
            out << (h + 1) << ',' << (state ? kComponentNames[static_cast<std::size_t>(c)] : kDerived[static_cast<std::size_t>(c - kStateDim)]) << ',';
            double point = 0.0;
            if (state) point = result.point(h, c);
            else if (c == kSpeedMagnitude) point = rec.speed_magnitude[hs];
            else if (c == kPressureMagnitude) point = rec.pressure_magnitude[hs];
            else if (c == kStateDim + 2) point = rec.wind_direction[hs];
            else point = rec.pressure_direction[hs];
            out << io::format_double(point);
            if (bands) {
                const bool has_band = c < kBandColumns;
                out << ',' << (has_band ? io::format_double(result.median(h, c)) : "");
                for (std::size_t l = 0; l < result.levels.size(); ++l) {
                    out << ',' << (has_band ? io::format_double(result.bands[l](h, c)) : "");
                }
            }
            out << '\n';
        }
    }
    if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

nlohmann::json forecast_metadata(const ForecastResult& result, const std::string& model_hash) {
    return nlohmann::json{{"origin_step", result.origin_step},
                          {"origin_timestamp", io::format_timestamp(result.origin_step * kStepSeconds)},
                          {"horizon", result.horizon},
                          {"n_paths", result.n_paths},
                          {"seed", result.seed},
                          {"levels", result.levels},
                          {"model_hash", model_hash}};
}

}  // namespace windcast::forecast
