#include "windcast/evaluation.hpp"

#include "windcast/csv_io.hpp"
#include "windcast/error.hpp"
#include "windcast/parallel.hpp"
#include "windcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace windcast::evaluation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

ErrorTable rmse_mae(const Eigen::MatrixXd& errors) {
    ErrorTable t;
    const auto H = static_cast<std::size_t>(errors.cols());
    t.rmse.assign(H, kNaN);
    t.mae.assign(H, kNaN);
    t.count.assign(H, 0);
    t.excluded.assign(H, 0);
    for (Eigen::Index h = 0; h < errors.cols(); ++h) {
        double ss = 0.0;
        double sa = 0.0;
        int n = 0;
        for (Eigen::Index i = 0; i < errors.rows(); ++i) {
            const double e = errors(i, h);
            if (std::isnan(e)) {
                ++t.excluded[static_cast<std::size_t>(h)];
                continue;
            }
            ss += e * e;
            sa += std::abs(e);
            ++n;
        }
        t.count[static_cast<std::size_t>(h)] = n;
        if (n > 0) {
            t.rmse[static_cast<std::size_t>(h)] = std::sqrt(ss / n);
            t.mae[static_cast<std::size_t>(h)] = sa / n;
        }
    }
    return t;
}

double direction_error(double forecast_deg, double actual_deg) {
    const double d = std::fmod(std::abs(forecast_deg - actual_deg), 360.0);
    return std::min(d, 360.0 - d);
}

ErrorTable maeoa(const Eigen::MatrixXd& forecast_deg, const Eigen::MatrixXd& actual_deg) {
    if (forecast_deg.rows() != actual_deg.rows() || forecast_deg.cols() != actual_deg.cols()) {
        throw ConfigError("maeoa: forecast and actual matrices differ in shape");
    }
    Eigen::MatrixXd err(forecast_deg.rows(), forecast_deg.cols());
    for (Eigen::Index i = 0; i < err.rows(); ++i) {
        for (Eigen::Index h = 0; h < err.cols(); ++h) {
            const double f = forecast_deg(i, h);
            const double a = actual_deg(i, h);
            err(i, h) = (std::isnan(f) || std::isnan(a)) ? kNaN : direction_error(f, a);
        }
    }
    return rmse_mae(err);
}

DmResult diebold_mariano(std::span<const double> loss_a, std::span<const double> loss_b, int h) {
    if (loss_a.size() != loss_b.size()) {
        throw ConfigError("Diebold-Mariano: loss series differ in length");
    }
    if (loss_a.size() < 30) {
        throw ConfigError("Diebold-Mariano: need at least 30 loss pairs");
    }
    if (h < 1) {
        throw ConfigError("Diebold-Mariano: horizon must be at least 1");
    }
    const std::size_t n = loss_a.size();
    std::vector<double> d(n);
    for (std::size_t t = 0; t < n; ++t) d[t] = loss_a[t] - loss_b[t];
    DmResult r;
    r.mean_difference = stats::mean(d);
    auto gamma = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t t = k; t < n; ++t) s += (d[t] - r.mean_difference) * (d[t - k] - r.mean_difference);
        return s / static_cast<double>(n);
    };
    double lrv = gamma(0);
    for (int k = 1; k < h && static_cast<std::size_t>(k) < n; ++k) {
        lrv += 2.0 * (1.0 - static_cast<double>(k) / h) * gamma(static_cast<std::size_t>(k));
    }
    r.long_run_variance = lrv;
    const double scale = std::max(std::abs(r.mean_difference), 1.0);
    if (!(lrv > 1e-28 * scale * scale)) {
        r.degenerate = true;
        if (r.mean_difference == 0.0) {
            r.statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.statistic = std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
            r.p_value = 0.0;
        }
        return r;
    }
    r.statistic = r.mean_difference / std::sqrt(lrv / static_cast<double>(n));
    r.p_value = 2.0 * stats::normal_cdf(-std::abs(r.statistic));
    return r;
}

double pit_value(std::span<const double> sorted_ensemble, double realization, double u_rank, double u_offset) {
    const auto lo = std::lower_bound(sorted_ensemble.begin(), sorted_ensemble.end(), realization);
    const auto hi = std::upper_bound(lo, sorted_ensemble.end(), realization);
    const auto below = static_cast<double>(lo - sorted_ensemble.begin());
    const auto ties = static_cast<double>(hi - lo);
    const double rank = below + std::min(std::floor(u_rank * (ties + 1.0)), ties);
    return (rank + u_offset) / (static_cast<double>(sorted_ensemble.size()) + 1.0);
}

PitHistogram pit_histogram(std::span<const double> pit_values, int bins) {
    if (bins < 1) throw ConfigError("PIT histogram needs at least one bin");
    PitHistogram h;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (const double v : pit_values) {
        auto b = static_cast<int>(std::floor(v * bins));
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    const auto n = static_cast<double>(pit_values.size());
    if (n == 0.0) return h;
    const double expected = n / bins;
    for (const int c : h.counts) {
        h.max_deviation = std::max(h.max_deviation, std::abs(c / n - 1.0 / bins));
        h.chi_square += (c - expected) * (c - expected) / expected;
    }
    h.p_value = bins > 1 ? stats::chi_square_sf(h.chi_square, bins - 1) : 1.0;
    return h;
}

std::vector<double> pit_values(const std::vector<std::vector<double>>& ensembles, std::span<const double> realizations,
                               std::uint64_t seed) {
    if (ensembles.size() != realizations.size()) {
        throw ConfigError("PIT: one ensemble per realization required");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(realizations.size());
    for (std::size_t i = 0; i < realizations.size(); ++i) {
        std::vector<double> sorted = ensembles[i];
        std::sort(sorted.begin(), sorted.end());
        const double u1 = unif(rng);
        const double u2 = unif(rng);
        out[i] = pit_value(sorted, realizations[i], u1, u2);
    }
    return out;
}

YawLoss yaw_loss(double direction_error_deg) {
    YawLoss y;
    const double c = std::cos(direction_error_deg * std::numbers::pi / 180.0);
    y.raw = c * c * c;
    y.beyond_quarter_turn = direction_error_deg > 90.0;
    y.power = y.beyond_quarter_turn ? 0.0 : std::max(y.raw, 0.0);
    return y;
}

std::string_view variable_name(int v) {
    static constexpr std::array<std::string_view, kVariableCount> kNames{
        "pressure", "pressure_magnitude", "speed", "speed_magnitude", "wind_direction", "pressure_direction"};
    return kNames[static_cast<std::size_t>(v)];
}

bool is_circular(int v) { return v == kWindDirection || v == kPressureDirection; }

std::array<double, kVariableCount> variables_of(const Eigen::Ref<const Eigen::RowVectorXd>& s) {
    std::array<double, kVariableCount> v{};
    v[kPressure] = s(kP);
    v[kPressureMagnitude] = std::hypot(s(kPs), s(kPc));
    v[kSpeed] = s(kW);
    v[kSpeedMagnitude] = std::hypot(s(kWs), s(kWc));
    v[kWindDirection] = (s(kWs) == 0.0 && s(kWc) == 0.0) ? kNaN : direction_from_components(s(kWs), s(kWc));
    v[kPressureDirection] = (s(kPs) == 0.0 && s(kPc) == 0.0) ? kNaN : direction_from_components(s(kPs), s(kPc));
    return v;
}

std::vector<Eigen::Index> draw_origins(Eigen::Index first, Eigen::Index last, int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("number of forecast origins must be at least 1");
    const Eigen::Index available = last >= first ? last - first + 1 : 0;
    if (n > available) {
        throw ConfigError("requested " + std::to_string(n) + " forecast origins but only " +
                          std::to_string(available) + " are available");
    }
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(available));
    for (Eigen::Index i = 0; i < available; ++i) pool[static_cast<std::size_t>(i)] = first + i;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
    }
    pool.resize(static_cast<std::size_t>(n));
    std::sort(pool.begin(), pool.end());
    return pool;
}

EvaluationRun run_evaluation(const StateMatrix& states, const std::vector<Forecaster>& models,
                             const EvaluationOptions& options) {
    if (options.horizon < 1) throw ConfigError("evaluation horizon must be at least 1");
    const Eigen::Index last = options.last_origin >= 0 ? options.last_origin : states.rows() - 1 - options.horizon;
    if (last + options.horizon >= states.rows()) {
        throw ConfigError("last forecast origin leaves fewer than H observations");
    }
    EvaluationRun run;
    run.horizon = options.horizon;
    run.origins = draw_origins(options.first_origin, last, options.n_origins, options.seed);
    const auto N = static_cast<Eigen::Index>(run.origins.size());
    const int H = options.horizon;

    // Actual observation-space values, N x H per variable.
    std::array<Eigen::MatrixXd, kVariableCount> actual;
    for (auto& a : actual) a.resize(N, H);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (int h = 0; h < H; ++h) {
            const auto v = variables_of(states.values.row(run.origins[static_cast<std::size_t>(i)] + 1 + h));
            for (int k = 0; k < kVariableCount; ++k) actual[static_cast<std::size_t>(k)](i, h) = v[static_cast<std::size_t>(k)];
        }
    }

    std::vector<int> pit_h;
    for (const int h : options.pit_horizons) {
        if (h >= 1 && h <= H) pit_h.push_back(h);
    }
    const std::array<int, 2> pit_vars{kSpeed, kPressure};
    const std::array<int, 2> pit_components{kW, kP};

    for (const Forecaster& model : models) {
        ModelScores scores;
        scores.name = model.name;
        for (auto& e : scores.errors) e.resize(N, H);
        const bool with_pit = static_cast<bool>(model.ensemble) && !pit_h.empty();
        // ensembles[i][ph][var] -> path values
        std::vector<std::vector<std::array<std::vector<double>, 2>>> ens(
            with_pit ? static_cast<std::size_t>(N) : 0,
            std::vector<std::array<std::vector<double>, 2>>(pit_h.size()));
        parallel_for(static_cast<std::size_t>(N), options.threads, [&](std::size_t i) {
            const Eigen::Index origin = run.origins[i];
            const Eigen::MatrixXd f = model.point(origin, H);
            for (int h = 0; h < H; ++h) {
                const auto fv = variables_of(f.row(h));
                for (int k = 0; k < kVariableCount; ++k) {
                    const double a = actual[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(i), h);
                    const double p = fv[static_cast<std::size_t>(k)];
                    double e = 0.0;
                    if (is_circular(k)) {
                        e = (std::isnan(a) || std::isnan(p)) ? kNaN : direction_error(p, a);
                    } else {
                        e = p - a;
                    }
                    scores.errors[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(i), h) = e;
                }
            }
            if (with_pit) {
                const auto paths = model.ensemble(origin, H, splitmix(options.seed ^ splitmix(static_cast<std::uint64_t>(origin))));
                for (std::size_t ph = 0; ph < pit_h.size(); ++ph) {
                    for (std::size_t v = 0; v < 2; ++v) {
                        auto& vals = ens[i][ph][v];
                        vals.reserve(paths.size());
                        for (const auto& path : paths) vals.push_back(path(pit_h[ph] - 1, pit_components[v]));
                    }
                }
            }
        });
        for (int k = 0; k < kVariableCount; ++k) {
            scores.tables[static_cast<std::size_t>(k)] = rmse_mae(scores.errors[static_cast<std::size_t>(k)]);
        }
        scores.yaw_power.assign(static_cast<std::size_t>(H), kNaN);
        for (int h = 0; h < H; ++h) {
            double s = 0.0;
            int n = 0;
            for (Eigen::Index i = 0; i < N; ++i) {
                const double e = scores.errors[kWindDirection](i, h);
                if (std::isnan(e)) continue;
                s += yaw_loss(e).power;
                ++n;
            }
            if (n > 0) scores.yaw_power[static_cast<std::size_t>(h)] = s / n;
        }
        if (with_pit) {
            const double lo = 0.5 * (1.0 - options.coverage_level);
            const double hi = 1.0 - lo;
            for (std::size_t ph = 0; ph < pit_h.size(); ++ph) {
                for (std::size_t v = 0; v < 2; ++v) {
                    PitSummary summary;
                    summary.horizon = pit_h[ph];
                    summary.variable = pit_vars[v];
                    std::vector<std::vector<double>> ensembles(static_cast<std::size_t>(N));
                    std::vector<double> real(static_cast<std::size_t>(N));
                    int inside = 0;
                    for (Eigen::Index i = 0; i < N; ++i) {
                        auto sorted = ens[static_cast<std::size_t>(i)][ph][v];
                        std::sort(sorted.begin(), sorted.end());
                        const double x = actual[static_cast<std::size_t>(pit_vars[v])](i, pit_h[ph] - 1);
                        real[static_cast<std::size_t>(i)] = x;
                        if (!sorted.empty() && x >= quantile_sorted(sorted, lo) && x <= quantile_sorted(sorted, hi)) ++inside;
                        ensembles[static_cast<std::size_t>(i)] = std::move(sorted);
                    }
                    summary.values = pit_values(ensembles, real, splitmix(options.seed + 0x5157ULL * (ph * 2 + v + 1)));
                    summary.histogram = pit_histogram(summary.values, options.pit_bins);
                    summary.coverage = N > 0 ? static_cast<double>(inside) / static_cast<double>(N) : 0.0;
                    scores.pit.push_back(std::move(summary));
                }
            }
        }
        run.models.push_back(std::move(scores));
    }

    for (std::size_t a = 0; a < run.models.size(); ++a) {
        for (std::size_t b = a + 1; b < run.models.size(); ++b) {
            for (int k = 0; k < kVariableCount; ++k) {
                const Eigen::MatrixXd& ea = run.models[a].errors[static_cast<std::size_t>(k)];
                const Eigen::MatrixXd& eb = run.models[b].errors[static_cast<std::size_t>(k)];
                for (int h = 0; h < H; ++h) {
                    std::vector<double> sq_a, sq_b, ab_a, ab_b;
                    for (Eigen::Index i = 0; i < N; ++i) {
                        const double x = ea(i, h);
                        const double y = eb(i, h);
                        if (std::isnan(x) || std::isnan(y)) continue;
                        sq_a.push_back(x * x);
                        sq_b.push_back(y * y);
                        ab_a.push_back(std::abs(x));
                        ab_b.push_back(std::abs(y));
                    }
                    if (sq_a.size() < 30) continue;
                    DmEntry entry;
                    entry.model_a = run.models[a].name;
                    entry.model_b = run.models[b].name;
                    entry.variable = k;
                    entry.horizon = h + 1;
                    entry.squared = diebold_mariano(sq_a, sq_b, h + 1);
                    entry.absolute = diebold_mariano(ab_a, ab_b, h + 1);
                    run.dm.push_back(entry);
                }
            }
        }
    }
    return run;
}

void write_metrics_csv(const std::filesystem::path& path, const EvaluationRun& run) {
    auto out = open_out(path);
    out << "model,variable,horizon,rmse,mae,count,excluded,yaw_power\n";
    for (const ModelScores& m : run.models) {
        for (int k = 0; k < kVariableCount; ++k) {
            const ErrorTable& t = m.tables[static_cast<std::size_t>(k)];
            for (std::size_t h = 0; h < t.rmse.size(); ++h) {
                out << m.name << ',' << variable_name(k) << ',' << (h + 1) << ',' << io::format_double(t.rmse[h]) << ','
                    << io::format_double(t.mae[h]) << ',' << t.count[h] << ',' << t.excluded[h] << ','
                    << (k == kWindDirection ? io::format_double(m.yaw_power[h]) : "") << '\n';
            }
        }
    }
}

void write_dm_csv(const std::filesystem::path& path, const EvaluationRun& run) {
    auto out = open_out(path);
    out << "model_a,model_b,variable,horizon,loss,statistic,p_value,degenerate\n";
    for (const DmEntry& e : run.dm) {
        for (int l = 0; l < 2; ++l) {
            const DmResult& r = l == 0 ? e.squared : e.absolute;
            out << e.model_a << ',' << e.model_b << ',' << variable_name(e.variable) << ',' << e.horizon << ','
                << (l == 0 ? "squared" : "absolute") << ',' << io::format_double(r.statistic) << ','
                << io::format_double(r.p_value) << ',' << (r.degenerate ? 1 : 0) << '\n';
        }
    }
}

void write_pit_csv(const std::filesystem::path& path, const EvaluationRun& run) {
    auto out = open_out(path);
    out << "model,variable,horizon,bin,lower,upper,count\n";
    for (const ModelScores& m : run.models) {
        for (const PitSummary& p : m.pit) {
            const auto bins = static_cast<int>(p.histogram.counts.size());
            for (int b = 0; b < bins; ++b) {
                out << m.name << ',' << variable_name(p.variable) << ',' << p.horizon << ',' << (b + 1) << ','
                    << io::format_double(static_cast<double>(b) / bins) << ','
                    << io::format_double(static_cast<double>(b + 1) / bins) << ','
                    << p.histogram.counts[static_cast<std::size_t>(b)] << '\n';
            }
        }
    }
}

void write_yaw_csv(const std::filesystem::path& path, const EvaluationRun& /*run*/) {
    auto out = open_out(path);
    out << "error_deg,cos3,power_fraction\n";
    for (int d = 0; d <= 180; ++d) {
        const YawLoss y = yaw_loss(d);
        out << d << ',' << io::format_double(y.raw) << ',' << io::format_double(y.power) << '\n';
    }
}

nlohmann::json summary_json(const EvaluationRun& run) {
    using nlohmann::json;
    json j;
    j["n_origins"] = run.origins.size();
    j["horizon"] = run.horizon;
    j["origins"] = run.origins;
    j["yaw_reference"] = json{{"error_deg", kYawReferenceDeg}, {"power_fraction", yaw_loss(kYawReferenceDeg).power}};
    json models = json::array();
    for (const ModelScores& m : run.models) {
        json mj;
        mj["name"] = m.name;
        for (int k = 0; k < kVariableCount; ++k) {
            const ErrorTable& t = m.tables[static_cast<std::size_t>(k)];
            auto clean = [](const std::vector<double>& v) {
                json a = json::array();
                for (const double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
                return a;
            };
            mj["variables"][std::string(variable_name(k))] = json{{"rmse", clean(t.rmse)}, {"mae", clean(t.mae)}};
        }
        json pit = json::array();
        for (const PitSummary& p : m.pit) {
            pit.push_back(json{{"variable", variable_name(p.variable)},
                               {"horizon", p.horizon},
                               {"counts", p.histogram.counts},
                               {"max_deviation", p.histogram.max_deviation},
                               {"chi_square", p.histogram.chi_square},
                               {"p_value", p.histogram.p_value},
                               {"coverage", p.coverage}});
        }
        mj["pit"] = std::move(pit);
        models.push_back(std::move(mj));
    }
    j["models"] = std::move(models);
    return j;
}

}  // namespace windcast::evaluation
