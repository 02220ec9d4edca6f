#include "windcast/synthetic.hpp"

#include "windcast/baseline.hpp"
#include "windcast/error.hpp"
#include "windcast/model_io.hpp"
#include "windcast/stats.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace windcast::synthetic {

using nlohmann::json;

void SyntheticSpec::validate() const {
    lags.validate();
    basis.validate();
    if (T < 2) throw ConfigError("synthetic series needs T >= 2");
    if (burn_in < 0) throw ConfigError("burn-in must be nonnegative");
    if (innovation == Innovation::kStudentT && !(student_df > 2.0)) {
        throw ConfigError("scaled-t innovations need more than 2 degrees of freedom");
    }
    for (int e = 0; e < kStateDim; ++e) {
        if (!(sigma[static_cast<std::size_t>(e)] >= 0.0)) throw ConfigError("constant sigma must be nonnegative");
        for (const Term& t : mean_terms[static_cast<std::size_t>(e)]) {
            if (t.column.equation != e) throw ConfigError("mean term filed under the wrong equation");
            if (t.column.lag > lags.max_mean_lag()) throw ConfigError("mean term lag exceeds the lag configuration");
            if (t.column.alpha_index >= static_cast<int>(thresholds.alphas.size())) {
                throw ConfigError("threshold term refers to a missing threshold level");
            }
        }
        for (const Term& t : variance_terms[static_cast<std::size_t>(e)]) {
            if (t.column.equation != e) throw ConfigError("variance term filed under the wrong equation");
            if (t.coefficient < 0.0) throw ConfigError("standard-deviation coefficients must be nonnegative");
        }
    }
}

FittedModel SyntheticSpec::truth_model() const {
    FittedModel m;
    m.lags = lags;
    m.basis = basis;
    m.mask = mask;
    m.thresholds = thresholds;
    if (m.thresholds.values.rows() == 0) m.thresholds.values.resize(kStateDim, 0);
    m.first_step = first_step;
    m.converged = true;
    for (int e = 0; e < kStateDim; ++e) {
        EquationModel& eq = m.equations[static_cast<std::size_t>(e)];
        eq.mean_terms = mean_terms[static_cast<std::size_t>(e)];
        eq.variance_terms = variance_terms[static_cast<std::size_t>(e)];
        if (eq.variance_terms.empty()) {
            design::ColumnSpec c;
            c.family = design::Family::kVarianceInterceptPeriodic;
            c.equation = e;
            eq.variance_terms.push_back({c, sigma[static_cast<std::size_t>(e)]});
        }
        eq.mean_columns = design::mean_column_count(lags, basis, mask, e);
        eq.variance_columns = design::variance_column_count(lags, basis);
    }
    return m;
}

double plain_ar_spectral_radius(const SyntheticSpec& spec) {
    int p = 0;
    for (const auto& terms : spec.mean_terms) {
        for (const Term& t : terms) {
            if (t.column.family == design::Family::kAr) p = std::max(p, t.column.lag);
        }
    }
    std::vector<Eigen::MatrixXd> lagm(static_cast<std::size_t>(p), Eigen::MatrixXd::Zero(kStateDim, kStateDim));
    for (int e = 0; e < kStateDim; ++e) {
        for (const Term& t : spec.mean_terms[static_cast<std::size_t>(e)]) {
            if (t.column.family == design::Family::kAr) {
                lagm[static_cast<std::size_t>(t.column.lag - 1)](e, t.column.source) += t.coefficient;
            }
        }
    }
    return baseline::companion_spectral_radius(lagm);
}

SimulationResult simulate(const SyntheticSpec& spec) {
    spec.validate();
    const FittedModel truth = spec.truth_model();
    const Eigen::Index L = std::max<Eigen::Index>(spec.lags.max_mean_lag(), 1);
    const Eigen::Index Lv = std::max<Eigen::Index>(spec.lags.max_variance_lag(), 1);
    const Eigen::Index total = spec.burn_in + spec.T;
    const std::int64_t step0 = spec.first_step - spec.burn_in;

    Eigen::MatrixXd y(L + total, kStateDim);
    Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(Lv + total, kStateDim);
    for (Eigen::Index r = 0; r < L; ++r) {
        for (int c = 0; c < kStateDim; ++c) y(r, c) = spec.initial[static_cast<std::size_t>(c)];
    }
    Eigen::MatrixXd sig(total, kStateDim);
    Eigen::MatrixXd eta(total, kStateDim);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::chi_squared_distribution<double> chi(spec.student_df);
    const double t_scale = std::sqrt((spec.student_df - 2.0) / spec.student_df);
    auto draw = [&] {
        const double z = normal(rng);
        if (spec.innovation == Innovation::kGaussian) return z;
        return z / std::sqrt(chi(rng) / spec.student_df) * t_scale;
    };

    const basis::PeriodicRegressors periodic(spec.basis);
    std::vector<double> per(static_cast<std::size_t>(periodic.size()));
    for (Eigen::Index t = 0; t < total; ++t) {
        periodic.evaluate(step0 + t, per);
        const Eigen::Index i = L + t;
        const Eigen::Index j = Lv + t;
        auto lagged_y = [&](int source, int lag) { return y(i - lag, source); };
        auto lagged_e = [&](int source, int lag) { return eps(j - lag, source); };
        for (int e = 0; e < kStateDim; ++e) {
            const EquationModel& eq = truth.equations[static_cast<std::size_t>(e)];
            const double mu = evaluate_terms(eq.mean_terms, per, truth.thresholds, lagged_y);
            const double s = std::max(evaluate_terms(eq.variance_terms, per, truth.thresholds, lagged_e), 0.0);
            const double z = draw();
            eps(j, e) = s * z;
            y(i, e) = mu + eps(j, e);
            sig(t, e) = s;
            eta(t, e) = z;
            if (!std::isfinite(y(i, e)) || std::abs(y(i, e)) > spec.explosion_bound) {
                std::ostringstream msg;
                msg << "simulation exploded at step " << t << " (component " << kComponentNames[static_cast<std::size_t>(e)]
                    << ", value " << y(i, e) << "); plain AR companion spectral radius "
                    << plain_ar_spectral_radius(spec);
                throw ExplosiveSimulationError(msg.str());
            }
        }
    }
    SimulationResult out;
    out.states.values = y.bottomRows(spec.T);
    out.states.first_step = spec.first_step;
    out.states.direction_undefined.assign(static_cast<std::size_t>(spec.T), 0);
    out.sigma = sig.bottomRows(spec.T);
    out.shocks = eps.bottomRows(spec.T);
    out.standardized = eta.bottomRows(spec.T);
    return out;
}

Term term(const design::ColumnCatalog& catalog, std::string_view key, double coefficient) {
    for (const auto& c : catalog) {
        if (c.key() == key) return {c, coefficient};
    }
    throw ConfigError("no catalog column with key '" + std::string(key) + "'");
}

SyntheticSpec spec_from_json(const json& j) {
    try {
        SyntheticSpec s;
        s.T = j.value("T", s.T);
        s.burn_in = j.value("burn_in", s.burn_in);
        s.seed = j.value("seed", s.seed);
        s.first_step = j.value("first_step", s.first_step);
        if (j.contains("lags")) s.lags = io::lag_config_from_json(j.at("lags"));
        if (j.contains("basis")) s.basis = io::basis_config_from_json(j.at("basis"));
        if (j.contains("mask")) s.mask = io::mask_from_json(j.at("mask"));
        s.lags.validate();
        s.basis.validate();
        s.thresholds.alphas = s.lags.alphas;
        s.thresholds.values = Eigen::MatrixXd::Zero(kStateDim, static_cast<Eigen::Index>(s.lags.alphas.size()));
        if (j.contains("threshold_values")) {
            const auto& rows = j.at("threshold_values");
            if (rows.size() != kStateDim) throw ConfigError("threshold_values needs six rows");
            for (std::size_t r = 0; r < kStateDim; ++r) {
                if (rows[r].size() != s.lags.alphas.size()) throw ConfigError("threshold_values row width must match alphas");
                for (std::size_t a = 0; a < rows[r].size(); ++a) {
                    s.thresholds.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = rows[r][a].get<double>();
                }
            }
        }
        if (j.contains("sigma")) {
            const auto v = j.at("sigma").get<std::vector<double>>();
            if (v.size() != kStateDim) throw ConfigError("sigma needs six entries");
            std::copy(v.begin(), v.end(), s.sigma.begin());
        }
        if (j.contains("initial")) {
            const auto v = j.at("initial").get<std::vector<double>>();
            if (v.size() != kStateDim) throw ConfigError("initial needs six entries");
            std::copy(v.begin(), v.end(), s.initial.begin());
        }
        if (j.contains("innovation")) {
            const auto& inn = j.at("innovation");
            const auto kind = inn.value("kind", std::string("gaussian"));
            if (kind == "gaussian") {
                s.innovation = Innovation::kGaussian;
            } else if (kind == "student_t") {
                s.innovation = Innovation::kStudentT;
                s.student_df = inn.value("df", s.student_df);
            } else {
                throw ConfigError("innovation kind must be gaussian or student_t");
            }
        }
        s.explosion_bound = j.value("explosion_bound", s.explosion_bound);
        if (j.contains("equations")) {
            const auto& eqs = j.at("equations");
            if (eqs.size() != kStateDim) throw ConfigError("equations needs six entries");
            for (int e = 0; e < kStateDim; ++e) {
                const auto& q = eqs[static_cast<std::size_t>(e)];
                try {
                    if (q.contains("mean")) {
                        s.mean_terms[static_cast<std::size_t>(e)] =
                            io::terms_from_json(q.at("mean"), design::mean_catalog(s.lags, s.basis, s.mask, e));
                    }
                    if (q.contains("variance")) {
                        s.variance_terms[static_cast<std::size_t>(e)] =
                            io::terms_from_json(q.at("variance"), design::variance_catalog(s.lags, s.basis, e));
                    }
                } catch (const DataError& err) {
                    throw ConfigError(err.what());
                }
            }
        }
        s.validate();
        return s;
    } catch (const json::exception& err) {
        throw ConfigError(std::string("malformed synthetic spec: ") + err.what());
    }
}

json spec_to_json(const SyntheticSpec& s) {
    json j;
    j["T"] = s.T;
    j["burn_in"] = s.burn_in;
    j["seed"] = s.seed;
    j["first_step"] = s.first_step;
    j["lags"] = io::lag_config_to_json(s.lags);
    j["basis"] = io::basis_config_to_json(s.basis);
    j["mask"] = io::mask_to_json(s.mask);
    json tv = json::array();
    for (Eigen::Index r = 0; r < s.thresholds.values.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index a = 0; a < s.thresholds.values.cols(); ++a) row.push_back(s.thresholds.values(r, a));
        tv.push_back(row);
    }
    j["threshold_values"] = tv;
    j["sigma"] = s.sigma;
    j["initial"] = s.initial;
    j["innovation"] = s.innovation == Innovation::kGaussian ? json{{"kind", "gaussian"}}
                                                          : json{{"kind", "student_t"}, {"df", s.student_df}};
    j["explosion_bound"] = s.explosion_bound;
    json eqs = json::array();
    for (int e = 0; e < kStateDim; ++e) {
        eqs.push_back(json{{"mean", io::terms_to_json(s.mean_terms[static_cast<std::size_t>(e)])},
                           {"variance", io::terms_to_json(s.variance_terms[static_cast<std::size_t>(e)])}});
    }
    j["equations"] = eqs;
    return j;
}

json truth_json(const SyntheticSpec& spec, const SimulationResult& result) {
    json j;
    j["spec"] = spec_to_json(spec);
    j["plain_ar_spectral_radius"] = plain_ar_spectral_radius(spec);
    json moments = json::array();
    for (int e = 0; e < kStateDim; ++e) {
        const Eigen::VectorXd shock = result.shocks.col(e);
        const Eigen::VectorXd sig = result.sigma.col(e);
        const Eigen::VectorXd y = result.states.values.col(e);
        const std::span<const double> ss(shock.data(), static_cast<std::size_t>(shock.size()));
        const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
        moments.push_back(json{{"component", kComponentNames[static_cast<std::size_t>(e)]},
                               {"state_mean", stats::mean(ys)},
                               {"state_std", stats::standard_deviation(ys)},
                               {"shock_std", stats::standard_deviation(ss)},
                               {"rms_sigma", std::sqrt(sig.squaredNorm() / static_cast<double>(sig.size()))}});
    }
    j["moments"] = moments;
    return j;
}

ObservationFrame to_observations(const StateMatrix& states) {
    ObservationFrame f;
    const auto T = static_cast<std::size_t>(states.rows());
    f.timestamps.resize(T);
    f.direction.resize(T);
    f.speed.resize(T);
    f.pressure.resize(T);
    for (std::size_t r = 0; r < T; ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        f.timestamps[r] = states.step(row) * kStepSeconds;
        const double ws = states.values(row, kWs);
        const double wc = states.values(row, kWc);
        f.speed[r] = std::hypot(ws, wc);
        f.direction[r] = f.speed[r] > 0.0 ? direction_from_components(ws, wc) : 0.0;
        f.pressure[r] = states.values(row, kP);
    }
    f.refresh_missing_mask();
    return f;
}

}  // namespace windcast::synthetic
