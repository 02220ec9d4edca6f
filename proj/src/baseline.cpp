#include "windcast/baseline.hpp"

#include "windcast/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace windcast::baseline {

namespace {

constexpr double kRidge = 1e-10;

// Gamma(k) = (1/T) sum_t (y_t - mu)(y_{t-k} - mu)'.
std::vector<Eigen::MatrixXd> cross_covariances(const Eigen::MatrixXd& centered, int max_lag) {
    const Eigen::Index T = centered.rows();
    std::vector<Eigen::MatrixXd> g;
    g.reserve(static_cast<std::size_t>(max_lag + 1));
    for (int k = 0; k <= max_lag; ++k) {
        const Eigen::Index n = T - k;
        g.push_back(centered.bottomRows(n).transpose() * centered.topRows(n) / static_cast<double>(T));
    }
    return g;
}

// Block Toeplitz matrix with block (i, k) = Gamma(k - i), restricted to the
// listed variables at every lag.
Eigen::MatrixXd toeplitz_block(const std::vector<Eigen::MatrixXd>& g, int order, const std::vector<int>& vars) {
    const auto m = static_cast<Eigen::Index>(vars.size());
    Eigen::MatrixXd R(order * m, order * m);
    for (int i = 0; i < order; ++i) {
        for (int k = 0; k < order; ++k) {
            const int d = k - i;
            const Eigen::MatrixXd& block = g[static_cast<std::size_t>(std::abs(d))];
            for (Eigen::Index a = 0; a < m; ++a) {
                for (Eigen::Index b = 0; b < m; ++b) {
                    // Gamma(-d) = Gamma(d)'.
                    R(i * m + a, k * m + b) = d >= 0 ? block(vars[static_cast<std::size_t>(a)], vars[static_cast<std::size_t>(b)])
                                                     : block(vars[static_cast<std::size_t>(b)], vars[static_cast<std::size_t>(a)]);
                }
            }
        }
    }
    return R;
}

Eigen::VectorXd spd_solve(Eigen::MatrixXd R, const Eigen::VectorXd& rhs, bool& ridged) {
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) {
        ridged = true;
        R.diagonal().array() += kRidge;
        llt.compute(R);
        if (llt.info() != Eigen::Success) {
            return R.completeOrthogonalDecomposition().solve(rhs);
        }
    }
    return llt.solve(rhs);
}

struct VarSolution {
    std::vector<Eigen::MatrixXd> lags;
    Eigen::MatrixXd sigma;
    int params = 0;
};

VarSolution solve_var(const std::vector<Eigen::MatrixXd>& g, int order, const design::MaskMatrix& mask, bool& ridged) {
    VarSolution s;
    s.lags.assign(static_cast<std::size_t>(order), Eigen::MatrixXd::Zero(kStateDim, kStateDim));
    for (int e = 0; e < kStateDim && order > 0; ++e) {
        const std::vector<int> vars = mask.sources(e);
        const auto m = static_cast<Eigen::Index>(vars.size());
        if (m == 0) continue;
        const Eigen::MatrixXd R = toeplitz_block(g, order, vars);
        // Right-hand side: E[y_{e,t} y_{v,t-k}] = Gamma(k)(e, v).
        Eigen::VectorXd rhs(order * m);
        for (int k = 0; k < order; ++k) {
            for (Eigen::Index a = 0; a < m; ++a) rhs(k * m + a) = g[static_cast<std::size_t>(k + 1)](e, vars[static_cast<std::size_t>(a)]);
        }
        const Eigen::VectorXd coef = spd_solve(R, rhs, ridged);
        for (int k = 0; k < order; ++k) {
            for (Eigen::Index a = 0; a < m; ++a) s.lags[static_cast<std::size_t>(k)](e, vars[static_cast<std::size_t>(a)]) = coef(k * m + a);
        }
        s.params += static_cast<int>(order * m);
    }
    s.sigma = g[0];
    for (int k = 0; k < order; ++k) s.sigma -= s.lags[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k + 1)].transpose();
    s.sigma = 0.5 * (s.sigma + s.sigma.transpose());
    return s;
}

double log_det(const Eigen::MatrixXd& sigma, bool& ridged) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    Eigen::MatrixXd s = sigma;
    if (llt.info() != Eigen::Success) {
        ridged = true;
        s.diagonal().array() += kRidge;
        llt.compute(s);
        if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void finish(BaselineModel& model) {
    model.spectral_radius = companion_spectral_radius(model.lag_matrices);
    model.stable = model.spectral_radius < 1.0;
    if (!model.stable) {
        model.warnings.push_back("companion spectral radius " + std::to_string(model.spectral_radius) +
                                 " >= 1: the fitted recursion is not stable");
    }
    if (model.ridge_applied) {
        model.warnings.push_back("singular autocovariance: diagonal ridge 1e-10 applied");
    }
}

}  // namespace

std::string_view kind_name(Kind kind) {
    switch (kind) {
        case Kind::kPersistence: return "persistence";
        case Kind::kAr: return "ar";
        case Kind::kVar: return "var";
    }
    return "persistence";
}

Kind kind_from_name(std::string_view name) {
    if (name == "persistence") return Kind::kPersistence;
    if (name == "ar") return Kind::kAr;
    if (name == "var") return Kind::kVar;
    throw ConfigError("unknown baseline kind '" + std::string(name) + "'");
}

std::vector<double> autocovariances(std::span<const double> x, int max_lag) {
    const std::size_t n = x.size();
    std::vector<double> g(static_cast<std::size_t>(max_lag + 1), 0.0);
    for (int k = 0; k <= max_lag && static_cast<std::size_t>(k) < n; ++k) {
        double s = 0.0;
        for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) s += x[t] * x[t - static_cast<std::size_t>(k)];
        g[static_cast<std::size_t>(k)] = s / static_cast<double>(n);
    }
    return g;
}

LevinsonResult levinson_durbin(std::span<const double> gamma, int order) {
    if (order < 0 || static_cast<std::size_t>(order) >= gamma.size()) {
        throw ConfigError("Levinson-Durbin order exceeds the available autocovariances");
    }
    LevinsonResult r;
    r.innovation_variance = gamma[0];
    std::vector<double> phi;
    for (int p = 1; p <= order; ++p) {
        if (!(r.innovation_variance > 0.0)) break;
        double acc = gamma[static_cast<std::size_t>(p)];
        for (int j = 1; j < p; ++j) acc -= phi[static_cast<std::size_t>(j - 1)] * gamma[static_cast<std::size_t>(p - j)];
        const double kappa = acc / r.innovation_variance;
        std::vector<double> next(static_cast<std::size_t>(p));
        for (int j = 1; j < p; ++j) {
            next[static_cast<std::size_t>(j - 1)] = phi[static_cast<std::size_t>(j - 1)] - kappa * phi[static_cast<std::size_t>(p - j - 1)];
        }
        next[static_cast<std::size_t>(p - 1)] = kappa;
        phi = std::move(next);
        r.innovation_variance *= (1.0 - kappa * kappa);
    }
    phi.resize(static_cast<std::size_t>(order), 0.0);
    r.coefficients = std::move(phi);
    return r;
}

double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& lag_matrices) {
    const auto p = static_cast<Eigen::Index>(lag_matrices.size());
    if (p == 0) return 0.0;
    const Eigen::Index K = lag_matrices.front().rows();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(K * p, K * p);
    for (Eigen::Index i = 0; i < p; ++i) C.block(0, i * K, K, K) = lag_matrices[static_cast<std::size_t>(i)];
    if (p > 1) C.block(K, 0, K * (p - 1), K * (p - 1)).setIdentity();
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(C, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

BaselineModel fit_baseline(Kind kind, const StateMatrix& states, const BaselineOptions& options) {
    BaselineModel model;
    model.kind = kind;
    const Eigen::Index T = states.rows();
    if (T < 2) {
        throw InsufficientDataError("baseline fit needs at least two observations");
    }
    if (!states.values.allFinite()) {
        throw DataError("state matrix contains non-finite values");
    }
    if (kind == Kind::kPersistence) {
        return model;
    }
    const int default_max = kind == Kind::kAr ? 40 : 10;
    int p_max = options.p_max >= 0 ? options.p_max : default_max;
    if (options.fixed_order) {
        if (*options.fixed_order < 0) throw ConfigError("baseline order must be nonnegative");
        p_max = *options.fixed_order;
    }
    if (p_max >= T - 1) {
        throw InsufficientDataError("baseline order " + std::to_string(p_max) + " needs more than " +
                                    std::to_string(p_max + 1) + " observations");
    }
    model.means = states.values.colwise().mean().transpose();
    const Eigen::MatrixXd centered = states.values.rowwise() - model.means.transpose();
    const double n = static_cast<double>(T);

    if (kind == Kind::kAr) {
        std::array<std::vector<double>, kStateDim> coefs;
        for (int c = 0; c < kStateDim; ++c) {
            const Eigen::VectorXd x = centered.col(c);
            std::vector<double> gamma = autocovariances(std::span<const double>(x.data(), static_cast<std::size_t>(T)), p_max);
            if (!(gamma[0] > 0.0)) {
                gamma[0] += kRidge;
                model.ridge_applied = true;
            }
            int best = options.fixed_order ? p_max : 0;
            if (!options.fixed_order) {
                double best_aic = std::numeric_limits<double>::infinity();
                for (int p = 0; p <= p_max; ++p) {
                    const LevinsonResult r = levinson_durbin(gamma, p);
                    const double aic = n * std::log(std::max(r.innovation_variance, std::numeric_limits<double>::min())) + 2.0 * p;
                    if (aic < best_aic) {
                        best_aic = aic;
                        best = p;
                    }
                }
            }
            const LevinsonResult r = levinson_durbin(gamma, best);
            coefs[static_cast<std::size_t>(c)] = r.coefficients;
            model.component_orders[static_cast<std::size_t>(c)] = best;
            model.innovation_covariance(c, c) = r.innovation_variance;
            model.order = std::max(model.order, best);
        }
        model.lag_matrices.assign(static_cast<std::size_t>(model.order), Eigen::MatrixXd::Zero(kStateDim, kStateDim));
        for (int c = 0; c < kStateDim; ++c) {
            const auto& phi = coefs[static_cast<std::size_t>(c)];
            for (std::size_t k = 0; k < phi.size(); ++k) model.lag_matrices[k](c, c) = phi[k];
        }
        finish(model);
        return model;
    }

    const design::MaskMatrix mask = options.mask.value_or(design::MaskMatrix::full());
    const std::vector<Eigen::MatrixXd> g = cross_covariances(centered, p_max);
    int best = options.fixed_order ? p_max : 0;
    if (!options.fixed_order) {
        double best_aic = std::numeric_limits<double>::infinity();
        for (int p = 0; p <= p_max; ++p) {
            bool ridged = false;
            const VarSolution s = solve_var(g, p, mask, ridged);
            const double aic = n * log_det(s.sigma, ridged) + 2.0 * s.params;
            model.ridge_applied = model.ridge_applied || ridged;
            model.aic.push_back(aic);
            if (aic < best_aic) {
                best_aic = aic;
                best = p;
            }
        }
    }
    bool ridged = false;
    VarSolution s = solve_var(g, best, mask, ridged);
    model.ridge_applied = model.ridge_applied || ridged;
    model.order = best;
    model.lag_matrices = std::move(s.lags);
    model.innovation_covariance = s.sigma;
    model.component_orders.fill(best);
    finish(model);
    return model;
}

Eigen::MatrixXd baseline_forecast(const BaselineModel& model, const StateMatrix& states, Eigen::Index origin,
                                  int horizon) {
    if (horizon < 1) throw ConfigError("forecast horizon must be at least 1");
    if (origin < 0 || origin >= states.rows()) throw DataError("forecast origin lies outside the data");
    Eigen::MatrixXd out(horizon, kStateDim);
    if (model.kind == Kind::kPersistence) {
        for (int h = 0; h < horizon; ++h) out.row(h) = states.values.row(origin);
        return out;
    }
    const int p = model.order;
    if (origin + 1 < p) {
        throw InsufficientDataError("baseline forecast needs " + std::to_string(p) + " rows of history");
    }
    // Demeaned buffer: p history rows then the forecasts.
    Eigen::MatrixXd buf(p + horizon, kStateDim);
    for (int r = 0; r < p; ++r) buf.row(r) = states.values.row(origin + 1 - p + r) - model.means.transpose();
    for (int h = 0; h < horizon; ++h) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(kStateDim);
        for (int k = 1; k <= p; ++k) next.noalias() += model.lag_matrices[static_cast<std::size_t>(k - 1)] * buf.row(p + h - k).transpose();
        buf.row(p + h) = next.transpose();
        out.row(h) = (next + model.means).transpose();
    }
    return out;
}

}  // namespace windcast::baseline
