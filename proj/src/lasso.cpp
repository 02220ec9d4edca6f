#include "windcast/lasso.hpp"

#include "windcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace windcast::lasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kSupportStepFirst = 5;
constexpr int kSupportStepRetries = 4;
constexpr int kKktRounds = 50;

// Column statistics shared by the solver and the KKT check.
struct Scaling {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    std::vector<std::uint8_t> frozen;
    std::vector<std::uint8_t> penalized;
    double total_weight = 0.0;
    double y_mean = 0.0;
    Eigen::Index n_obs = 0;
};

void check_inputs(const LassoProblem& problem) {
    const Eigen::Index n = problem.X.rows();
    if (problem.y.size() != n || problem.weights.size() != n) {
        throw ConfigError("lasso: X, y and weights disagree on the number of rows");
    }
    if (!problem.X.allFinite() || !problem.y.allFinite() || !problem.weights.allFinite()) {
        throw NumericalError("lasso: non-finite value in design, response or weights");
    }
    if ((problem.weights.array() < 0.0).any()) {
        throw NumericalError("lasso: negative weight");
    }
}

std::vector<std::uint8_t> penalized_flags(Eigen::Index p, const std::vector<Eigen::Index>& unpenalized,
                                          Eigen::Index intercept_column, bool fit_intercept) {
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(p), 1);
    for (const Eigen::Index j : unpenalized) {
        if (j < 0 || j >= p) {
            throw ConfigError("lasso: unpenalized column index out of range");
        }
        flags[static_cast<std::size_t>(j)] = 0;
    }
    if (intercept_column >= p) {
        throw ConfigError("lasso: intercept column index out of range");
    }
    if (fit_intercept && intercept_column >= 0) {
        flags[static_cast<std::size_t>(intercept_column)] = 0;
    }
    return flags;
}

Scaling compute_scaling(const LassoProblem& problem, const LassoOptions& options) {
    const auto& X = problem.X;
    const auto& w = problem.weights;
    const Eigen::Index p = X.cols();
    Scaling s;
    s.total_weight = w.sum();
    s.n_obs = (w.array() > 0.0).count();
    if (s.total_weight <= 0.0 || s.n_obs < 2) {
        throw DegenerateProblemError("lasso: fewer than two rows carry positive weight");
    }
    s.penalized = penalized_flags(p, problem.unpenalized, problem.intercept_column, options.fit_intercept);
    s.mean = Eigen::VectorXd::Zero(p);
    s.scale = Eigen::VectorXd::Ones(p);
    s.frozen.assign(static_cast<std::size_t>(p), 0);
    if (options.fit_intercept) {
        s.mean = (X.transpose() * w) / s.total_weight;
        s.y_mean = problem.y.dot(w) / s.total_weight;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto centered = X.col(j).array() - s.mean(j);
        const double var = (centered.square() * w.array()).sum() / s.total_weight;
        const double magnitude = X.col(j).cwiseAbs().maxCoeff();
        const double sd = std::sqrt(std::max(var, 0.0));
        const bool is_intercept = options.fit_intercept && j == problem.intercept_column;
        if (is_intercept || sd <= 1e-10 * magnitude || sd == 0.0) {
            s.frozen[static_cast<std::size_t>(j)] = 1;
            s.scale(j) = 1.0;
            continue;
        }
        s.scale(j) = options.standardize ? sd : 1.0;
    }
    return s;
}

// Gram engine: g = c - G beta maintained incrementally.
class GramEngine {
public:
    GramEngine(Eigen::MatrixXd gram, Eigen::VectorXd cross, double yy)
        : G_(std::move(gram)), c_(std::move(cross)), g_(c_), yy_(yy) {}

    [[nodiscard]] double gradient(Eigen::Index j) const { return g_(j); }
    [[nodiscard]] double curvature(Eigen::Index j) const { return G_(j, j); }
    void apply(Eigen::Index j, double delta) { g_.noalias() -= delta * G_.col(j); }
    /// Recomputes the gradient from scratch, removing accumulated rounding.
    void refresh(const Eigen::VectorXd& beta) { g_.noalias() = c_ - G_ * beta; }
    [[nodiscard]] double rss(const Eigen::VectorXd& beta) const {
        return std::max(0.0, yy_ - beta.dot(c_) - beta.dot(g_));
    }
    [[nodiscard]] double response_ss() const { return yy_; }
    [[nodiscard]] Eigen::MatrixXd block(const std::vector<Eigen::Index>& cols) const {
        const auto m = static_cast<Eigen::Index>(cols.size());
        Eigen::MatrixXd out(m, m);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) out(a, b) = G_(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
        }
        return out;
    }

private:
    Eigen::MatrixXd G_;
    Eigen::VectorXd c_;
    Eigen::VectorXd g_;
    double yy_;
};

// Residual engine: r = y~ - X~ beta maintained incrementally.
class DenseEngine {
public:
    DenseEngine(Eigen::MatrixXd xs, Eigen::VectorXd ys, Eigen::VectorXd w)
        : Xs_(std::move(xs)), y_(std::move(ys)), r_(y_), w_(std::move(w)) {
        diag_.resize(Xs_.cols());
        for (Eigen::Index j = 0; j < Xs_.cols(); ++j) {
            diag_(j) = (Xs_.col(j).array().square() * w_.array()).sum();
        }
        yy_ = (r_.array().square() * w_.array()).sum();
    }

    [[nodiscard]] double gradient(Eigen::Index j) const {
        return (Xs_.col(j).array() * w_.array() * r_.array()).sum();
    }
    [[nodiscard]] double curvature(Eigen::Index j) const { return diag_(j); }
    void apply(Eigen::Index j, double delta) { r_.noalias() -= delta * Xs_.col(j); }
    void refresh(const Eigen::VectorXd& beta) { r_.noalias() = y_ - Xs_ * beta; }
    [[nodiscard]] double rss(const Eigen::VectorXd& /*beta*/) const {
        return (r_.array().square() * w_.array()).sum();
    }
    [[nodiscard]] double response_ss() const { return yy_; }
    [[nodiscard]] Eigen::MatrixXd block(const std::vector<Eigen::Index>& cols) const {
        Eigen::MatrixXd xa(Xs_.rows(), static_cast<Eigen::Index>(cols.size()));
        const Eigen::ArrayXd sw = w_.array().sqrt();
        for (std::size_t a = 0; a < cols.size(); ++a) xa.col(static_cast<Eigen::Index>(a)) = Xs_.col(cols[a]).array() * sw;
        return xa.transpose() * xa;
    }

private:
    Eigen::MatrixXd Xs_;
    Eigen::VectorXd y_;
    Eigen::VectorXd r_;
    Eigen::VectorXd w_;
    Eigen::VectorXd diag_;
    double yy_ = 0.0;
};

struct PathSettings {
    bool nonnegative = false;
    std::vector<double> lambda_grid;
};

std::vector<double> make_grid(const PathSettings& settings, const LassoOptions& options, double lambda_max) {
    if (!settings.lambda_grid.empty()) {
        for (std::size_t k = 0; k < settings.lambda_grid.size(); ++k) {
            const double v = settings.lambda_grid[k];
            if (!(v > 0.0) || !std::isfinite(v) || (k > 0 && !(v < settings.lambda_grid[k - 1]))) {
                throw ConfigError("lasso: lambda grid must be positive and strictly decreasing");
            }
        }
        return settings.lambda_grid;
    }
    if (options.n_lambda < 1 || !(options.lambda_min_ratio > 0.0) || options.lambda_min_ratio >= 1.0) {
        throw ConfigError("lasso: need n_lambda >= 1 and 0 < lambda_min_ratio < 1");
    }
    const double top = lambda_max > 0.0 ? lambda_max : 1.0;
    std::vector<double> grid(static_cast<std::size_t>(options.n_lambda));
    for (int k = 0; k < options.n_lambda; ++k) {
        const double frac = options.n_lambda == 1 ? 0.0 : static_cast<double>(k) / (options.n_lambda - 1);
        grid[static_cast<std::size_t>(k)] = top * std::pow(options.lambda_min_ratio, frac);
    }
    return grid;
}

std::size_t select_aic_prefix(const std::vector<double>& aic, std::size_t count) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < count; ++k) {
        if (aic[k] < aic[best]) best = k;
    }
    return best;
}

void truncate(LassoFit& fit, std::size_t count) {
    fit.lambdas.resize(count);
    fit.coefficients.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(count));
    fit.intercepts.resize(count);
    fit.active_sizes.resize(count);
    fit.weighted_rss.resize(count);
    fit.aic.resize(count);
    fit.sweeps.resize(count);
}

template <class Engine>
LassoFit run_path(Engine& engine, const Scaling& scaling, const PathSettings& settings,
                  const LassoOptions& options, Eigen::Index intercept_column, double intercept_value) {
    const Eigen::Index p = scaling.mean.size();
    const double W = scaling.total_weight;
    const double y_sd = std::sqrt(engine.response_ss() / W);
    const double change_scale = y_sd > 0.0 ? y_sd : 1.0;

    std::vector<Eigen::Index> free_columns;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!scaling.frozen[static_cast<std::size_t>(j)]) free_columns.push_back(j);
    }
    std::vector<double> unit(static_cast<std::size_t>(p), 0.0);
    for (const Eigen::Index j : free_columns) {
        unit[static_cast<std::size_t>(j)] = std::sqrt(engine.curvature(j) / W);
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    LassoFit fit;
    fit.n_obs = scaling.n_obs;
    fit.frozen = scaling.frozen;
    fit.intercept_fitted = options.fit_intercept;

    auto penalty_of = [&](Eigen::Index j, double lambda) {
        return scaling.penalized[static_cast<std::size_t>(j)] ? lambda : 0.0;
    };
    auto update = [&](Eigen::Index j, double lambda) {
        const double d = 2.0 * engine.curvature(j);
        const double rho = 2.0 * engine.gradient(j) + d * beta(j);
        const double next = coordinate_update(rho, d, penalty_of(j, lambda), settings.nonnegative);
        const double delta = next - beta(j);
        if (delta != 0.0) {
            engine.apply(j, delta);
            beta(j) = next;
        }
        return std::abs(delta) * unit[static_cast<std::size_t>(j)] / change_scale;
    };
    auto objective = [&](double lambda) {
        double pen = 0.0;
        for (const Eigen::Index j : free_columns) pen += penalty_of(j, lambda) * std::abs(beta(j));
        return engine.rss(beta) + (std::isfinite(lambda) ? pen : 0.0);
    };

    // Newton step on the current support with signs held fixed: solves the
    // stationarity equations of the smooth restricted problem and moves
    // toward that solution until the first coefficient reaches zero. The
    // objective cannot increase. Returns true when the full step was taken.
    auto support_step = [&](double lambda) {
        std::vector<Eigen::Index> support;
        for (const Eigen::Index j : free_columns) {
            const bool pen = scaling.penalized[static_cast<std::size_t>(j)];
            if (settings.nonnegative ? beta(j) > 0.0 : (beta(j) != 0.0 || !pen)) support.push_back(j);
        }
        if (support.empty()) return false;
        const auto m = static_cast<Eigen::Index>(support.size());
        Eigen::VectorXd rhs(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            const Eigen::Index j = support[static_cast<std::size_t>(a)];
            const double pen = penalty_of(j, lambda);
            rhs(a) = engine.gradient(j) - (pen > 0.0 ? 0.5 * pen * (beta(j) > 0.0 ? 1.0 : -1.0) : 0.0);
        }
        const Eigen::MatrixXd G = engine.block(support);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
        if (ldlt.info() != Eigen::Success) return false;
        const Eigen::VectorXd delta = ldlt.solve(rhs);
        if (!delta.allFinite() || (G * delta - rhs).norm() > 1e-9 * std::max(rhs.norm(), 1e-300)) return false;
        double t = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index a = 0; a < m; ++a) {
            const Eigen::Index j = support[static_cast<std::size_t>(a)];
            const bool sign_constrained =
                settings.nonnegative || scaling.penalized[static_cast<std::size_t>(j)];
            if (!sign_constrained || beta(j) == 0.0) continue;
            const double next = beta(j) + delta(a);
            if ((beta(j) > 0.0 && next <= 0.0) || (beta(j) < 0.0 && next >= 0.0)) {
                const double tj = -beta(j) / delta(a);
                if (tj < t) {
                    t = tj;
                    blocking = a;
                }
            }
        }
        for (Eigen::Index a = 0; a < m; ++a) {
            const Eigen::Index j = support[static_cast<std::size_t>(a)];
            const double next = a == blocking ? 0.0 : beta(j) + t * delta(a);
            const double d = next - beta(j);
            if (d != 0.0) {
                engine.apply(j, d);
                beta(j) = next;
            }
        }
        return blocking < 0;
    };

    // Largest violation of the optimality conditions per unit weight,
    // relative to the response's standard deviation.
    auto kkt = [&](double lambda) {
        engine.refresh(beta);
        double worst = 0.0;
        for (const Eigen::Index j : free_columns) {
            const double g = 2.0 * engine.gradient(j);
            const double pen = penalty_of(j, lambda);
            double v = 0.0;
            if (beta(j) > 0.0) {
                v = std::abs(g - pen);
            } else if (beta(j) < 0.0) {
                v = std::abs(g + pen);
            } else if (settings.nonnegative) {
                v = std::max(0.0, g - pen);
            } else {
                v = std::max(0.0, std::abs(g) - pen);
            }
            worst = std::max(worst, v);
        }
        return worst / (W * change_scale);
    };

    // Coordinate descent to tolerance at one lambda, cycling on the active set
    // between full sweeps, with periodic support steps to speed up correlated
    // designs. Returns the number of sweeps.
    auto descend = [&](double lambda, std::size_t path_index) {
        int sweeps = 0;
        int kkt_rounds = 0;
        std::vector<Eigen::Index> active;
        while (true) {
            double change = 0.0;
            for (const Eigen::Index j : free_columns) change = std::max(change, update(j, lambda));
            ++sweeps;
            if (options.record_sweeps) fit.sweep_objectives.emplace_back(path_index, objective(lambda));
            if (change < options.tolerance) {
                // Small steps can still leave the optimality conditions
                // loose on flat directions; polish on the support.
                if (!std::isfinite(lambda) || kkt_rounds >= kKktRounds || kkt(lambda) <= options.kkt_tolerance) {
                    return sweeps;
                }
                ++kkt_rounds;
                (void)support_step(lambda);
                continue;
            }
            if (sweeps >= options.max_sweeps) break;
            active.clear();
            for (const Eigen::Index j : free_columns) {
                if (beta(j) != 0.0 || !scaling.penalized[static_cast<std::size_t>(j)]) active.push_back(j);
            }
            int inner_sweeps = 0;
            int next_support_step = kSupportStepFirst;
            while (sweeps < options.max_sweeps) {
                double inner = 0.0;
                for (const Eigen::Index j : active) inner = std::max(inner, update(j, lambda));
                ++sweeps;
                ++inner_sweeps;
                if (options.record_sweeps) fit.sweep_objectives.emplace_back(path_index, objective(lambda));
                if (inner < options.tolerance) break;
                if (inner_sweeps == next_support_step) {
                    for (int attempt = 0; attempt < kSupportStepRetries && !support_step(lambda); ++attempt) {
                    }
                    next_support_step *= 2;
                }
            }
            if (sweeps >= options.max_sweeps) break;
        }
        fit.converged = false;
        return sweeps;
    };

    // Fit the unpenalized columns alone, then find the smallest lambda that
    // keeps every penalized coefficient at zero.
    bool any_unpenalized = false;
    for (const Eigen::Index j : free_columns) {
        if (!scaling.penalized[static_cast<std::size_t>(j)]) any_unpenalized = true;
    }
    if (any_unpenalized) {
        (void)descend(kInf, 0);
        fit.sweep_objectives.clear();
    }
    double lambda_max = 0.0;
    for (const Eigen::Index j : free_columns) {
        if (!scaling.penalized[static_cast<std::size_t>(j)]) continue;
        const double g = 2.0 * engine.gradient(j);
        lambda_max = std::max(lambda_max, settings.nonnegative ? g : std::abs(g));
    }
    fit.lambda_max = lambda_max;
    fit.lambdas = make_grid(settings, options, lambda_max);
    if (options.fixed_index && *options.fixed_index + 1 < fit.lambdas.size()) {
        fit.lambdas.resize(*options.fixed_index + 1);
    }

    const std::size_t L = fit.lambdas.size();
    fit.coefficients.resize(p, static_cast<Eigen::Index>(L));
    fit.intercepts.resize(L);
    fit.active_sizes.resize(L);
    fit.weighted_rss.resize(L);
    fit.aic.resize(L);
    fit.sweeps.resize(L);
    fit.penalty_factors = Eigen::VectorXd::Zero(p);
    for (const Eigen::Index j : free_columns) {
        if (scaling.penalized[static_cast<std::size_t>(j)]) {
            fit.penalty_factors(j) = options.standardize ? scaling.scale(j) : 1.0;
        }
    }

    const double n = static_cast<double>(scaling.n_obs);
    for (std::size_t k = 0; k < L; ++k) {
        // At lambda_max (up to rounding) every penalized coefficient is zero.
        fit.sweeps[k] = fit.lambdas[k] >= lambda_max * (1.0 - 1e-12) ? 0 : descend(fit.lambdas[k], k);
        Eigen::VectorXd zeta = Eigen::VectorXd::Zero(p);
        int df = options.fit_intercept ? 1 : 0;
        for (const Eigen::Index j : free_columns) {
            zeta(j) = beta(j) / scaling.scale(j);
            if (zeta(j) != 0.0) ++df;
        }
        double b0 = options.fit_intercept ? scaling.y_mean - scaling.mean.dot(zeta) : 0.0;
        if (intercept_column >= 0 && options.fit_intercept) {
            zeta(intercept_column) = b0 / intercept_value;
            b0 = 0.0;
        }
        const auto col = static_cast<Eigen::Index>(k);
        fit.coefficients.col(col) = zeta;
        fit.intercepts[k] = b0;
        fit.active_sizes[k] = df;
        fit.weighted_rss[k] = engine.rss(beta);
        const double rss = std::max(fit.weighted_rss[k], std::numeric_limits<double>::min());
        fit.aic[k] = n * std::log(rss / n) + 2.0 * df;
        if (options.aic_patience > 0 && !options.fixed_index && k + 1 < L) {
            const std::size_t best = select_aic_prefix(fit.aic, k + 1);
            if (k - best >= static_cast<std::size_t>(options.aic_patience)) {
                truncate(fit, k + 1);
                break;
            }
        }
    }
    fit.selected = options.fixed_index ? L - 1 : select_aic(fit);
    return fit;
}

double intercept_column_value(const LassoProblem& problem, const LassoOptions& options) {
    if (!options.fit_intercept || problem.intercept_column < 0) {
        return 1.0;
    }
    const auto col = problem.X.col(problem.intercept_column);
    const double v = col(0);
    if (v == 0.0 || (col.array() != v).any()) {
        throw ConfigError("lasso: intercept column must be a nonzero constant");
    }
    return v;
}

Eigen::MatrixXd standardized_design(const LassoProblem& problem, const Scaling& s) {
    Eigen::MatrixXd xs(problem.X.rows(), problem.X.cols());
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
        if (s.frozen[static_cast<std::size_t>(j)]) {
            xs.col(j).setZero();
        } else {
            xs.col(j) = (problem.X.col(j).array() - s.mean(j)) / s.scale(j);
        }
    }
    return xs;
}

}  // namespace

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

double coordinate_update(double rho, double d, double lambda, bool nonnegative) {
    if (d <= 0.0) {
        return 0.0;
    }
    if (nonnegative) {
        return std::max(0.0, (rho - lambda) / d);
    }
    return soft_threshold(rho, lambda) / d;
}

LassoFit solve_path(const LassoProblem& problem, const LassoOptions& options) {
    check_inputs(problem);
    const Scaling scaling = compute_scaling(problem, options);
    const double icv = intercept_column_value(problem, options);
    const Eigen::Index p = problem.X.cols();
    const bool use_gram = options.mode == SolverMode::kGram ||
                          (options.mode == SolverMode::kAuto && p <= options.gram_max_columns);

    Eigen::MatrixXd xs = standardized_design(problem, scaling);
    const Eigen::VectorXd ys = problem.y.array() - scaling.y_mean;
    const PathSettings settings{problem.nonnegative, problem.lambda_grid};

    LassoFit fit;
    if (use_gram) {
        const Eigen::VectorXd sw = problem.weights.cwiseSqrt();
        Eigen::MatrixXd xw = xs.array().colwise() * sw.array();
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
        gram = gram.selfadjointView<Eigen::Lower>();
        const Eigen::VectorXd wy = ys.cwiseProduct(problem.weights);
        Eigen::VectorXd cross = xs.transpose() * wy;
        const double yy = ys.dot(wy);
        xw.resize(0, 0);
        xs.resize(0, 0);
        GramEngine engine(std::move(gram), std::move(cross), yy);
        fit = run_path(engine, scaling, settings, options, problem.intercept_column, icv);
        fit.mode_used = SolverMode::kGram;
    } else {
        DenseEngine engine(std::move(xs), ys, problem.weights);
        fit = run_path(engine, scaling, settings, options, problem.intercept_column, icv);
        fit.mode_used = SolverMode::kDense;
    }
    return fit;
}

std::size_t select_aic(const LassoFit& fit) { return select_aic_prefix(fit.aic, fit.aic.size()); }

double objective_value(const LassoProblem& problem, const LassoFit& fit, std::size_t k) {
    const auto col = static_cast<Eigen::Index>(k);
    const Eigen::VectorXd zeta = fit.coefficients.col(col);
    const Eigen::VectorXd r = (problem.y - problem.X * zeta).array() - fit.intercepts[k];
    return (r.array().square() * problem.weights.array()).sum() +
           fit.lambdas[k] * fit.penalty_factors.cwiseProduct(zeta).cwiseAbs().sum();
}

double kkt_violation(const LassoProblem& problem, const LassoFit& fit, std::size_t k) {
    check_inputs(problem);
    const auto col = static_cast<Eigen::Index>(k);
    const Eigen::VectorXd zeta = fit.coefficients.col(col);
    const Eigen::VectorXd r = (problem.y - problem.X * zeta).array() - fit.intercepts[k];
    const Eigen::VectorXd wr = r.cwiseProduct(problem.weights);
    const double W = problem.weights.sum();
    const double lambda = fit.lambdas[k];
    const bool has_intercept = fit.intercept_fitted;

    double worst = has_intercept ? std::abs(2.0 * wr.sum()) / W : 0.0;
    for (Eigen::Index j = 0; j < zeta.size(); ++j) {
        if (fit.frozen[static_cast<std::size_t>(j)]) continue;
        const double mean = has_intercept ? problem.X.col(j).dot(problem.weights) / W : 0.0;
        const auto centered = problem.X.col(j).array() - mean;
        const double sd = std::sqrt((centered.square() * problem.weights.array()).sum() / W);
        const double pf = fit.penalty_factors(j);
        // Work in units of the column's standard deviation.
        const double g = 2.0 * (centered * wr.array()).sum() / sd;
        const double pen = pf > 0.0 ? lambda * pf / sd : 0.0;
        const double b = zeta(j);
        double v = 0.0;
        if (b > 0.0) {
            v = std::abs(g - pen);
        } else if (b < 0.0) {
            v = std::abs(g + pen);
        } else if (problem.nonnegative) {
            v = std::max(0.0, g - pen);
        } else {
            v = std::max(0.0, std::abs(g) - pen);
        }
        worst = std::max(worst, v / W);
    }
    return worst;
}

MomentAccumulator::MomentAccumulator(Eigen::Index columns)
    : swx_(Eigen::VectorXd::Zero(columns)),
      swxy_(Eigen::VectorXd::Zero(columns)),
      sxx_(Eigen::MatrixXd::Zero(columns, columns)) {}

void MomentAccumulator::add(std::span<const double> x, double y, double weight) {
    const Eigen::Index p = columns();
    if (static_cast<Eigen::Index>(x.size()) != p) {
        throw ConfigError("moment accumulator: row width mismatch");
    }
    if (!std::isfinite(y) || !std::isfinite(weight) || weight < 0.0) {
        throw NumericalError("moment accumulator: invalid response or weight");
    }
    const Eigen::Map<const Eigen::VectorXd> row(x.data(), p);
    if (!row.allFinite()) {
        throw NumericalError("moment accumulator: non-finite regressor");
    }
    ++rows_;
    if (weight == 0.0) return;
    sw += weight;
    swy += weight * y;
    swyy += weight * y * y;
    swx_.noalias() += weight * row;
    swxy_.noalias() += (weight * y) * row;
    sxx_.selfadjointView<Eigen::Upper>().rankUpdate(row, weight);
}

LassoFit solve_path(const MomentAccumulator& m, const MomentProblemSpec& spec, const LassoOptions& options) {
    const Eigen::Index p = m.columns();
    if (!(m.sw > 0.0) || m.rows() < 2) {
        throw DegenerateProblemError("lasso: fewer than two weighted rows accumulated");
    }
    Scaling s;
    s.total_weight = m.sw;
    s.n_obs = m.rows();
    s.penalized = penalized_flags(p, spec.unpenalized, spec.intercept_column, options.fit_intercept);
    s.mean = Eigen::VectorXd::Zero(p);
    s.scale = Eigen::VectorXd::Ones(p);
    s.frozen.assign(static_cast<std::size_t>(p), 0);
    const Eigen::MatrixXd raw = m.swxx().selfadjointView<Eigen::Upper>();
    if (options.fit_intercept) {
        s.mean = m.swx() / m.sw;
        s.y_mean = m.swy / m.sw;
    }
    Eigen::MatrixXd cov = raw - m.sw * s.mean * s.mean.transpose();
    Eigen::VectorXd cross = m.swxy() - m.sw * s.y_mean * s.mean;
    const double yy = std::max(0.0, m.swyy - m.sw * s.y_mean * s.y_mean);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = cov(j, j) / m.sw;
        const double raw_ms = raw(j, j) / m.sw;
        const bool is_intercept = options.fit_intercept && j == spec.intercept_column;
        if (is_intercept || var <= 1e-12 * raw_ms || var <= 0.0) {
            s.frozen[static_cast<std::size_t>(j)] = 1;
            continue;
        }
        s.scale(j) = options.standardize ? std::sqrt(var) : 1.0;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (s.frozen[static_cast<std::size_t>(j)]) {
            cov.row(j).setZero();
            cov.col(j).setZero();
            cross(j) = 0.0;
        }
    }
    const Eigen::VectorXd inv = s.scale.cwiseInverse();
    Eigen::MatrixXd gram = inv.asDiagonal() * cov * inv.asDiagonal();
    cross = cross.cwiseProduct(inv);
    GramEngine engine(std::move(gram), std::move(cross), yy);
    const PathSettings settings{spec.nonnegative, spec.lambda_grid};
    LassoFit fit = run_path(engine, s, settings, options, spec.intercept_column, 1.0);
    fit.mode_used = SolverMode::kGram;
    return fit;
}

}  // namespace windcast::lasso
