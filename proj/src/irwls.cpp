#include "windcast/irwls.hpp"

#include "windcast/error.hpp"
#include "windcast/parallel.hpp"
#include "windcast/stats.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace windcast::irwls {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Term> nonzero_terms(const design::ColumnCatalog& catalog, const Eigen::VectorXd& coefficients) {
    std::vector<Term> terms;
    for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
        if (coefficients(j) != 0.0) {
            terms.push_back({catalog[static_cast<std::size_t>(j)], coefficients(j)});
        }
    }
    return terms;
}

// Per-equation state carried between iterations.
struct EquationWork {
    design::DesignProblem mean;
    std::optional<std::size_t> mean_index;
    std::optional<std::size_t> variance_index;
    // Selected grid positions per iteration, and the position pinned after a
    // two-cycle is detected.
    std::vector<std::size_t> mean_selected;
    std::vector<std::size_t> variance_selected;
    std::optional<std::size_t> mean_pinned;
    std::optional<std::size_t> variance_pinned;
    Eigen::VectorXd weights;   // over mean rows
    Eigen::VectorXd residual;  // over mean rows
    Eigen::VectorXd sigma;     // over variance rows
    lasso::LassoFit mean_fit;
    lasso::LassoFit variance_fit;
    design::ColumnCatalog variance_catalog;
};

// AIC selection is discrete, so the re-weighting map can alternate between
// two grid positions forever. Once the last three selections read a, b, a the
// sparser of the two (smaller index, larger lambda) is kept from then on.
void pin_on_two_cycle(const std::vector<std::size_t>& history, std::optional<std::size_t>& pinned) {
    const std::size_t n = history.size();
    if (pinned || n < 3) return;
    if (history[n - 1] == history[n - 3] && history[n - 1] != history[n - 2]) {
        pinned = std::min(history[n - 1], history[n - 2]);
    }
}

}  // namespace

IrwlsOptions IrwlsOptions::defaults() {
    IrwlsOptions o;
    o.variance_lasso.fit_intercept = false;
    o.mean_lasso.aic_patience = kAicPatience;
    o.variance_lasso.aic_patience = kAicPatience;
    return o;
}

FittedModel fit(const StateMatrix& states, const design::LagConfig& lags, const basis::BasisConfig& basis,
                const design::MaskMatrix& mask, const IrwlsOptions& options) {
    lags.validate();
    basis.validate();
    if (options.max_iterations < 1 || !(options.tolerance > 0.0)) {
        throw ConfigError("irwls: need max_iterations >= 1 and a positive tolerance");
    }
    if (!states.values.allFinite()) {
        throw DataError("state matrix contains non-finite values");
    }
    const Eigen::Index T = states.rows();
    const Eigen::Index m0 = lags.max_mean_lag();
    const Eigen::Index t0 = m0 + lags.max_variance_lag();
    if (T - t0 < 2) {
        throw InsufficientDataError("need more than " + std::to_string(t0 + 1) +
                                    " observations for the lag structure (have " + std::to_string(T) + ")");
    }
    const Eigen::Index n_mean = T - m0;
    const Eigen::Index n_var = T - t0;
    const Eigen::Index skip = t0 - m0;

    FittedModel model;
    model.lags = lags;
    model.basis = basis;
    model.mask = mask;
    model.first_step = states.first_step;
    model.n_rows = T;
    model.mean_start = m0;
    model.variance_start = t0;
    model.thresholds = lags.alphas.empty() ? ThresholdSet{} : empirical_thresholds(states, lags.alphas);
    if (lags.alphas.empty()) {
        model.thresholds.values.resize(kStateDim, 0);
    }

    std::array<EquationWork, kStateDim> work;
    parallel_for(kStateDim, options.threads, [&](std::size_t e) {
        EquationWork& w = work[e];
        w.mean = design::build_mean_design(states, model.thresholds, lags, basis, mask, static_cast<int>(e), m0);
        w.weights = Eigen::VectorXd::Ones(n_mean);
        w.weights.head(skip).setZero();
        w.sigma = Eigen::VectorXd::Ones(n_var);
        w.variance_catalog = design::variance_catalog(lags, basis, static_cast<int>(e));
        model.equations[e].mean_columns = w.mean.catalog.size();
        model.equations[e].variance_columns = w.variance_catalog.size();
    });

    Eigen::MatrixXd residuals = Eigen::MatrixXd::Constant(T, kStateDim, kNaN);
    for (int K = 1; K <= options.max_iterations; ++K) {
        IterationRecord record;
        if (options.keep_history) {
            Eigen::MatrixXd used(n_var, kStateDim);
            for (int e = 0; e < kStateDim; ++e) used.col(e) = work[static_cast<std::size_t>(e)].weights.tail(n_var);
            model.weight_history.push_back(std::move(used));
        }
        // Step 2: weighted mean LASSO per equation.
        parallel_for(kStateDim, options.threads, [&](std::size_t e) {
            EquationWork& w = work[e];
            EquationModel& eq = model.equations[e];
            if (eq.failed) return;
            try {
                lasso::LassoProblem problem(w.mean.X, w.mean.y, w.weights);
                problem.intercept_column = 0;
                lasso::LassoOptions lo = options.mean_lasso;
                if (options.freeze_lambda && w.mean_index) lo.fixed_index = w.mean_index;
                if (w.mean_pinned) lo.fixed_index = w.mean_pinned;
                w.mean_fit = lasso::solve_path(problem, lo);
                if (!w.mean_index) w.mean_index = w.mean_fit.selected;
                w.mean_selected.push_back(w.mean_fit.selected);
                const Eigen::VectorXd zeta = w.mean_fit.selected_coefficients();
                w.residual = (w.mean.y - w.mean.X * zeta).array() - w.mean_fit.selected_intercept();
            } catch (const NumericalError& err) {
                eq.failed = true;
                eq.failure = std::string("mean fit: ") + err.what();
            }
        });
        for (int e = 0; e < kStateDim; ++e) {
            const auto& w = work[static_cast<std::size_t>(e)];
            if (!model.equations[static_cast<std::size_t>(e)].failed) residuals.col(e).tail(n_mean) = w.residual;
        }

        // Step 3: nonnegative LASSO of |residual| on the shock design.
        Eigen::MatrixXd sigma_prev(n_var, kStateDim);
        for (int e = 0; e < kStateDim; ++e) sigma_prev.col(e) = work[static_cast<std::size_t>(e)].sigma;
        parallel_for(kStateDim, options.threads, [&](std::size_t e) {
            EquationWork& w = work[e];
            EquationModel& eq = model.equations[e];
            if (eq.failed) return;
            try {
                design::DesignProblem var = design::build_variance_design(residuals, states.first_step, lags, basis,
                                                                          static_cast<int>(e), t0);
                if (var.y.maxCoeff() <= 0.0) {
                    throw DegenerateProblemError("residuals vanish identically");
                }
                const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n_var);
                lasso::LassoProblem problem(var.X, var.y, ones);
                problem.nonnegative = true;
                problem.unpenalized = {0};
                lasso::LassoOptions lo = options.variance_lasso;
                if (options.freeze_lambda && w.variance_index) lo.fixed_index = w.variance_index;
                if (w.variance_pinned) lo.fixed_index = w.variance_pinned;
                w.variance_fit = lasso::solve_path(problem, lo);
                if (!w.variance_index) w.variance_index = w.variance_fit.selected;
                w.variance_selected.push_back(w.variance_fit.selected);
                const Eigen::VectorXd nu = w.variance_fit.selected_coefficients();
                const double sd = std::sqrt((var.y.array() - var.y.mean()).square().mean());
                eq.sigma_floor = std::max(options.sigma_floor_factor * sd, std::numeric_limits<double>::min());
                w.sigma = ((var.X * nu).array() + w.variance_fit.selected_intercept()).cwiseMax(eq.sigma_floor);
                // Step 4: weights for the next mean fit.
                w.weights.tail(n_var) = w.sigma.array().square().inverse();
            } catch (const NumericalError& err) {
                eq.failed = true;
                eq.failure = std::string("standard-deviation fit: ") + err.what();
            }
        });

        // Step 5: convergence of the stacked sigma path.
        double ss = 0.0;
        for (int e = 0; e < kStateDim; ++e) {
            const auto& w = work[static_cast<std::size_t>(e)];
            if (model.equations[static_cast<std::size_t>(e)].failed) continue;
            ss += (w.sigma - sigma_prev.col(e)).squaredNorm();
            record.mean_lambda[static_cast<std::size_t>(e)] = w.mean_fit.selected_lambda();
            record.variance_lambda[static_cast<std::size_t>(e)] = w.variance_fit.selected_lambda();
            record.mean_active[static_cast<std::size_t>(e)] = w.mean_fit.active_sizes[w.mean_fit.selected];
            record.variance_active[static_cast<std::size_t>(e)] =
                w.variance_fit.active_sizes[w.variance_fit.selected];
            record.mean_converged[static_cast<std::size_t>(e)] = w.mean_fit.converged;
        }
        record.delta = std::sqrt(ss / static_cast<double>(kStateDim * n_var));
        model.trace.push_back(record);
        model.iterations = K;
        if (options.keep_history) {
            Eigen::MatrixXd produced(n_var, kStateDim);
            for (int e = 0; e < kStateDim; ++e) produced.col(e) = work[static_cast<std::size_t>(e)].sigma;
            model.sigma_history.push_back(std::move(produced));
        }
        if (record.delta < options.tolerance) {
            model.converged = true;
            break;
        }
        for (auto& w : work) {
            pin_on_two_cycle(w.mean_selected, w.mean_pinned);
            pin_on_two_cycle(w.variance_selected, w.variance_pinned);
        }
    }

    model.residuals = residuals;
    model.sigma = Eigen::MatrixXd::Constant(T, kStateDim, kNaN);
    model.standardized = Eigen::MatrixXd::Zero(n_var, kStateDim);
    for (int e = 0; e < kStateDim; ++e) {
        const auto& w = work[static_cast<std::size_t>(e)];
        EquationModel& eq = model.equations[static_cast<std::size_t>(e)];
        if (eq.failed) {
            model.residuals.col(e).setConstant(kNaN);
            continue;
        }
        model.sigma.col(e).tail(n_var) = w.sigma;
        model.standardized.col(e) = residuals.col(e).tail(n_var).cwiseQuotient(w.sigma);
        eq.mean_terms = nonzero_terms(w.mean.catalog, w.mean_fit.selected_coefficients());
        eq.variance_terms = nonzero_terms(w.variance_catalog, w.variance_fit.selected_coefficients());
        eq.mean_lambda = w.mean_fit.selected_lambda();
        eq.variance_lambda = w.variance_fit.selected_lambda();
    }
    return model;
}

AcfSummary summarize_acf(std::span<const double> x, int max_lag) {
    AcfSummary s;
    const int lags = std::min<int>(max_lag, static_cast<int>(x.size()) - 1);
    s.values = stats::acf(x, std::max(lags, 0));
    s.band = x.empty() ? 0.0 : 1.96 / std::sqrt(static_cast<double>(x.size()));
    if (!s.values.empty()) {
        std::size_t outside = 0;
        for (const double r : s.values) {
            if (std::abs(r) > s.band) ++outside;
        }
        s.fraction_outside = static_cast<double>(outside) / static_cast<double>(s.values.size());
    }
    return s;
}

DiagnosticsReport residual_diagnostics(const FittedModel& model, int max_lag) {
    DiagnosticsReport report;
    const Eigen::MatrixXd& eta = model.standardized;
    report.n = eta.rows();
    for (int e = 0; e < kStateDim; ++e) {
        if (model.equations[static_cast<std::size_t>(e)].failed) continue;
        const Eigen::VectorXd col = eta.col(e);
        const Eigen::VectorXd abs_col = col.cwiseAbs();
        report.equations[static_cast<std::size_t>(e)].residual =
            summarize_acf(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), max_lag);
        report.equations[static_cast<std::size_t>(e)].absolute = summarize_acf(
            std::span<const double>(abs_col.data(), static_cast<std::size_t>(abs_col.size())), max_lag);
    }
    report.ccf_lag = std::max(0, std::min<int>(max_lag, static_cast<int>(report.n) - 1));
    if (report.n > 1 && !model.equations[kP].failed && !model.equations[kW].failed) {
        const Eigen::VectorXd p = eta.col(kP);
        const Eigen::VectorXd w = eta.col(kW);
        report.pressure_speed_ccf =
            stats::ccf(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                       std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), report.ccf_lag);
    }
    return report;
}

}  // namespace windcast::irwls
