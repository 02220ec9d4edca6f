#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace windcast::lasso {

/// How the coordinate descent touches the data. kGram precomputes the
/// weighted Gram matrix (p^2 memory, O(p) per coordinate); kDense keeps a
/// residual vector (O(n) per coordinate). kAuto picks kGram for p up to
/// gram_max_columns.
enum class SolverMode { kAuto, kDense, kGram };

struct LassoOptions {
    int n_lambda = 100;
    double lambda_min_ratio = 1e-4;
    /// Sweeps stop when the largest coefficient change, measured on the
    /// standardized scale and relative to the response's weighted standard
    /// deviation, falls below this.
    double tolerance = 1e-7;
    int max_sweeps = 100000;
    /// After the change criterion is met, sweeping continues until the
    /// largest optimality-condition violation per unit weight, relative to
    /// the response's weighted standard deviation, is below this.
    double kkt_tolerance = 1e-9;
    bool standardize = true;
    bool fit_intercept = true;
    SolverMode mode = SolverMode::kAuto;
    Eigen::Index gram_max_columns = 1000;
    /// Record the objective after every sweep (for diagnostics and tests).
    bool record_sweeps = false;
    /// Stop the path once this many consecutive grid points have failed to
    /// improve on the best AIC so far; 0 runs the whole grid.
    int aic_patience = 0;
    /// When set, the path stops at this grid index and selects it instead of
    /// minimising AIC.
    std::optional<std::size_t> fixed_index;
};

/// Minimises  sum_t w_t (y_t - b0 - x_t' z)^2 + lambda * sum_j pf_j |z_j|
/// over a decreasing lambda grid, where b0 is an unpenalized intercept and
/// pf_j is the weighted standard deviation of column j (1 when not
/// standardizing, 0 for unpenalized columns).
struct LassoProblem {
    Eigen::Ref<const Eigen::MatrixXd> X;
    Eigen::Ref<const Eigen::VectorXd> y;
    Eigen::Ref<const Eigen::VectorXd> weights;
    bool nonnegative = false;
    /// Strictly decreasing positive values; empty means the automatic
    /// log-spaced grid from lambda_max down to lambda_max * lambda_min_ratio.
    std::vector<double> lambda_grid;
    std::vector<Eigen::Index> unpenalized;
    /// Constant column whose coefficient reports the intercept; -1 when the
    /// design has none (the intercept is then only in LassoFit::intercepts).
    Eigen::Index intercept_column = -1;

    LassoProblem(Eigen::Ref<const Eigen::MatrixXd> x, Eigen::Ref<const Eigen::VectorXd> response,
                 Eigen::Ref<const Eigen::VectorXd> w)
        : X(x), y(response), weights(w) {}
};

struct LassoFit {
    std::vector<double> lambdas;
    Eigen::MatrixXd coefficients;  // p x n_lambda, original scale
    std::vector<double> intercepts;
    std::vector<int> active_sizes;  // nonzero coefficients (intercept included when fitted)
    std::vector<double> weighted_rss;
    std::vector<double> aic;
    std::vector<int> sweeps;
    Eigen::VectorXd penalty_factors;  // pf_j, 0 for unpenalized or frozen columns
    std::vector<std::uint8_t> frozen;  // zero-variance columns held at 0
    double lambda_max = 0.0;
    Eigen::Index n_obs = 0;  // rows with positive weight
    std::size_t selected = 0;
    bool converged = true;
    bool intercept_fitted = true;
    SolverMode mode_used = SolverMode::kDense;
    std::vector<std::pair<std::size_t, double>> sweep_objectives;  // (lambda index, objective)

    [[nodiscard]] Eigen::VectorXd selected_coefficients() const { return coefficients.col(static_cast<Eigen::Index>(selected)); }
    [[nodiscard]] double selected_intercept() const { return intercepts[selected]; }
    [[nodiscard]] double selected_lambda() const { return lambdas[selected]; }
};

/// Soft-threshold S(z, g) = sign(z) max(|z| - g, 0).
[[nodiscard]] double soft_threshold(double z, double gamma);

/// One coordinate minimisation: S(rho, lambda) / d, or max(0, (rho - lambda)/d)
/// in nonnegative mode. Returns 0 when d == 0.
[[nodiscard]] double coordinate_update(double rho, double d, double lambda, bool nonnegative);

[[nodiscard]] LassoFit solve_path(const LassoProblem& problem, const LassoOptions& options = {});

/// Index of the AIC minimiser, AIC = n log(RSS_w / n) + 2 df. Ties go to the
/// larger lambda.
[[nodiscard]] std::size_t select_aic(const LassoFit& fit);

/// Objective value of path entry k, evaluated directly from the data.
[[nodiscard]] double objective_value(const LassoProblem& problem, const LassoFit& fit, std::size_t k);

/// Largest KKT violation of path entry k, evaluated from the data on the
/// standardized scale and divided by the total weight.
[[nodiscard]] double kkt_violation(const LassoProblem& problem, const LassoFit& fit, std::size_t k);

/// Streaming accumulation of weighted first and second moments, for tall
/// problems that should not be materialised.
class MomentAccumulator {
public:
    explicit MomentAccumulator(Eigen::Index columns);

    void add(std::span<const double> x, double y, double weight);

    [[nodiscard]] Eigen::Index columns() const { return sxx_.rows(); }
    [[nodiscard]] Eigen::Index rows() const { return rows_; }

    double sw = 0.0;
    double swy = 0.0;
    double swyy = 0.0;
    [[nodiscard]] const Eigen::VectorXd& swx() const { return swx_; }
    [[nodiscard]] const Eigen::VectorXd& swxy() const { return swxy_; }
    /// Upper triangle holds sum w x x'.
    [[nodiscard]] const Eigen::MatrixXd& swxx() const { return sxx_; }

private:
    Eigen::VectorXd swx_;
    Eigen::VectorXd swxy_;
    Eigen::MatrixXd sxx_;
    Eigen::Index rows_ = 0;
};

struct MomentProblemSpec {
    bool nonnegative = false;
    std::vector<double> lambda_grid;
    std::vector<Eigen::Index> unpenalized;
    Eigen::Index intercept_column = -1;
};

/// Path solve from accumulated moments (always Gram mode).
[[nodiscard]] LassoFit solve_path(const MomentAccumulator& moments, const MomentProblemSpec& spec,
                                  const LassoOptions& options = {});

}  // namespace windcast::lasso
