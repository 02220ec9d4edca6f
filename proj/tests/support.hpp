#pragma once

// Shared generators and reference implementations for the test suites. The
// reference implementations are written independently of the library code
// they check: they share only the public data types.

#include "windcast/model.hpp"
#include "windcast/synthetic.hpp"
#include "windcast/timeseries.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using windcast::kStateDim;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL + 17); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

inline double normal(std::mt19937_64& g) { return std::normal_distribution<double>(0.0, 1.0)(g); }

inline Eigen::MatrixXd normal_matrix(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(g);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Weighted LASSO by a log-barrier interior-point method on the split
// formulation zeta = u - v, u, v >= 0 (v absent in nonnegative mode). The
// unpenalized intercept is eliminated by weighted centering. Penalty factors
// are the weighted column standard deviations; `free` columns carry none.

struct QpSolution {
    Eigen::VectorXd zeta;
    double intercept = 0.0;
    double objective = 0.0;
};

inline QpSolution lasso_qp_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                  double lambda, bool nonnegative, const std::vector<bool>& free = {}) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const double W = w.sum();
    const Eigen::RowVectorXd xbar = (w.transpose() * X) / W;
    const double ybar = w.dot(y) / W;
    Eigen::MatrixXd Xc = X.rowwise() - xbar;
    Eigen::VectorXd yc = y.array() - ybar;
    Eigen::VectorXd pf(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const bool is_free = !free.empty() && free[static_cast<std::size_t>(j)];
        pf(j) = is_free ? 0.0 : std::sqrt((Xc.col(j).array().square() * w.array()).sum() / W);
    }
    const Eigen::MatrixXd G = Xc.transpose() * w.asDiagonal() * Xc;
    const Eigen::VectorXd c = Xc.transpose() * w.asDiagonal() * yc;
    const double yy = (yc.array().square() * w.array()).sum();

    // Variables z = (u) or (u, v); objective 0.5 z'Hz + f'z + yy.
    const Eigen::Index m = nonnegative ? p : 2 * p;
    Eigen::MatrixXd H(m, m);
    Eigen::VectorXd f(m);
    if (nonnegative) {
        H = 2.0 * G;
        f = -2.0 * c + lambda * pf;
    } else {
        H << 2.0 * G, -2.0 * G, -2.0 * G, 2.0 * G;
        f << -2.0 * c + lambda * pf, 2.0 * c + lambda * pf;
    }
    auto qp_value = [&](const Eigen::VectorXd& z) { return 0.5 * z.dot(H * z) + f.dot(z); };

    Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
    const double scale = std::max({1.0, H.diagonal().maxCoeff(), f.cwiseAbs().maxCoeff()});
    double mu = scale;
    for (int outer = 0; outer < 200 && mu * static_cast<double>(m) > 1e-15 * scale; ++outer) {
        for (int it = 0; it < 100; ++it) {
            const Eigen::VectorXd grad = H * z + f - mu * z.cwiseInverse();
            Eigen::MatrixXd hess = H;
            hess.diagonal() += mu * z.cwiseInverse().cwiseAbs2();
            const Eigen::VectorXd dz = -hess.ldlt().solve(grad);
            const double decrement = -grad.dot(dz);
            if (decrement < 1e-20 * scale) break;
            double t = 1.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (dz(i) < 0.0) t = std::min(t, -0.99 * z(i) / dz(i));
            }
            auto barrier = [&](const Eigen::VectorXd& zz) { return qp_value(zz) - mu * zz.array().log().sum(); };
            const double phi0 = barrier(z);
            while (t > 1e-16 && barrier(z + t * dz) > phi0 - 0.25 * t * decrement) t *= 0.5;
            z += t * dz;
            if (decrement < 1e-14 * scale) break;
        }
        mu *= 0.2;
    }
    QpSolution out;
    out.zeta = nonnegative ? Eigen::VectorXd(z) : Eigen::VectorXd(z.head(p) - z.tail(p));
    out.intercept = ybar - xbar.dot(out.zeta);
    const Eigen::VectorXd r = (y - X * out.zeta).array() - out.intercept;
    out.objective = (r.array().square() * w.array()).sum() + lambda * pf.cwiseProduct(out.zeta).cwiseAbs().sum();
    (void)n;
    (void)yy;
    return out;
}

// ---------------------------------------------------------------------------
// Periodic uniform cubic B-spline by the Cox-de Boor recursion. Function
// `index` (1-based) has its peak at (index - 1) * period / k.

inline double cox_de_boor(double x, const std::vector<double>& knots, int i, int degree) {
    if (degree == 0) {
        return knots[static_cast<std::size_t>(i)] <= x && x < knots[static_cast<std::size_t>(i) + 1] ? 1.0 : 0.0;
    }
    const double a = knots[static_cast<std::size_t>(i)];
    const double b = knots[static_cast<std::size_t>(i + degree)];
    const double c = knots[static_cast<std::size_t>(i) + 1];
    const double d = knots[static_cast<std::size_t>(i + degree) + 1];
    return (x - a) / (b - a) * cox_de_boor(x, knots, i, degree - 1) +
           (d - x) / (d - c) * cox_de_boor(x, knots, i + 1, degree - 1);
}

inline double periodic_bspline(int index, int k, std::int64_t period, std::int64_t t) {
    const std::int64_t r = ((t % period) + period) % period;
    const double u = static_cast<double>(r) * k / static_cast<double>(period);
    const std::vector<double> knots{-2.0, -1.0, 0.0, 1.0, 2.0};
    double total = 0.0;
    // Sum over the wrapped copies that can reach u.
    for (int shift = -2; shift <= 2; ++shift) {
        const double x = u - (index - 1) - shift * k;
        if (x >= -2.0 && x < 2.0) total += cox_de_boor(x, knots, 0, 3);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Noise-free and noisy rollouts of a TVARX-TARCHX truth, evaluated directly
// from the column metadata.

inline double reference_periodic(const windcast::design::ColumnSpec& c, const windcast::basis::BasisConfig& b,
                                 std::int64_t step) {
    if (c.periodic < 0) return 1.0;
    const double d = c.i1 >= 2 ? periodic_bspline(c.i1, b.k1, b.s1, step) : 1.0;
    const double a = c.i2 >= 2 ? periodic_bspline(c.i2, b.k2, b.s2, step) : 1.0;
    return d * a;
}

inline double reference_regressor(const windcast::design::ColumnSpec& c, double lagged, double threshold) {
    using windcast::design::Family;
    switch (c.family) {
        case Family::kInterceptPeriodic:
        case Family::kVarianceInterceptPeriodic:
            return 1.0;
        case Family::kAr:
        case Family::kArPeriodic:
            return lagged;
        case Family::kThreshold:
        case Family::kThresholdPeriodic:
            return lagged > threshold ? lagged : threshold;
        case Family::kArchPos:
        case Family::kArchPosPeriodic:
            return lagged > 0.0 ? lagged : 0.0;
        case Family::kArchNeg:
        case Family::kArchNegPeriodic:
            return lagged <= 0.0 ? -lagged : 0.0;
    }
    return 0.0;
}

/// Extends `history` (rows x 6, last row at time index `last_step`) by H
/// steps with all shocks zero.
inline Eigen::MatrixXd reference_rollout(const windcast::FittedModel& m, const Eigen::MatrixXd& history,
                                         std::int64_t last_step, int H) {
    const Eigen::Index n = history.rows();
    Eigen::MatrixXd y(n + H, kStateDim);
    y.topRows(n) = history;
    for (int o = 1; o <= H; ++o) {
        const Eigen::Index row = n - 1 + o;
        const std::int64_t step = last_step + o;
        for (int e = 0; e < kStateDim; ++e) {
            double mu = 0.0;
            for (const auto& term : m.equations[static_cast<std::size_t>(e)].mean_terms) {
                const auto& c = term.column;
                const double lagged = c.source >= 0 ? y(row - c.lag, c.source) : 0.0;
                const double threshold = c.alpha_index >= 0 ? m.thresholds.values(c.source, c.alpha_index) : 0.0;
                mu += term.coefficient * reference_regressor(c, lagged, threshold) * reference_periodic(c, m.basis, step);
            }
            y(row, e) = mu;
        }
    }
    return y.bottomRows(H);
}

// ---------------------------------------------------------------------------
// Synthetic truths used across suites.

/// Key helper: "ar|m=E|src=S|lag=L" with 1-based equation and source.
inline std::string ar_key(int equation, int source, int lag) {
    return "ar|m=" + std::to_string(equation) + "|src=" + std::to_string(source) + "|lag=" + std::to_string(lag);
}

/// Sparse TVARX with constant sigma: J1 = {1, 2, 3}, no thresholds, no
/// periodic basis, 10 active AR coefficients of magnitude >= 0.2 (plus
/// own-lag persistence chosen to keep the system stable).
inline windcast::synthetic::SyntheticSpec sparse_recovery_spec(std::uint64_t seed, Eigen::Index T) {
    using namespace windcast;
    synthetic::SyntheticSpec s;
    s.T = T;
    s.burn_in = 500;
    s.seed = seed;
    s.lags.j1 = {1, 2, 3};
    s.basis = basis::BasisConfig{0, 0, 144, 52596};
    s.mask = design::MaskMatrix::full();
    s.thresholds.values.resize(kStateDim, 0);
    const struct {
        int eq, src, lag;
        double coef;
    } active[10] = {{1, 1, 1, 0.6},  {2, 2, 1, 0.5},  {3, 3, 1, 0.5},   {4, 4, 1, 0.55}, {5, 5, 1, 0.5},
                    {6, 6, 1, 0.45}, {4, 1, 2, 0.25}, {5, 4, 1, -0.25}, {6, 2, 3, 0.2},  {2, 1, 2, -0.3}};
    for (const auto& a : active) {
        const auto catalog = design::mean_catalog(s.lags, s.basis, s.mask, a.eq - 1);
        s.mean_terms[static_cast<std::size_t>(a.eq - 1)].push_back(
            synthetic::term(catalog, ar_key(a.eq, a.src, a.lag), a.coef));
    }
    for (int e = 0; e < kStateDim; ++e) {
        auto& terms = s.mean_terms[static_cast<std::size_t>(e)];
        const auto catalog = design::mean_catalog(s.lags, s.basis, s.mask, e);
        std::sort(terms.begin(), terms.end(), [&](const Term& a, const Term& b) {
            return std::find(catalog.begin(), catalog.end(), a.column) < std::find(catalog.begin(), catalog.end(), b.column);
        });
    }
    s.sigma = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    return s;
}

/// TVARX-TARCHX truth with a diurnal basis (k1 = 4), own-lag AR(1) with a
/// periodic modulation, and a standard deviation that has a periodic level
/// plus positive- and negative-shock responses.
inline windcast::synthetic::SyntheticSpec heteroscedastic_spec(std::uint64_t seed, Eigen::Index T) {
    using namespace windcast;
    synthetic::SyntheticSpec s;
    s.T = T;
    s.burn_in = 1000;
    s.seed = seed;
    s.lags.j1 = {1, 2};
    s.lags.p = {1};
    s.lags.q = {1};
    s.basis = basis::BasisConfig{4, 0, 144, 52596};
    s.mask = design::MaskMatrix::standard();
    s.thresholds.values.resize(kStateDim, 0);
    for (int e = 0; e < kStateDim; ++e) {
        const auto mean = design::mean_catalog(s.lags, s.basis, s.mask, e);
        const auto var = design::variance_catalog(s.lags, s.basis, e);
        const int m = e + 1;
        const std::string own = "|m=" + std::to_string(m) + "|src=" + std::to_string(m) + "|lag=";
        auto& mt = s.mean_terms[static_cast<std::size_t>(e)];
        mt.push_back(synthetic::term(mean, "intercept-periodic|m=" + std::to_string(m), 0.5));
        mt.push_back(synthetic::term(mean, "intercept-periodic|m=" + std::to_string(m) + "|b=3,1", 1.0));
        mt.push_back(synthetic::term(mean, "ar" + own + "1", 0.6));
        mt.push_back(synthetic::term(mean, "ar-periodic" + own + "1|b=2,1", 0.2));
        auto& vt = s.variance_terms[static_cast<std::size_t>(e)];
        vt.push_back(synthetic::term(var, "variance-intercept-periodic|m=" + std::to_string(m), 0.3));
        vt.push_back(synthetic::term(var, "variance-intercept-periodic|m=" + std::to_string(m) + "|b=3,1", 0.9));
        vt.push_back(synthetic::term(var, "arch-pos" + own + "1", 0.25));
        vt.push_back(synthetic::term(var, "arch-neg" + own + "1", 0.1));
    }
    return s;
}

/// Unique scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("windcast-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
