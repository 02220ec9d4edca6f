#include "support.hpp"

#include "windcast/error.hpp"
#include "windcast/irwls.hpp"
#include "windcast/stats.hpp"
#include "windcast/synthetic.hpp"

#include <doctest.h>

using namespace windcast;
namespace ts = testing_support;

namespace {

irwls::IrwlsOptions quiet_options() {
    auto o = irwls::IrwlsOptions::defaults();
    o.threads = 1;
    return o;
}

bool has_term(const std::vector<Term>& terms, design::Family family, int lag) {
    for (const auto& t : terms) {
        if (t.column.family == family && t.column.lag == lag && t.coefficient > 0.0) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("homoscedastic truth converges in two iterations") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto spec = ts::sparse_recovery_spec(seed, 4000);
        const auto sim = synthetic::simulate(spec);
        design::LagConfig lags = spec.lags;
        lags.p = {1};
        lags.q = {1};
        const auto model = irwls::fit(sim.states, lags, spec.basis, spec.mask, quiet_options());
        CHECK(model.converged);
        CHECK(model.iterations == 2);
        REQUIRE(model.trace.size() == 2);
        CHECK(model.trace[1].delta < 1e-3);
    }
}

TEST_CASE("constant variance model reproduces the unweighted mean fit") {
    const auto spec = ts::sparse_recovery_spec(11, 3000);
    const auto sim = synthetic::simulate(spec);
    const design::LagConfig lags = spec.lags;  // no shock lags, no periodic terms
    const auto model = irwls::fit(sim.states, lags, spec.basis, spec.mask, quiet_options());
    for (int e = 0; e < kStateDim; ++e) {
        const auto& eq = model.equations[static_cast<std::size_t>(e)];
        CHECK(eq.variance_terms.size() <= 1);
        const auto design = design::build_mean_design(sim.states, model.thresholds, lags, spec.basis, spec.mask, e);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(design.X.rows());
        lasso::LassoProblem problem(design.X, design.y, ones);
        problem.intercept_column = 0;
        const auto plain = lasso::solve_path(problem, quiet_options().mean_lasso);
        const Eigen::VectorXd expected = plain.selected_coefficients();
        Eigen::VectorXd got = Eigen::VectorXd::Zero(expected.size());
        for (const auto& t : eq.mean_terms) {
            const auto it = std::find(design.catalog.begin(), design.catalog.end(), t.column);
            got(it - design.catalog.begin()) = t.coefficient;
        }
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("weights in each iteration are the previous sigma to the power -2") {
    auto opt = quiet_options();
    opt.keep_history = true;
    const auto spec = ts::heteroscedastic_spec(3, 3000);
    const auto sim = synthetic::simulate(spec);
    const auto model = irwls::fit(sim.states, spec.lags, spec.basis, spec.mask, opt);
    REQUIRE(model.weight_history.size() == static_cast<std::size_t>(model.iterations));
    CHECK((model.weight_history[0].array() == 1.0).all());
    for (std::size_t k = 1; k < model.weight_history.size(); ++k) {
        CHECK((model.weight_history[k].array() == model.sigma_history[k - 1].array().square().inverse()).all());
    }
    for (std::size_t k = 0; k < model.trace.size(); ++k) {
        const Eigen::MatrixXd prev = k == 0 ? Eigen::MatrixXd::Ones(model.sigma_history[0].rows(), kStateDim)
                                            : model.sigma_history[k - 1];
        const double rms = std::sqrt((model.sigma_history[k] - prev).squaredNorm() / static_cast<double>(prev.size()));
        CHECK(model.trace[k].delta == doctest::Approx(rms).epsilon(1e-12));
    }
}

TEST_CASE("fitted model invariants") {
    const auto spec = ts::heteroscedastic_spec(4, 3000);
    const auto sim = synthetic::simulate(spec);
    const auto model = irwls::fit(sim.states, spec.lags, spec.basis, spec.mask, quiet_options());
    CHECK(model.converged);
    CHECK(model.trace.back().delta < 1e-3);
    CHECK(model.n_rows == 3000);
    for (int e = 0; e < kStateDim; ++e) {
        const auto& eq = model.equations[static_cast<std::size_t>(e)];
        CHECK(!eq.failed);
        for (const auto& t : eq.variance_terms) CHECK(t.coefficient >= 0.0);
        const auto s = model.sigma.col(e).tail(model.n_rows - model.variance_start);
        CHECK(s.minCoeff() >= eq.sigma_floor);
        CHECK(eq.sigma_floor > 0.0);
    }
}

TEST_CASE("fixed point: refitting with the final weights reproduces the mean fit") {
    const auto spec = ts::heteroscedastic_spec(5, 3000);
    const auto sim = synthetic::simulate(spec);
    const auto opt = quiet_options();
    const auto model = irwls::fit(sim.states, spec.lags, spec.basis, spec.mask, opt);
    REQUIRE(model.converged);
    for (int e = 0; e < kStateDim; ++e) {
        const auto d = design::build_mean_design(sim.states, model.thresholds, spec.lags, spec.basis, spec.mask, e,
                                                 model.mean_start);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(d.X.rows());
        const Eigen::Index skip = model.variance_start - model.mean_start;
        w.tail(d.X.rows() - skip) = model.sigma.col(e).tail(d.X.rows() - skip).array().square().inverse();
        lasso::LassoProblem problem(d.X, d.y, w);
        problem.intercept_column = 0;
        const auto refit = lasso::solve_path(problem, opt.mean_lasso);
        Eigen::VectorXd original = Eigen::VectorXd::Zero(d.X.cols());
        for (const auto& t : model.equations[static_cast<std::size_t>(e)].mean_terms) {
            original(std::find(d.catalog.begin(), d.catalog.end(), t.column) - d.catalog.begin()) = t.coefficient;
        }
        // Fitted mean paths agree to a small fraction of the noise level.
        const Eigen::VectorXd diff = d.X * (refit.selected_coefficients() - original);
        const double rms = std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
        const double noise = std::sqrt(model.residuals.col(e).tail(d.X.rows()).squaredNorm() / static_cast<double>(diff.size()));
        CHECK(rms < 0.01 * noise);
    }
}

TEST_CASE("planted positive-shock response is recovered") {
    int recovered = 0;
    const int seeds = 100;
    for (int seed = 0; seed < seeds; ++seed) {
        auto spec = ts::heteroscedastic_spec(100 + static_cast<std::uint64_t>(seed), 2000);
        for (auto& terms : spec.variance_terms) {
            for (auto& t : terms) {
                if (t.column.family == design::Family::kArchPos) t.coefficient = 0.5;
            }
        }
        const auto sim = synthetic::simulate(spec);
        const auto model = irwls::fit(sim.states, spec.lags, spec.basis, spec.mask, quiet_options());
        const auto& eq = model.equations[kW];
        if (has_term(eq.variance_terms, design::Family::kArchPos, 1) ||
            has_term(eq.variance_terms, design::Family::kArchPosPeriodic, 1)) {
            ++recovered;
        }
    }
    CHECK(recovered >= 0.9 * seeds);
}

TEST_CASE("residual diagnostics") {
    SUBCASE("white noise stays inside the bands about 95% of the time") {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto g = ts::rng(seed);
            const Eigen::VectorXd x = ts::normal_matrix(g, 4000, 1).col(0);
            const auto s = irwls::summarize_acf(std::span<const double>(x.data(), 4000), 200);
            CHECK(s.values.size() == 200);
            CHECK(s.band == doctest::Approx(1.96 / std::sqrt(4000.0)));
            total += s.fraction_outside;
        }
        CHECK(std::abs(total / 20 - 0.05) < 0.015);
    }
    SUBCASE("a model fit on its own simulation leaves no structure in |eta|") {
        const auto spec = ts::heteroscedastic_spec(6, 6000);
        const auto sim = synthetic::simulate(spec);
        const auto model = irwls::fit(sim.states, spec.lags, spec.basis, spec.mask, quiet_options());
        const auto report = irwls::residual_diagnostics(model);
        for (int e = 0; e < kStateDim; ++e) {
            CHECK(report.equations[static_cast<std::size_t>(e)].absolute.fraction_outside <= 0.07);
        }
        CHECK(report.pressure_speed_ccf.size() == 401);

        // Treating sigma as constant leaves the volatility clustering visible.
        for (int e = 0; e < kStateDim; ++e) {
            const Eigen::VectorXd raw = model.residuals.col(e).tail(model.standardized.rows()).cwiseAbs();
            const auto s = irwls::summarize_acf(std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())), 200);
            CHECK(s.fraction_outside > 0.2);
        }
    }
}

TEST_CASE("estimation errors") {
    StateMatrix s;
    s.values = Eigen::MatrixXd::Zero(5, kStateDim);
    design::LagConfig lags;
    lags.j1 = {3};
    lags.p = {2};
    CHECK_THROWS_AS((void)irwls::fit(s, lags, basis::BasisConfig{0, 0, 144, 52596}, design::MaskMatrix::full()),
                    InsufficientDataError);
    s.values(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)irwls::fit(s, lags, basis::BasisConfig{0, 0, 144, 52596}, design::MaskMatrix::full()),
                    DataError);
}

TEST_CASE("a constant component is reported as a failed equation") {
    const auto spec = ts::sparse_recovery_spec(2, 500);
    auto sim = synthetic::simulate(spec);
    sim.states.values.col(kPc).setConstant(1.0);
    design::LagConfig lags = spec.lags;
    lags.p = {1};
    const auto model = irwls::fit(sim.states, lags, spec.basis, spec.mask, quiet_options());
    CHECK(model.equations[kPc].failed);
    CHECK(!model.equations[kPc].failure.empty());
    CHECK(model.any_failed());
    CHECK(!model.equations[kW].failed);
}

TEST_CASE("heteroscedastic truths converge despite discrete lambda selection") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto spec = ts::heteroscedastic_spec(seed, 3000);
        const auto sim = synthetic::simulate(spec);
        const auto model = irwls::fit(sim.states, spec.lags, spec.basis, spec.mask, quiet_options());
        CHECK(model.converged);
        CHECK(model.trace.back().delta < 1e-3);
    }
}
