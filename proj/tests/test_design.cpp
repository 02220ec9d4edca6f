#include "support.hpp"

#include "windcast/design.hpp"
#include "windcast/error.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace windcast;
using namespace windcast::design;
namespace ts = testing_support;

namespace {

const basis::BasisConfig kDefaultBasis{6, 6, 144, 52596};

StateMatrix random_states(std::mt19937_64& g, Eigen::Index T) {
    StateMatrix s;
    s.values = ts::normal_matrix(g, T, kStateDim);
    s.first_step = ts::uniform_int(g, 0, 5'000'000);
    return s;
}

std::vector<int> random_lags(std::mt19937_64& g, int max_count, int max_lag) {
    std::set<int> out;
    const int n = ts::uniform_int(g, 0, max_count);
    while (static_cast<int>(out.size()) < n) out.insert(ts::uniform_int(g, 1, max_lag));
    return {out.begin(), out.end()};
}

LagConfig random_config(std::mt19937_64& g) {
    LagConfig lags;
    lags.j1 = random_lags(g, 4, 10);
    lags.j2 = random_lags(g, 3, 10);
    lags.p = random_lags(g, 3, 10);
    lags.q = random_lags(g, 3, 10);
    if (lags.j1.empty() && lags.j2.empty()) lags.j1 = {1};
    const int a = ts::uniform_int(g, 1, 3);
    for (int i = 0; i < a; ++i) lags.alphas.push_back(0.2 + 0.3 * i);
    return lags;
}

}  // namespace

TEST_CASE("mask pattern") {
    const auto mask = MaskMatrix::standard();
    for (int e = 0; e < 3; ++e) CHECK(mask.sources(e) == std::vector<int>{0, 1, 2});
    for (int e = 3; e < 6; ++e) CHECK(mask.sources(e) == std::vector<int>{0, 1, 2, 3, 4, 5});
    LagConfig lags;
    lags.j1 = {1, 2};
    const auto cat = mean_catalog(lags, kDefaultBasis, mask, 0);
    for (const auto& c : cat) CHECK(c.source != kWs);
}

TEST_CASE("catalog counts for the small wind and variance configurations") {
    LagConfig lags;
    lags.j1 = {1};
    CHECK(mean_catalog(lags, kDefaultBasis, MaskMatrix::standard(), 3).size() == 252);
    CHECK(mean_column_count(lags, kDefaultBasis, MaskMatrix::standard(), 3) == 252);
    CHECK(mean_catalog(lags, kDefaultBasis, MaskMatrix::standard(), 0).size() == 36 + 3 * 36);
    lags.p = {1};
    lags.q = {1};
    CHECK(variance_catalog(lags, kDefaultBasis, 4).size() == 108);
    CHECK(variance_column_count(lags, kDefaultBasis) == 108);
}

TEST_CASE("catalog keys") {
    ColumnSpec c;
    c.family = Family::kArPeriodic;
    c.equation = 3;
    c.source = 0;
    c.lag = 2;
    c.periodic = 7;
    c.i1 = 3;
    c.i2 = 2;
    CHECK(c.key() == "ar-periodic|m=4|src=1|lag=2|b=3,2");
    ColumnSpec t;
    t.family = Family::kThreshold;
    t.equation = 0;
    t.source = 2;
    t.lag = 9;
    t.alpha_index = 1;
    t.alpha = 0.5;
    CHECK(t.key() == "threshold|m=1|src=3|lag=9|a=0.5");
    CHECK(family_from_name("arch-neg-periodic") == Family::kArchNegPeriodic);
    CHECK_THROWS_AS((void)family_from_name("nope"), ConfigError);
}

TEST_CASE("property: closed-form counts match enumeration and keys are unique") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto g = ts::rng(seed);
        const auto lags = random_config(g);
        const basis::BasisConfig b{ts::uniform_int(g, 0, 1) * ts::uniform_int(g, 4, 7),
                                   ts::uniform_int(g, 0, 1) * ts::uniform_int(g, 4, 7), 144, 52596};
        const auto mask = seed % 2 ? MaskMatrix::full() : MaskMatrix::standard();
        for (int e = 0; e < kStateDim; ++e) {
            const auto cat = mean_catalog(lags, b, mask, e);
            CHECK(cat.size() == mean_column_count(lags, b, mask, e));
            std::set<std::string> keys;
            for (const auto& c : cat) keys.insert(c.key());
            CHECK(keys.size() == cat.size());
            CHECK(variance_catalog(lags, b, e).size() == variance_column_count(lags, b));
        }
    }
}

TEST_CASE("property: mean design entries match an independent evaluation") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        auto g = ts::rng(1000 + seed);
        const auto lags = random_config(g);
        const basis::BasisConfig b{6, seed % 3 == 0 ? 0 : 5, 144, 52596};
        const auto states = random_states(g, 60);
        const auto th = empirical_thresholds(states, lags.alphas);
        const int e = ts::uniform_int(g, 0, 5);
        const auto mask = MaskMatrix::standard();
        const auto p = build_mean_design(states, th, lags, b, mask, e);
        REQUIRE(p.X.cols() == static_cast<Eigen::Index>(mean_column_count(lags, b, mask, e)));
        CHECK(p.first_row == lags.max_mean_lag());
        CHECK(p.X.rows() == states.rows() - p.first_row);
        CHECK(p.X.allFinite());
        for (Eigen::Index r = 0; r < p.X.rows(); ++r) {
            const Eigen::Index row = p.first_row + r;
            CHECK(p.y(r) == states.values(row, e));
            for (Eigen::Index j = 0; j < p.X.cols(); ++j) {
                const auto& c = p.catalog[static_cast<std::size_t>(j)];
                const double lagged = c.source >= 0 ? states.values(row - c.lag, c.source) : 0.0;
                const double threshold = c.alpha_index >= 0 ? th.values(c.source, c.alpha_index) : 0.0;
                const double expected =
                    ts::reference_regressor(c, lagged, threshold) * ts::reference_periodic(c, b, states.step(row));
                CHECK(std::abs(p.X(r, j) - expected) < 1e-12);
                if (c.alpha_index >= 0 && c.periodic < 0) CHECK(p.X(r, j) >= threshold);
            }
        }
        const auto again = build_mean_design(states, th, lags, b, mask, e);
        CHECK(again.X == p.X);
        CHECK(again.catalog == p.catalog);
    }
}

TEST_CASE("threshold below the sample minimum reproduces the lagged column") {
    auto g = ts::rng(5);
    const auto states = random_states(g, 40);
    LagConfig lags;
    lags.j1 = {1};
    lags.j2 = {1};
    lags.alphas = {0.5};
    ThresholdSet th;
    th.alphas = {0.5};
    th.values = Eigen::MatrixXd::Constant(kStateDim, 1, -1e6);
    const basis::BasisConfig none{0, 0, 144, 52596};
    const auto p = build_mean_design(states, th, lags, none, MaskMatrix::full(), 2);
    // Columns: intercept, 6 AR, 6 threshold.
    CHECK(p.X.block(0, 7, p.X.rows(), 6) == p.X.block(0, 1, p.X.rows(), 6));
}

TEST_CASE("variance design entries") {
    auto g = ts::rng(8);
    Eigen::MatrixXd eps = ts::normal_matrix(g, 50, kStateDim);
    eps(10, 1) = 0.0;
    LagConfig lags;
    lags.p = {1, 2};
    lags.q = {1};
    const basis::BasisConfig b{4, 0, 144, 52596};
    const auto p = build_variance_design(eps, 1000, lags, b, 1, 3);
    CHECK(p.X.cols() == 4 * 4);
    CHECK(p.X.minCoeff() >= 0.0);
    for (Eigen::Index r = 0; r < p.X.rows(); ++r) {
        const Eigen::Index row = 3 + r;
        CHECK(p.y(r) == std::abs(eps(row, 1)));
        for (Eigen::Index j = 0; j < p.X.cols(); ++j) {
            const auto& c = p.catalog[static_cast<std::size_t>(j)];
            const double lagged = c.source >= 0 ? eps(row - c.lag, c.source) : 0.0;
            CHECK(std::abs(p.X(r, j) - ts::reference_regressor(c, lagged, 0.0) * ts::reference_periodic(c, b, 1000 + row)) <
                  1e-12);
        }
    }
    // Row 11 sees the zero shock at lag 1: both sign-split regressors vanish.
    CHECK(p.X(11 - 3, 4) == 0.0);
    CHECK(p.X(11 - 3, 12) == 0.0);

    Eigen::MatrixXd positive = eps.cwiseAbs();
    const auto q = build_variance_design(positive, 0, lags, b, 0, 3);
    CHECK(q.X.rightCols(4).isZero(0.0));
}

TEST_CASE("design errors") {
    auto g = ts::rng(2);
    const auto states = random_states(g, 5);
    LagConfig lags;
    lags.j1 = {5};
    CHECK_THROWS_AS((void)build_mean_design(states, {}, lags, kDefaultBasis, MaskMatrix::full(), 0),
                    InsufficientDataError);
    lags.j1 = {2, 1};
    CHECK_THROWS_AS(lags.validate(), ConfigError);
    Eigen::MatrixXd eps = Eigen::MatrixXd::Constant(10, kStateDim, std::numeric_limits<double>::quiet_NaN());
    LagConfig v;
    v.p = {1};
    CHECK_THROWS_AS((void)build_variance_design(eps, 0, v, kDefaultBasis, 0, 1), InsufficientDataError);
}

TEST_CASE("full-scale configuration") {
    const auto full = LagConfig::full_scale();
    CHECK(full.j1.size() == 504);
    CHECK(full.j2.size() == 8);
    CHECK(full.p.size() == 51);
    CHECK(full.q.size() == 51);
    CHECK(full.max_mean_lag() == 1008);
}

TEST_CASE("catalog CSV dump") {
    const auto dir = ts::scratch_dir("catalog");
    LagConfig lags;
    lags.j1 = {1};
    lags.j2 = {2};
    lags.alphas = {0.5};
    const auto cat = mean_catalog(lags, basis::BasisConfig{4, 0, 144, 52596}, MaskMatrix::standard(), 0);
    write_catalog_csv(dir / "c.csv", cat);
    std::ifstream in(dir / "c.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "family,equation,source,lag,i1,i2,alpha");
    std::getline(in, line);
    CHECK(line.rfind("intercept-periodic,1,", 0) == 0);
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<int>(cat.size()));
}
