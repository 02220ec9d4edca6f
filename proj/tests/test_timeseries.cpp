#include "support.hpp"

#include "windcast/error.hpp"
#include "windcast/timeseries.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace windcast;
namespace ts = testing_support;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ObservationFrame frame_of(std::vector<double> direction, std::vector<double> speed, std::vector<double> pressure) {
    ObservationFrame f;
    const std::size_t n = speed.size();
    for (std::size_t i = 0; i < n; ++i) f.timestamps.push_back(1'400'000'000 + static_cast<std::int64_t>(i) * kStepSeconds);
    f.direction = std::move(direction);
    f.speed = std::move(speed);
    f.pressure = std::move(pressure);
    f.refresh_missing_mask();
    return f;
}

ObservationFrame random_frame(std::mt19937_64& g, std::size_t n, double missing_rate) {
    std::vector<double> d(n), w(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = ts::uniform(g, 0.0, 359.999);
        w[i] = ts::uniform(g, 0.1, 15.0);
        p[i] = ts::uniform(g, 980.0, 1030.0);
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (ts::uniform(g, 0.0, 1.0) < missing_rate) d[i] = kNaN;
        if (ts::uniform(g, 0.0, 1.0) < missing_rate) w[i] = kNaN;
        if (ts::uniform(g, 0.0, 1.0) < missing_rate) p[i] = kNaN;
    }
    return frame_of(d, w, p);
}

}  // namespace

TEST_CASE("speed gap filled at the midpoint") {
    const auto f = interpolate_gaps(frame_of({10, 10, 10}, {2.0, kNaN, 4.0}, {1000, 1000, 1000}), 0.5);
    CHECK(f.speed[1] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(f.missing_mask[1] == kMissingSpeed);
    CHECK(f.interpolated_fraction == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("direction gap across north interpolates through north") {
    const auto f = interpolate_gaps(frame_of({350.0, kNaN, 10.0}, {5, 5, 5}, {1000, 1000, 1000}), 0.5);
    // Mean of the unit vectors at 350 and 10 degrees points due north.
    const double s = (std::sin(350.0 * M_PI / 180) + std::sin(10.0 * M_PI / 180)) / 2;
    const double c = (std::cos(350.0 * M_PI / 180) + std::cos(10.0 * M_PI / 180)) / 2;
    double expected = std::atan2(s, c) * 180 / M_PI;
    if (expected < 0) expected += 360;
    const double d = f.direction[1];
    CHECK(std::min(d, 360.0 - d) < 1e-9);
    CHECK(std::min(std::abs(d - expected), 360 - std::abs(d - expected)) < 1e-9);
}

TEST_CASE("gap-free frame is returned unchanged") {
    auto g = ts::rng(3);
    const auto f = random_frame(g, 50, 0.0);
    const auto out = interpolate_gaps(f);
    CHECK(out.direction == f.direction);
    CHECK(out.speed == f.speed);
    CHECK(out.pressure == f.pressure);
    CHECK(out.interpolated_fraction == 0.0);
}

TEST_CASE("interpolation errors") {
    CHECK_THROWS_AS((void)interpolate_gaps(frame_of({kNaN, 10, 10}, {1, 1, 1}, {1000, 1000, 1000}), 0.5),
                    UnfillableGapError);
    CHECK_THROWS_AS((void)interpolate_gaps(frame_of({10, 10, 10}, {1, 1, kNaN}, {1000, 1000, 1000}), 0.5),
                    UnfillableGapError);
    CHECK_THROWS_AS((void)interpolate_gaps(frame_of({10, kNaN, 10}, {1, kNaN, 1}, {1000, kNaN, 1000})),
                    DataQualityError);
    auto f = frame_of({10, 10, 10}, {1, 1, 1}, {1000, 1000, 1000});
    f.timestamps[2] += 60;
    CHECK_THROWS_AS(f.validate(), DataError);
}

TEST_CASE("property: interpolation fills every cell and is idempotent") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto g = ts::rng(seed);
        const auto f = random_frame(g, static_cast<std::size_t>(ts::uniform_int(g, 5, 300)), 0.03);
        const auto once = interpolate_gaps(f, 0.5);
        CHECK(once.missing_cells() == 0);
        const auto twice = interpolate_gaps(once, 0.5);
        CHECK(twice.direction == once.direction);
        CHECK(twice.speed == once.speed);
        CHECK(twice.pressure == once.pressure);
        for (std::size_t i = 0; i < once.size(); ++i) {
            CHECK(once.direction[i] >= 0.0);
            CHECK(once.direction[i] < 360.0);
        }
    }
}

TEST_CASE("decomposition examples") {
    const auto s = decompose(frame_of({90.0, 45.0, 0.0}, {2.0, 0.0, 3.42}, {1000.0, 990.0, 1011.42}));
    CHECK(s.values(0, kWs) == doctest::Approx(2.0));
    CHECK(std::abs(s.values(0, kWc)) < 1e-12);
    CHECK(s.values(0, kPs) == doctest::Approx(1000.0));
    CHECK(std::abs(s.values(0, kPc)) < 1e-9);
    CHECK(s.values(1, kWs) == 0.0);
    CHECK(s.values(1, kWc) == 0.0);
    CHECK(s.direction_undefined[1] == 1);
    // Mean speed at Berlin-Tegel blowing from north.
    CHECK(s.values(2, kWc) == doctest::Approx(3.42).epsilon(1e-15));
    CHECK(s.values(2, kWs) == 0.0);
    CHECK(s.first_step == step_index(1'400'000'000));
}

TEST_CASE("property: decompose then reproject recovers speed and direction") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = ts::rng(100 + seed);
        const auto f = random_frame(g, 200, 0.0);
        const auto s = decompose(f);
        for (Eigen::Index t = 0; t < s.rows(); ++t) {
            const auto i = static_cast<std::size_t>(t);
            const double w2 = s.values(t, kWs) * s.values(t, kWs) + s.values(t, kWc) * s.values(t, kWc);
            const double p2 = s.values(t, kPs) * s.values(t, kPs) + s.values(t, kPc) * s.values(t, kPc);
            CHECK(std::abs(w2 - f.speed[i] * f.speed[i]) <= 1e-9 * f.speed[i] * f.speed[i]);
            CHECK(std::abs(p2 - f.pressure[i] * f.pressure[i]) <= 1e-9 * f.pressure[i] * f.pressure[i]);
            const auto r = reproject(s.values.row(t));
            CHECK(std::abs(r.speed - f.speed[i]) <= 1e-9 * f.speed[i]);
            const double dd = std::fmod(std::abs(r.direction_deg - f.direction[i]), 360.0);
            CHECK(std::min(dd, 360.0 - dd) <= 1e-9 * 360.0);
            CHECK(r.pressure == f.pressure[i]);
        }
    }
}

TEST_CASE("direction from components uses the quadrant") {
    CHECK(direction_from_components(1, 0) == doctest::Approx(90));
    CHECK(direction_from_components(-1, -1) == doctest::Approx(225));
    CHECK(direction_from_components(0, 1) == 0.0);
    CHECK(direction_from_components(-1e-18, 1) < 360.0);
}

TEST_CASE("threshold examples") {
    StateMatrix constant;
    constant.values = Eigen::MatrixXd::Constant(30, kStateDim, 4.25);
    const auto c = empirical_thresholds(constant, {0.1, 0.5, 0.99});
    CHECK((c.values.array() == 4.25).all());

    StateMatrix ramp;
    ramp.values.resize(100, kStateDim);
    for (int t = 0; t < 100; ++t) ramp.values.row(t).setConstant(t + 1.0);
    const auto r = empirical_thresholds(ramp, {0.5});
    CHECK((r.values.array() == 50.5).all());

    CHECK_THROWS_AS((void)empirical_thresholds(ramp, {}), ConfigError);
    CHECK_THROWS_AS((void)empirical_thresholds(ramp, {0.5, 0.4}), ConfigError);
    CHECK_THROWS_AS((void)empirical_thresholds(ramp, {1.0}), ConfigError);
}

TEST_CASE("upper-quartile speed of a sample shaped like the Berlin-Tegel record") {
    // Piecewise-linear quantile function through the station's minimum,
    // quartiles, median and maximum speed (m/s).
    const std::vector<double> u{0.0, 0.25, 0.5, 0.75, 1.0};
    const std::vector<double> q{0.0, 2.0, 3.1, 4.5, 18.1};
    const int n = 40001;
    StateMatrix s;
    s.values = Eigen::MatrixXd::Zero(n, kStateDim);
    for (int i = 0; i < n; ++i) {
        const double a = static_cast<double>(i) / (n - 1);
        std::size_t k = 0;
        while (k + 2 < u.size() && a > u[k + 1]) ++k;
        s.values(i, kW) = q[k] + (a - u[k]) / (u[k + 1] - u[k]) * (q[k + 1] - q[k]);
    }
    const auto th = empirical_thresholds(s, {0.25, 0.5, 0.75});
    CHECK(th.value(kW, 0) == doctest::Approx(2.00).epsilon(1e-9));
    CHECK(th.value(kW, 1) == doctest::Approx(3.10).epsilon(1e-9));
    CHECK(th.value(kW, 2) == doctest::Approx(4.50).epsilon(1e-9));
}

TEST_CASE("property: thresholds are monotone in the level") {
    const auto alphas = default_alphas();
    CHECK(alphas.size() == 19);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto g = ts::rng(seed);
        StateMatrix s;
        s.values = ts::normal_matrix(g, ts::uniform_int(g, 1, 400), kStateDim);
        const auto th = empirical_thresholds(s, alphas);
        for (int m = 0; m < kStateDim; ++m) {
            for (Eigen::Index a = 1; a < th.values.cols(); ++a) CHECK(th.values(m, a) >= th.values(m, a - 1));
        }
    }
}

TEST_CASE("type-7 quantile against direct order statistics") {
    auto g = ts::rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(static_cast<std::size_t>(ts::uniform_int(g, 1, 60)));
        for (auto& v : x) v = ts::normal(g);
        std::sort(x.begin(), x.end());
        const double alpha = ts::uniform(g, 0.0, 1.0);
        const double h = (x.size() - 1) * alpha;
        const auto lo = static_cast<std::size_t>(h);
        const double expected = lo + 1 < x.size() ? x[lo] * (1 - (h - lo)) + x[lo + 1] * (h - lo) : x[lo];
        CHECK(quantile_sorted(x, alpha) == doctest::Approx(expected).epsilon(1e-12));
    }
}
