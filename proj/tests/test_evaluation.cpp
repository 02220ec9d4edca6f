#include "support.hpp"

#include "windcast/error.hpp"
#include "windcast/evaluation.hpp"
#include "windcast/stats.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace windcast;
using namespace windcast::evaluation;
namespace ts = testing_support;

namespace {

std::vector<double> normals(std::mt19937_64& g, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = ts::normal(g);
    return x;
}

}  // namespace

TEST_CASE("RMSE and MAE examples") {
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 3);
    auto t = rmse_mae(zero);
    CHECK(t.rmse == std::vector<double>{0, 0, 0});
    CHECK(t.mae == std::vector<double>{0, 0, 0});
    t = rmse_mae(Eigen::MatrixXd::Constant(4, 2, -2.5));
    CHECK(t.rmse[1] == 2.5);
    CHECK(t.mae[1] == 2.5);
    Eigen::MatrixXd e(4, 1);
    e << 1, -1, 3, -3;
    t = rmse_mae(e);
    CHECK(t.mae[0] == 2.0);
    CHECK(t.rmse[0] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    e(1, 0) = std::numeric_limits<double>::quiet_NaN();
    t = rmse_mae(e);
    CHECK(t.count[0] == 3);
    CHECK(t.excluded[0] == 1);
    CHECK(t.mae[0] == doctest::Approx(7.0 / 3.0));
}

TEST_CASE("direction error examples") {
    CHECK(direction_error(5.0, 345.0) == 20.0);
    CHECK(direction_error(123.4, 123.4) == 0.0);
    CHECK(direction_error(0.0, 180.0) == 180.0);
}

TEST_CASE("property: direction error symmetry, periodicity and range") {
    auto g = ts::rng(1);
    for (int i = 0; i < 100000; ++i) {
        const double a = ts::uniform(g, 0, 360);
        const double b = ts::uniform(g, 0, 360);
        const double e = direction_error(a, b);
        CHECK(e >= 0.0);
        CHECK(e <= 180.0);
        CHECK(e == direction_error(b, a));
        CHECK(std::abs(direction_error(a + 360.0, b) - e) < 1e-9);
    }
}

TEST_CASE("property: MAEoA within [0, 180] and RMSE at least MAE") {
    auto g = ts::rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index n = ts::uniform_int(g, 1, 50);
        Eigen::MatrixXd f(n, 4);
        Eigen::MatrixXd a(n, 4);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int j = 0; j < 4; ++j) {
                f(i, j) = ts::uniform(g, 0, 360);
                a(i, j) = ts::uniform(g, 0, 360);
            }
        }
        const auto m = maeoa(f, a);
        const auto r = rmse_mae(ts::normal_matrix(g, n, 4));
        for (int j = 0; j < 4; ++j) {
            CHECK(m.mae[static_cast<std::size_t>(j)] >= 0.0);
            CHECK(m.mae[static_cast<std::size_t>(j)] <= 180.0);
            CHECK(r.rmse[static_cast<std::size_t>(j)] >= r.mae[static_cast<std::size_t>(j)] * (1 - 1e-15));
            CHECK(r.mae[static_cast<std::size_t>(j)] >= 0.0);
        }
    }
}

TEST_CASE("yaw loss") {
    CHECK(yaw_loss(0).power == 1.0);
    CHECK(std::abs(yaw_loss(90).power) < 1e-15);
    CHECK(std::abs(yaw_loss(30).raw - 3.0 * std::sqrt(3.0) / 8.0) < 1e-12);
    const auto beyond = yaw_loss(120);
    CHECK(beyond.raw < 0.0);
    CHECK(beyond.power == 0.0);
    CHECK(beyond.beyond_quarter_turn);
    CHECK(kYawReferenceDeg == 30.0);
}

TEST_CASE("Diebold-Mariano examples") {
    auto g = ts::rng(3);
    const auto a = normals(g, 200);
    const auto same = diebold_mariano(a, a, 4);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    std::vector<double> b = a;
    for (auto& v : b) v += 1.0;
    const auto worse = diebold_mariano(b, a, 1);
    CHECK(worse.p_value < 1e-10);
    CHECK(worse.statistic > 0.0);
    std::vector<double> c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += 1.0 + 0.1 * ts::normal(g);
    const auto noisy = diebold_mariano(c, a, 3);
    CHECK(noisy.p_value < 1e-10);
    CHECK(noisy.statistic > 0.0);
    CHECK_THROWS_AS((void)diebold_mariano(std::vector<double>(10, 1.0), std::vector<double>(10, 1.0), 1), ConfigError);
}

TEST_CASE("Diebold-Mariano statistic against a direct computation") {
    auto g = ts::rng(4);
    const auto a = normals(g, 150);
    const auto b = normals(g, 150);
    const int h = 6;
    std::vector<double> d(150);
    for (std::size_t i = 0; i < 150; ++i) d[i] = a[i] - b[i];
    const double m = std::accumulate(d.begin(), d.end(), 0.0) / 150;
    double lrv = 0.0;
    for (int k = -(h - 1); k <= h - 1; ++k) {
        double s = 0.0;
        for (std::size_t t = static_cast<std::size_t>(std::abs(k)); t < 150; ++t) {
            s += (d[t] - m) * (d[t - static_cast<std::size_t>(std::abs(k))] - m);
        }
        lrv += (1.0 - std::abs(k) / static_cast<double>(h)) * s / 150;
    }
    const double stat = m / std::sqrt(lrv / 150);
    const auto r = diebold_mariano(a, b, h);
    CHECK(r.statistic == doctest::Approx(stat).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(std::erfc(std::abs(stat) / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("Diebold-Mariano size under equal accuracy") {
    auto g = ts::rng(51);
    int rejections = 0;
    const int reps = 1000;
    for (int rep = 0; rep < reps; ++rep) {
        // Squared errors of two equally accurate one-step forecasts.
        std::vector<double> la(1000), lb(1000);
        for (std::size_t t = 0; t < 1000; ++t) {
            la[t] = std::pow(ts::normal(g), 2);
            lb[t] = std::pow(ts::normal(g), 2);
        }
        if (diebold_mariano(la, lb, 1).p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / reps;
    CHECK(rate >= 0.03);
    CHECK(rate <= 0.07);
}

TEST_CASE("PIT values and histograms") {
    SUBCASE("single realization with one bin") {
        const std::vector<double> pit{0.3};
        const auto h = pit_histogram(pit, 1);
        CHECK(h.counts == std::vector<int>{1});
        CHECK(h.max_deviation == 0.0);
    }
    SUBCASE("ties are spread uniformly") {
        const std::vector<double> ens{1.0, 2.0, 2.0, 2.0, 3.0};
        CHECK(pit_value(ens, 0.5, 0.0, 0.0) == 0.0);
        CHECK(pit_value(ens, 9.0, 0.999, 0.999) > 0.99);
        const double lo = pit_value(ens, 2.0, 0.0, 0.0);
        const double hi = pit_value(ens, 2.0, 0.999999, 0.999999);
        CHECK(lo == doctest::Approx(1.0 / 6.0));
        CHECK(hi == doctest::Approx(5.0 / 6.0).epsilon(1e-5));
    }
    SUBCASE("realizations from the ensemble distribution give a flat histogram") {
        int flat = 0;
        const int seeds = 100;
        for (int seed = 0; seed < seeds; ++seed) {
            auto g = ts::rng(100 + static_cast<std::uint64_t>(seed));
            std::vector<std::vector<double>> ens(500);
            std::vector<double> real(500);
            for (std::size_t i = 0; i < 500; ++i) {
                const double loc = ts::normal(g);
                ens[i].resize(200);
                for (auto& v : ens[i]) v = loc + ts::normal(g);
                std::sort(ens[i].begin(), ens[i].end());
                real[i] = loc + ts::normal(g);
            }
            const auto pit = pit_values(ens, real, static_cast<std::uint64_t>(seed));
            for (double p : pit) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
            }
            const auto h = pit_histogram(pit, 20);
            CHECK(std::accumulate(h.counts.begin(), h.counts.end(), 0) == 500);
            if (h.p_value > 0.01) ++flat;
        }
        CHECK(flat >= 0.95 * seeds);
    }
    SUBCASE("under-dispersed ensembles give a U shape") {
        auto g = ts::rng(7);
        std::vector<std::vector<double>> ens(2000);
        std::vector<double> real(2000);
        for (std::size_t i = 0; i < 2000; ++i) {
            ens[i].resize(100);
            for (auto& v : ens[i]) v = 0.4 * ts::normal(g);
            std::sort(ens[i].begin(), ens[i].end());
            real[i] = ts::normal(g);
        }
        const auto h = pit_histogram(pit_values(ens, real, 1), 20);
        double interior = 0.0;
        for (int b = 1; b < 19; ++b) interior += h.counts[static_cast<std::size_t>(b)];
        interior /= 18.0;
        CHECK(h.counts.front() + h.counts.back() > 2.0 * interior);
        CHECK(h.p_value < 1e-6);
    }
}

TEST_CASE("origins are drawn without replacement inside the window") {
    const auto o = draw_origins(100, 399, 300, 9);
    CHECK(o.size() == 300);
    CHECK(std::set<Eigen::Index>(o.begin(), o.end()).size() == 300);
    CHECK(o.front() == 100);
    CHECK(o.back() == 399);
    const auto p = draw_origins(100, 10000, 50, 9);
    CHECK(std::is_sorted(p.begin(), p.end()));
    CHECK(p == draw_origins(100, 10000, 50, 9));
    CHECK_THROWS_AS((void)draw_origins(100, 120, 22, 1), ConfigError);
}

TEST_CASE("evaluation run") {
    auto g = ts::rng(11);
    StateMatrix s;
    s.values = ts::normal_matrix(g, 600, kStateDim);
    s.values.col(kP).array() += 1000;
    s.values.col(kW).array() += 5;
    Forecaster persistence{"persistence", [&](Eigen::Index origin, int H) {
                               return Eigen::MatrixXd(s.values.row(origin).replicate(H, 1));
                           }, {}};
    Forecaster twin = persistence;
    twin.name = "persistence-copy";
    Forecaster oracle{"oracle", [&](Eigen::Index origin, int H) {
                          return Eigen::MatrixXd(s.values.middleRows(origin + 1, H));
                      }, {}};
    EvaluationOptions opt;
    opt.n_origins = 100;
    opt.horizon = 12;
    opt.first_origin = 200;
    opt.pit_horizons = {1, 12};
    const auto run = run_evaluation(s, {persistence, twin, oracle}, opt);
    CHECK(run.origins.size() == 100);
    CHECK(run.origins.front() >= 200);
    CHECK(run.origins.back() + 12 <= 599);
    REQUIRE(run.models.size() == 3);
    for (int v = 0; v < kVariableCount; ++v) {
        CHECK(run.models[2].tables[static_cast<std::size_t>(v)].rmse[0] == 0.0);
    }
    for (const auto& entry : run.dm) {
        if (entry.model_a == "persistence" && entry.model_b == "persistence-copy") {
            CHECK(entry.squared.p_value == 1.0);
            CHECK(entry.absolute.p_value == 1.0);
        }
    }
    for (const double y : run.models[2].yaw_power) CHECK(y == 1.0);

    const auto dir = ts::scratch_dir("evaluation");
    write_metrics_csv(dir / "metrics.csv", run);
    write_dm_csv(dir / "dm.csv", run);
    write_pit_csv(dir / "pit.csv", run);
    write_yaw_csv(dir / "yaw.csv", run);
    for (const char* f : {"metrics.csv", "dm.csv", "pit.csv", "yaw.csv"}) CHECK(std::filesystem::file_size(dir / f) > 0);
    const auto summary = summary_json(run);
    CHECK(summary.contains("models"));

    opt.n_origins = 500;
    CHECK_THROWS_AS((void)run_evaluation(s, {persistence}, opt), ConfigError);
}

TEST_CASE("variable read-outs") {
    Eigen::RowVectorXd state = Eigen::RowVectorXd::Zero(kStateDim);
    state(kP) = 1010;
    state(kPs) = 0;
    state(kPc) = 1009;
    state(kW) = 5;
    state(kWs) = 3;
    state(kWc) = 4;
    const auto v = variables_of(state);
    CHECK(v[kPressure] == 1010);
    CHECK(v[kPressureMagnitude] == 1009);
    CHECK(v[kSpeed] == 5);
    CHECK(v[kSpeedMagnitude] == 5);
    CHECK(v[kWindDirection] == doctest::Approx(std::atan2(3.0, 4.0) * 180 / M_PI));
    CHECK(v[kPressureDirection] == 0.0);
    CHECK(is_circular(kWindDirection));
    CHECK(!is_circular(kSpeed));
    CHECK(variable_name(kSpeed) == "speed");
}
