#include "windcast/design.hpp"

#include "windcast/csv_io.hpp"
#include "windcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace windcast::design {

namespace {

constexpr std::array<std::string_view, 10> kFamilyNames = {
    "intercept-periodic", "ar",        "ar-periodic",       "threshold",        "threshold-periodic",
    "arch-pos",           "arch-neg",  "arch-pos-periodic", "arch-neg-periodic", "variance-intercept-periodic"};

Family periodic_family(Family plain) {
    switch (plain) {
        case Family::kAr: return Family::kArPeriodic;
        case Family::kThreshold: return Family::kThresholdPeriodic;
        case Family::kArchPos: return Family::kArchPosPeriodic;
        case Family::kArchNeg: return Family::kArchNegPeriodic;
        default: return plain;
    }
}

void validate_lags(const std::vector<int>& lags, const char* name) {
    for (std::size_t i = 0; i < lags.size(); ++i) {
        if (lags[i] <= 0) {
            throw ConfigError(std::string("lag set ") + name + " must contain positive integers");
        }
        if (i > 0 && lags[i] <= lags[i - 1]) {
            throw ConfigError(std::string("lag set ") + name + " must be sorted and duplicate-free");
        }
    }
}

int max_of(const std::vector<int>& a, const std::vector<int>& b) {
    int m = 0;
    for (int v : a) m = std::max(m, v);
    for (int v : b) m = std::max(m, v);
    return m;
}

std::vector<int> range(int lo, int hi) {
    std::vector<int> out(static_cast<std::size_t>(hi - lo + 1));
    std::iota(out.begin(), out.end(), lo);
    return out;
}

// Appends the plain column and its periodic products.
void append_expansion(ColumnCatalog& catalog, ColumnSpec plain, const basis::PeriodicRegressors& periodic) {
    catalog.push_back(plain);
    const Family fam = periodic_family(plain.family);
    for (int c = 0; c < periodic.size(); ++c) {
        ColumnSpec col = plain;
        col.family = fam;
        col.periodic = c;
        std::tie(col.i1, col.i2) = periodic.index_pair(c);
        catalog.push_back(col);
    }
}

Eigen::MatrixXd periodic_matrix(const basis::PeriodicRegressors& periodic, std::int64_t first_step,
                                Eigen::Index n) {
    Eigen::MatrixXd out(n, periodic.size());
    std::vector<double> row(static_cast<std::size_t>(periodic.size()));
    for (Eigen::Index r = 0; r < n; ++r) {
        periodic.evaluate(first_step + r, row);
        for (int c = 0; c < periodic.size(); ++c) {
            out(r, c) = row[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

// Fills X from plain base vectors computed per catalog entry.
template <typename BaseFn>
void fill_columns(DesignProblem& problem, const Eigen::MatrixXd& per, BaseFn&& base_of) {
    const Eigen::Index n = problem.y.size();
    problem.X.resize(n, static_cast<Eigen::Index>(problem.catalog.size()));
    Eigen::VectorXd base(n);
    for (std::size_t c = 0; c < problem.catalog.size(); ++c) {
        const ColumnSpec& col = problem.catalog[c];
        if (col.periodic < 0) {
            base_of(col, base);
            problem.X.col(static_cast<Eigen::Index>(c)) = base;
        } else {
            // Periodic products follow their plain column in the catalog.
            problem.X.col(static_cast<Eigen::Index>(c)) = base.cwiseProduct(per.col(col.periodic));
        }
    }
}

}  // namespace

LagConfig LagConfig::full_scale() {
    LagConfig cfg;
    cfg.j1 = range(1, 500);
    cfg.j1.insert(cfg.j1.end(), {576, 720, 864, 1008});
    cfg.j2 = {1, 2, 4, 9, 18, 36, 72, 144};
    cfg.p = range(1, 40);
    const auto tail = range(140, 150);
    cfg.p.insert(cfg.p.end(), tail.begin(), tail.end());
    cfg.q = cfg.p;
    cfg.alphas = default_alphas();
    return cfg;
}

void LagConfig::validate() const {
    validate_lags(j1, "J1");
    validate_lags(j2, "J2");
    validate_lags(p, "P");
    validate_lags(q, "Q");
    if (!j2.empty() && alphas.empty()) {
        throw ConfigError("threshold lags J2 need at least one percentile level");
    }
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0) || (i > 0 && !(alphas[i] > alphas[i - 1]))) {
            throw ConfigError("percentile levels must be strictly increasing inside (0, 1)");
        }
    }
}

int LagConfig::max_mean_lag() const { return max_of(j1, j2); }
int LagConfig::max_variance_lag() const { return max_of(p, q); }

MaskMatrix MaskMatrix::standard() {
    MaskMatrix m;
    for (int r = 0; r < kStateDim; ++r) {
        for (int c = 0; c < kStateDim; ++c) {
            m.allowed[r][c] = (r >= 3 || c < 3) ? 1 : 0;
        }
    }
    return m;
}

MaskMatrix MaskMatrix::full() {
    MaskMatrix m;
    for (auto& row : m.allowed) row.fill(1);
    return m;
}

std::vector<int> MaskMatrix::sources(int equation) const {
    std::vector<int> out;
    for (int c = 0; c < kStateDim; ++c) {
        if (allowed[static_cast<std::size_t>(equation)][static_cast<std::size_t>(c)]) out.push_back(c);
    }
    return out;
}

std::string_view family_name(Family family) { return kFamilyNames[static_cast<std::size_t>(family)]; }

Family family_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
        if (kFamilyNames[i] == name) return static_cast<Family>(i);
    }
    throw ConfigError("unknown column family '" + std::string(name) + "'");
}

std::string ColumnSpec::key() const {
    std::string k(family_name(family));
    k += "|m=" + std::to_string(equation + 1);
    if (source >= 0) k += "|src=" + std::to_string(source + 1);
    if (lag > 0) k += "|lag=" + std::to_string(lag);
    if (alpha_index >= 0) k += "|a=" + io::format_double(alpha);
    if (periodic >= 0) k += "|b=" + std::to_string(i1) + "," + std::to_string(i2);
    return k;
}

ColumnCatalog mean_catalog(const LagConfig& lags, const basis::BasisConfig& basis, const MaskMatrix& mask,
                           int equation) {
    const basis::PeriodicRegressors periodic(basis);
    const auto sources = mask.sources(equation);
    ColumnCatalog catalog;
    catalog.reserve(mean_column_count(lags, basis, mask, equation));

    ColumnSpec intercept;
    intercept.family = Family::kInterceptPeriodic;
    intercept.equation = equation;
    append_expansion(catalog, intercept, periodic);

    for (int lag : lags.j1) {
        for (int m : sources) {
            ColumnSpec col;
            col.family = Family::kAr;
            col.equation = equation;
            col.source = m;
            col.lag = lag;
            append_expansion(catalog, col, periodic);
        }
    }
    for (int lag : lags.j2) {
        for (std::size_t a = 0; a < lags.alphas.size(); ++a) {
            for (int m : sources) {
                ColumnSpec col;
                col.family = Family::kThreshold;
                col.equation = equation;
                col.source = m;
                col.lag = lag;
                col.alpha_index = static_cast<int>(a);
                col.alpha = lags.alphas[a];
                append_expansion(catalog, col, periodic);
            }
        }
    }
    return catalog;
}

ColumnCatalog variance_catalog(const LagConfig& lags, const basis::BasisConfig& basis, int equation) {
    const basis::PeriodicRegressors periodic(basis);
    ColumnCatalog catalog;
    catalog.reserve(variance_column_count(lags, basis));

    ColumnSpec intercept;
    intercept.family = Family::kVarianceInterceptPeriodic;
    intercept.equation = equation;
    append_expansion(catalog, intercept, periodic);

    for (int lag : lags.p) {
        ColumnSpec col;
        col.family = Family::kArchPos;
        col.equation = equation;
        col.source = equation;
        col.lag = lag;
        append_expansion(catalog, col, periodic);
    }
    for (int lag : lags.q) {
        ColumnSpec col;
        col.family = Family::kArchNeg;
        col.equation = equation;
        col.source = equation;
        col.lag = lag;
        append_expansion(catalog, col, periodic);
    }
    return catalog;
}

std::size_t mean_column_count(const LagConfig& lags, const basis::BasisConfig& basis, const MaskMatrix& mask,
                              int equation) {
    const std::size_t width = static_cast<std::size_t>(basis.expansion_width());
    const std::size_t src = mask.sources(equation).size();
    return width * (1 + lags.j1.size() * src + lags.j2.size() * lags.alphas.size() * src);
}

std::size_t variance_column_count(const LagConfig& lags, const basis::BasisConfig& basis) {
    return static_cast<std::size_t>(basis.expansion_width()) * (1 + lags.p.size() + lags.q.size());
}

double plain_value(const ColumnSpec& column, double lagged, double threshold) {
    switch (column.family) {
        case Family::kAr:
        case Family::kArPeriodic:
            return lagged;
        case Family::kThreshold:
        case Family::kThresholdPeriodic:
            return std::max(lagged, threshold);
        case Family::kArchPos:
        case Family::kArchPosPeriodic:
            return lagged > 0.0 ? lagged : 0.0;
        case Family::kArchNeg:
        case Family::kArchNegPeriodic:
            return lagged <= 0.0 ? -lagged : 0.0;
        default:
            return 1.0;
    }
}

DesignProblem build_mean_design(const StateMatrix& states, const ThresholdSet& thresholds, const LagConfig& lags,
                                const basis::BasisConfig& basis, const MaskMatrix& mask, int equation,
                                Eigen::Index first_row) {
    lags.validate();
    if (equation < 0 || equation >= kStateDim) {
        throw ConfigError("equation index out of range");
    }
    const Eigen::Index max_lag = lags.max_mean_lag();
    if (first_row < 0) {
        first_row = max_lag;
    }
    const Eigen::Index T = states.rows();
    if (T <= max_lag || first_row < max_lag || first_row >= T) {
        throw InsufficientDataError("need more than " + std::to_string(max_lag) +
                                    " observations for the mean lag structure (have " + std::to_string(T) + ")");
    }
    if (!lags.j2.empty() && thresholds.alphas != lags.alphas) {
        throw ConfigError("threshold set was computed for different percentile levels");
    }
    const basis::PeriodicRegressors periodic(basis);
    DesignProblem problem;
    problem.first_row = first_row;
    problem.catalog = mean_catalog(lags, basis, mask, equation);
    const Eigen::Index n = T - first_row;
    problem.y = states.values.col(equation).segment(first_row, n);
    const Eigen::MatrixXd per = periodic_matrix(periodic, states.step(first_row), n);

    fill_columns(problem, per, [&](const ColumnSpec& col, Eigen::VectorXd& base) {
        if (col.source < 0) {
            base.setOnes();
            return;
        }
        const auto lagged = states.values.col(col.source).segment(first_row - col.lag, n);
        if (col.family == Family::kThreshold) {
            base = lagged.cwiseMax(thresholds.value(col.source, static_cast<std::size_t>(col.alpha_index)));
        } else {
            base = lagged;
        }
    });
    return problem;
}

DesignProblem build_variance_design(const Eigen::MatrixXd& residuals, std::int64_t first_step,
                                    const LagConfig& lags, const basis::BasisConfig& basis, int equation,
                                    Eigen::Index first_row) {
    lags.validate();
    const Eigen::Index T = residuals.rows();
    const Eigen::Index max_lag = lags.max_variance_lag();
    if (first_row < max_lag || first_row >= T) {
        throw InsufficientDataError("not enough residual history for the variance lag structure");
    }
    const Eigen::Index n = T - first_row;
    const auto eps = residuals.col(equation);
    const Eigen::Index oldest = first_row - max_lag;
    if (!eps.segment(oldest, T - oldest).allFinite()) {
        throw InsufficientDataError("residuals referenced by the variance lags are not available");
    }
    const basis::PeriodicRegressors periodic(basis);
    DesignProblem problem;
    problem.first_row = first_row;
    problem.catalog = variance_catalog(lags, basis, equation);
    problem.y = eps.segment(first_row, n).cwiseAbs();
    const Eigen::MatrixXd per = periodic_matrix(periodic, first_step + first_row, n);

    fill_columns(problem, per, [&](const ColumnSpec& col, Eigen::VectorXd& base) {
        if (col.source < 0) {
            base.setOnes();
            return;
        }
        const auto lagged = eps.segment(first_row - col.lag, n);
        if (col.family == Family::kArchPos) {
            base = lagged.cwiseMax(0.0);
        } else {
            base = (-lagged).cwiseMax(0.0);
        }
    });
    return problem;
}

void write_catalog_csv(const std::filesystem::path& path, const ColumnCatalog& catalog) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "family,equation,source,lag,i1,i2,alpha\n";
    for (const ColumnSpec& col : catalog) {
        out << family_name(col.family) << ',' << col.equation + 1 << ',';
        if (col.source >= 0) out << col.source + 1;
        out << ',';
        if (col.lag > 0) out << col.lag;
        out << ',';
        if (col.periodic >= 0) out << col.i1 << ',' << col.i2;
        else out << ',';
        out << ',';
        if (col.alpha_index >= 0) out << io::format_double(col.alpha);
        out << '\n';
    }
}

}  // namespace windcast::design
