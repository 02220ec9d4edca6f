#include "windcast/model_io.hpp"

#include "windcast/error.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace windcast::io {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json matrix_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != static_cast<std::size_t>(cols)) {
            throw DataError("model file: matrix row has the wrong width");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

template <class T, std::size_t N>
json array_json(const std::array<T, N>& a) {
    json out = json::array();
    for (const auto& v : a) out.push_back(v);
    return out;
}

template <class T, std::size_t N>
void array_from(const json& j, std::array<T, N>& a) {
    for (std::size_t i = 0; i < N && i < j.size(); ++i) a[i] = j[i].get<T>();
}

}  // namespace

json terms_to_json(const std::vector<Term>& terms) {
    json out = json::array();
    for (const Term& t : terms) out.push_back(json::array({t.column.key(), t.coefficient}));
    return out;
}

std::vector<Term> terms_from_json(const json& j, const design::ColumnCatalog& catalog) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(catalog.size());
    for (std::size_t c = 0; c < catalog.size(); ++c) index.emplace(catalog[c].key(), c);
    std::vector<std::pair<std::size_t, Term>> found;
    for (const auto& entry : j) {
        const auto key = entry.at(0).get<std::string>();
        const auto it = index.find(key);
        if (it == index.end()) {
            throw DataError("coefficient key '" + key + "' does not match the configuration");
        }
        found.push_back({it->second, Term{catalog[it->second], entry.at(1).get<double>()}});
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Term> terms;
    terms.reserve(found.size());
    for (auto& f : found) terms.push_back(std::move(f.second));
    return terms;
}

json lag_config_to_json(const design::LagConfig& lags) {
    return json{{"j1", lags.j1}, {"j2", lags.j2}, {"p", lags.p}, {"q", lags.q}, {"alphas", lags.alphas}};
}

design::LagConfig lag_config_from_json(const json& j) {
    design::LagConfig lags;
    lags.j1 = j.value("j1", std::vector<int>{});
    lags.j2 = j.value("j2", std::vector<int>{});
    lags.p = j.value("p", std::vector<int>{});
    lags.q = j.value("q", std::vector<int>{});
    lags.alphas = j.value("alphas", std::vector<double>{});
    return lags;
}

json basis_config_to_json(const basis::BasisConfig& basis) {
    return json{{"k1", basis.k1}, {"k2", basis.k2}, {"s1", basis.s1}, {"s2", basis.s2}};
}

basis::BasisConfig basis_config_from_json(const json& j) {
    basis::BasisConfig b;
    b.k1 = j.value("k1", b.k1);
    b.k2 = j.value("k2", b.k2);
    b.s1 = j.value("s1", b.s1);
    b.s2 = j.value("s2", b.s2);
    return b;
}

json mask_to_json(const design::MaskMatrix& mask) {
    json rows = json::array();
    for (const auto& row : mask.allowed) {
        json r = json::array();
        for (const auto v : row) r.push_back(static_cast<int>(v));
        rows.push_back(std::move(r));
    }
    return rows;
}

design::MaskMatrix mask_from_json(const json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "default") return design::MaskMatrix::standard();
        if (name == "full") return design::MaskMatrix::full();
        throw ConfigError("mask must be \"default\", \"full\" or a 6x6 0/1 matrix");
    }
    if (!j.is_array() || j.size() != kStateDim) {
        throw ConfigError("mask must be a 6x6 0/1 matrix");
    }
    design::MaskMatrix mask;
    for (std::size_t r = 0; r < kStateDim; ++r) {
        if (!j[r].is_array() || j[r].size() != kStateDim) {
            throw ConfigError("mask must be a 6x6 0/1 matrix");
        }
        for (std::size_t c = 0; c < kStateDim; ++c) {
            const int v = j[r][c].get<int>();
            if (v != 0 && v != 1) throw ConfigError("mask entries must be 0 or 1");
            mask.allowed[r][c] = static_cast<std::uint8_t>(v);
        }
    }
    return mask;
}

json model_to_json(const FittedModel& model, const json& run_config) {
    json j;
    j["format"] = "windcast-model";
    j["version"] = kFormatVersion;
    j["lags"] = lag_config_to_json(model.lags);
    j["basis"] = basis_config_to_json(model.basis);
    j["mask"] = mask_to_json(model.mask);
    j["thresholds"] = json{{"alphas", model.thresholds.alphas},
                           {"values", matrix_rows(model.thresholds.values)}};
    j["first_step"] = model.first_step;
    j["rows"] = model.n_rows;
    j["mean_start"] = model.mean_start;
    j["variance_start"] = model.variance_start;
    j["iterations"] = model.iterations;
    j["converged"] = model.converged;
    json eqs = json::array();
    for (int e = 0; e < kStateDim; ++e) {
        const EquationModel& eq = model.equations[static_cast<std::size_t>(e)];
        eqs.push_back(json{{"component", kComponentNames[static_cast<std::size_t>(e)]},
                           {"mean_columns", eq.mean_columns},
                           {"variance_columns", eq.variance_columns},
                           {"mean_lambda", eq.mean_lambda},
                           {"variance_lambda", eq.variance_lambda},
                           {"sigma_floor", eq.sigma_floor},
                           {"failed", eq.failed},
                           {"failure", eq.failure},
                           {"mean", terms_to_json(eq.mean_terms)},
                           {"variance", terms_to_json(eq.variance_terms)}});
    }
    j["equations"] = std::move(eqs);
    json trace = json::array();
    for (const IterationRecord& r : model.trace) {
        trace.push_back(json{{"delta", r.delta},
                             {"mean_lambda", array_json(r.mean_lambda)},
                             {"variance_lambda", array_json(r.variance_lambda)},
                             {"mean_active", array_json(r.mean_active)},
                             {"variance_active", array_json(r.variance_active)},
                             {"mean_converged", array_json(r.mean_converged)}});
    }
    j["trace"] = std::move(trace);
    j["residual_pool"] = matrix_rows(model.standardized);
    if (!run_config.is_null()) j["run_config"] = run_config;
    return j;
}

FittedModel model_from_json(const json& j) {
    try {
        if (j.value("format", std::string{}) != "windcast-model") {
            throw DataError("not a model file (missing format tag)");
        }
        if (j.at("version").get<int>() != kFormatVersion) {
            throw DataError("unsupported model file version");
        }
        FittedModel model;
        model.lags = lag_config_from_json(j.at("lags"));
        model.basis = basis_config_from_json(j.at("basis"));
        model.mask = mask_from_json(j.at("mask"));
        model.lags.validate();
        model.basis.validate();
        model.thresholds.alphas = j.at("thresholds").at("alphas").get<std::vector<double>>();
        model.thresholds.values =
            matrix_from_rows(j.at("thresholds").at("values"), static_cast<Eigen::Index>(model.thresholds.alphas.size()));
        if (model.thresholds.values.rows() == 0) model.thresholds.values.resize(kStateDim, 0);
        model.first_step = j.at("first_step").get<std::int64_t>();
        model.n_rows = j.at("rows").get<Eigen::Index>();
        model.mean_start = j.at("mean_start").get<Eigen::Index>();
        model.variance_start = j.at("variance_start").get<Eigen::Index>();
        model.iterations = j.at("iterations").get<int>();
        model.converged = j.at("converged").get<bool>();
        const json& eqs = j.at("equations");
        if (eqs.size() != kStateDim) throw DataError("model file must hold six equations");
        for (int e = 0; e < kStateDim; ++e) {
            const json& q = eqs[static_cast<std::size_t>(e)];
            EquationModel& eq = model.equations[static_cast<std::size_t>(e)];
            eq.mean_columns = q.at("mean_columns").get<std::size_t>();
            eq.variance_columns = q.at("variance_columns").get<std::size_t>();
            eq.mean_lambda = q.at("mean_lambda").get<double>();
            eq.variance_lambda = q.at("variance_lambda").get<double>();
            eq.sigma_floor = q.at("sigma_floor").get<double>();
            eq.failed = q.at("failed").get<bool>();
            eq.failure = q.at("failure").get<std::string>();
            eq.mean_terms = terms_from_json(q.at("mean"), design::mean_catalog(model.lags, model.basis, model.mask, e));
            eq.variance_terms = terms_from_json(q.at("variance"), design::variance_catalog(model.lags, model.basis, e));
        }
        for (const json& r : j.at("trace")) {
            IterationRecord rec;
            rec.delta = r.at("delta").get<double>();
            array_from(r.at("mean_lambda"), rec.mean_lambda);
            array_from(r.at("variance_lambda"), rec.variance_lambda);
            array_from(r.at("mean_active"), rec.mean_active);
            array_from(r.at("variance_active"), rec.variance_active);
            array_from(r.at("mean_converged"), rec.mean_converged);
            model.trace.push_back(rec);
        }
        model.standardized = matrix_from_rows(j.at("residual_pool"), kStateDim);
        return model;
    } catch (const json::exception& err) {
        throw DataError(std::string("malformed model file: ") + err.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(1) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& err) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + err.what());
    }
}

void save_model(const std::filesystem::path& path, const FittedModel& model, const json& run_config) {
    write_json(path, model_to_json(model, run_config));
}

FittedModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string model_hash(const FittedModel& model) { return fnv1a_hex(model_to_json(model).dump()); }

}  // namespace windcast::io
