#pragma once

#include "windcast/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace windcast::io {

[[nodiscard]] nlohmann::json lag_config_to_json(const design::LagConfig& lags);
[[nodiscard]] design::LagConfig lag_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json basis_config_to_json(const basis::BasisConfig& basis);
[[nodiscard]] basis::BasisConfig basis_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json mask_to_json(const design::MaskMatrix& mask);
[[nodiscard]] design::MaskMatrix mask_from_json(const nlohmann::json& j);

/// [key, coefficient] pairs; keys must exist in `catalog`. Terms come back
/// in catalog order.
[[nodiscard]] nlohmann::json terms_to_json(const std::vector<Term>& terms);
[[nodiscard]] std::vector<Term> terms_from_json(const nlohmann::json& j, const design::ColumnCatalog& catalog);

/// Self-describing model document: configuration, thresholds, sparse
/// coefficients as [catalog key, value] pairs in catalog order, convergence
/// trace, and the standardized residual pool. Doubles round-trip exactly.
[[nodiscard]] nlohmann::json model_to_json(const FittedModel& model, const nlohmann::json& run_config = {});
[[nodiscard]] FittedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const FittedModel& model,
                const nlohmann::json& run_config = {});
[[nodiscard]] FittedModel load_model(const std::filesystem::path& path);

/// FNV-1a (64-bit, hex) of the serialized model.
[[nodiscard]] std::string model_hash(const FittedModel& model);
[[nodiscard]] std::string fnv1a_hex(const std::string& bytes);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace windcast::io
