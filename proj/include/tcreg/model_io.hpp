#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "tcreg/model.hpp"
#include "tcreg/shape_calculus.hpp"

namespace tcreg {

/// Version tag written to and required from every model file.
inline constexpr int kModelSchemaVersion = 1;

// Model files are JSON:
//   {schema_version, variant, shape, s, p, q, d, scaler: [{min, max}, ...], intercept,
//    monomial_terms: [{S, T, coef}, ...], hinge_terms: [{S, T, knots, weight}, ...]}
// Axially concave models use variant "axial" with
//   {schema_version, variant, shape, d, scaler, breakpoints: [[...], ...], theta: [...]}.
// Coordinate indices in S and T are zero-based.

nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const AcFittedModel& model);
AcFittedModel axial_model_from_json(const nlohmann::json& j);

using AnyModel = std::variant<FittedModel, AcFittedModel>;

void save_model(const FittedModel& model, const std::filesystem::path& path);
void save_model(const AcFittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);
AnyModel load_any_model(const std::filesystem::path& path);

nlohmann::json report_to_json(const CertificateReport& report);

}  // namespace tcreg
