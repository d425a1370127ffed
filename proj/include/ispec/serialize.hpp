#pragma once

// JSON interchange forms.
//
//   FiniteMeasure   -> plain array of weights; product spaces serialize as
//                      {"shape": [...], "weights": [...]}.
//   Kernel          -> {"rows": [[...], ...]} (array of row weight arrays).
//   HplPoint        -> the kappa value as a number, or the string "inf"
//                      for the point [1:0].
//   ExtractorPair   -> {"phi1": [...], "phi2": [...]} (two integer arrays).

#include <json.hpp>

#include "ispec/hpl.hpp"
#include "ispec/measure.hpp"
#include "ispec/rng.hpp"

namespace ispec {

inline nlohmann::json to_json(const HplPoint& p) {
  if (p.is_infinite()) return "inf";
  return p.kappa();
}

inline HplPoint hpl_point_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return HplPoint::infinity();
    throw std::invalid_argument("HplPoint: unknown string form");
  }
  if (!j.is_number()) throw std::invalid_argument("HplPoint: expected number");
  return HplPoint::from_kappa(j.get<double>());
}

inline nlohmann::json to_json(const FiniteMeasure& mu) {
  nlohmann::json weights = mu.weights();
  if (!mu.space().is_product()) return weights;
  return {{"shape", mu.space().factor_shape}, {"weights", weights}};
}

inline FiniteMeasure measure_from_json(const nlohmann::json& j) {
  if (j.is_array()) {
    auto w = j.get<std::vector<double>>();
    GroundSpace space = GroundSpace::simple(w.size());
    return FiniteMeasure(std::move(space), std::move(w));
  }
  if (!j.is_object() || !j.contains("shape") || !j.contains("weights"))
    throw std::invalid_argument(
        "FiniteMeasure: expected array or {shape, weights}");
  GroundSpace space =
      GroundSpace::product(j["shape"].get<std::vector<std::size_t>>());
  return FiniteMeasure(std::move(space), j["weights"].get<std::vector<double>>());
}

inline nlohmann::json to_json(const Kernel& k) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t x = 0; x < k.source().cell_count; ++x)
    rows.push_back(k.row(x).weights());
  return {{"rows", rows}};
}

inline Kernel kernel_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array() ||
      j["rows"].empty())
    throw std::invalid_argument("Kernel: expected nonempty {rows}");
  auto rows = j["rows"].get<std::vector<std::vector<double>>>();
  GroundSpace source = GroundSpace::simple(rows.size());
  GroundSpace target = GroundSpace::simple(rows.front().size());
  return Kernel(std::move(source), std::move(target), std::move(rows));
}

inline nlohmann::json to_json(const ExtractorPair& phi) {
  return {{"phi1", phi.phi1}, {"phi2", phi.phi2}};
}

}  // namespace ispec
