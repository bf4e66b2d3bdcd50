// JSON form of SystemModel:
//
//   {
//     "A": [[...], ...],
//     "locations": [ [[0,1],[0,0]], ... ],
//     "location_labels": ["A1", ...],          (optional)
//     "delta_domain": [[lo, hi], ...],
//     "Q": ..., "R": ..., "P0": ...,
//     "measurement": {"type": "linear", "C": ...}
//                  | {"type": "range", "sensors": [[sx, sy], ...],
//                     "position_indices": [ix, iy]}
//   }
//
// Matrices are arrays of row arrays. Parsing errors throw ConfigError.
#pragma once

#include "ssue/model.hpp"

#include <json.hpp>

namespace ssue {

using Json = nlohmann::json;

[[nodiscard]] Json matrix_to_json(const Matrix &m);
[[nodiscard]] Json vector_to_json(const Vector &v);
[[nodiscard]] Matrix matrix_from_json(const Json &j, std::string_view what);
[[nodiscard]] Vector vector_from_json(const Json &j, std::string_view what);

[[nodiscard]] Json measurement_to_json(const MeasurementMap &map);
[[nodiscard]] MeasurementMapPtr measurement_from_json(const Json &j,
                                                      Index state_dim);

[[nodiscard]] Json model_to_json(const SystemModel &m);
[[nodiscard]] SystemModel model_from_json(const Json &j);

} // namespace ssue
