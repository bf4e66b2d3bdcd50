// JSON form of a Scenario. Two shapes are accepted on input:
//
//   {"preset": "tracking", "Ts": 0.1, "q": 0.05, "r": 2, "sensors": [...],
//    "true_delta": -0.05, "true_location": "A2" | 1, "x0": [...],
//    "steps": 300, "seed": 42, "delta_domain": [[lo, hi]], "P0": [[...]]}
//
//   {"model": {<SystemModel JSON>}, "true_delta": ..., "true_location": ...,
//    "x0": [...], "steps": ..., "seed": ..., "Ts": ...}
//
// Preset fields are all optional. "true_location" is a label or a zero-based
// index. Output always uses the explicit "model" shape.
#pragma once

#include "ssue/model_io.hpp"
#include "ssue/sim.hpp"

namespace ssue {

[[nodiscard]] Json scenario_to_json(const Scenario &s);
[[nodiscard]] Scenario scenario_from_json(const Json &j);

} // namespace ssue
