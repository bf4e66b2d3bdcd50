// Configuration-driven commands behind the `ssue` executable.
//
// Config file (JSON):
//   {
//     "scenario":      {...}            see scenario_io.hpp
//     "newton":        {"max_iterations": 10, "step_tolerance": 1e-9,
//                       "mode": "gauss_newton" | "full_newton",
//                       "line_search": "backtracking" | "none",
//                       "contraction": 0.5, "max_halvings": 20,
//                       "q_jitter": 1e-9},
//     "weight_floor":  1e-12,
//     "observability": {"K": 10, "grid_points": 101, "grid": [..],
//                       "tolerance_policy": {"kind": "relative"|"absolute",
//                                            "value": 0},
//                       "linearization_point": [..]},
//     "analysis":      {"k": 20, "grid": [..], "pairs": [[t, i], ..],
//                       "record_dir": "..."},
//     "output_dir":    "out"
//   }
//
// Exit codes: 0 success, 2 configuration or IO error, 3 numerical failure,
// 4 not observable on the grid at horizon K.
#pragma once

#include "ssue/filter.hpp"
#include "ssue/model_io.hpp"
#include "ssue/observability.hpp"
#include "ssue/sim.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace ssue {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitUnobservable = 4;

struct ObservabilityConfig {
  int K = 10;
  int grid_points = 101;
  std::optional<std::vector<double>> grid;
  RankTolerance tolerance;
  /// Where a nonlinear measurement map is linearized; defaults to x0.
  std::optional<Vector> linearization_point;
};

struct AnalysisConfig {
  int k = 20;
  /// δ values for the KL matrix; defaults to the scenario's true δ.
  std::optional<std::vector<double>> grid;
  /// (t, i) pairs for ratio trajectories; defaults to truth vs every other
  /// hypothesis, or all ordered pairs when the truth is unknown.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::optional<std::filesystem::path> record_dir;
};

struct RunConfig {
  explicit RunConfig(Scenario s) : scenario(std::move(s)) {}

  Scenario scenario;
  NewtonOptions newton;
  double weight_floor = kDefaultWeightFloor;
  ObservabilityConfig observability;
  AnalysisConfig analysis;
  std::filesystem::path output_dir = "out";
  int runs = 1;
  std::optional<std::filesystem::path> input;
};

/// Command-line values that win over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> input;
  std::optional<int> runs;
};

[[nodiscard]] Json newton_to_json(const NewtonOptions &opts);
[[nodiscard]] NewtonOptions newton_from_json(const Json &j);

/// Throws ConfigError on malformed or out-of-range values.
[[nodiscard]] RunConfig config_from_json(const Json &j,
                                         const Overrides &overrides = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path &path,
                                    const Overrides &overrides = {});

int cmd_simulate(const RunConfig &config, std::ostream &err);
int cmd_estimate(const RunConfig &config, std::ostream &err);
int cmd_observability(const RunConfig &config, std::ostream &err);
int cmd_analyze(const RunConfig &config, std::ostream &err);

/// Runs `fn` and converts library exceptions into exit codes, reporting the
/// message on `err`.
int guarded(std::ostream &err, const std::function<int()> &fn);

} // namespace ssue
