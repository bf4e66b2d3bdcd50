#pragma once

#include "ssue/belief.hpp"
#include "ssue/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ssue {

/// Everything produced by one simulated or replayed run. Entry k of each
/// series belongs to time step k+1 (the first measurement follows one
/// transition from x₀).
struct RunRecord {
  std::uint64_t seed = 0;
  std::string scenario_hash;
  std::vector<std::string> labels;
  std::optional<std::size_t> true_loc_index;
  std::optional<double> true_delta;

  std::vector<Vector> truth; ///< empty when replaying external measurements
  std::vector<Vector> measurements;

  // Filled by run_estimation.
  std::vector<std::vector<double>> log_lambdas; ///< [step][hypothesis]
  std::vector<std::vector<double>> weights;     ///< [step][hypothesis]
  std::vector<FusedEstimate> fused;
  std::vector<std::size_t> identified;
  std::vector<Vector> ekf_mean;
  std::vector<Matrix> ekf_cov;

  [[nodiscard]] std::size_t steps() const noexcept {
    return measurements.size();
  }
  [[nodiscard]] bool has_truth() const noexcept { return !truth.empty(); }
  [[nodiscard]] bool has_estimates() const noexcept { return !fused.empty(); }
};

} // namespace ssue
