// Truth and measurement generation, the planar range-tracking preset, and
// seeded Monte-Carlo evaluation.
//
// Randomness: each run owns one std::mt19937_64 seeded with its seed. A
// uniform in [0, 1) is formed from the top 53 bits of one engine output and
// standard normals come from the Box-Muller transform (both outputs used,
// cosine branch first). Per step the process noise w_{k-1} (n normals) is
// drawn before the measurement noise v_k (p normals).
#pragma once

#include "ssue/filter.hpp"
#include "ssue/model.hpp"
#include "ssue/record.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ssue {

struct Scenario {
  SystemModel model;
  double true_delta = 0.0;
  std::size_t true_loc_index = 0; ///< zero-based into model.locations
  Vector x0_truth;
  int steps = 1;
  std::uint64_t seed = 0;
  double Ts = 0.1;

  /// Throws ContractError for steps < 1, Ts <= 0, an invalid location
  /// index or a mismatched x0.
  void validate() const;
};

/// Constant-velocity planar target observed by range sensors. Defaults mirror
/// the reference experiment where one is given (δ, q, r, true location 𝒜₂);
/// Ts, sensors, x0, P0, Δ and run length are our own choices.
struct TrackingParams {
  double Ts = 0.1;
  double q = 0.05;
  double r = 2.0;
  std::vector<SensorPosition> sensors{{-10.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
  double true_delta = -0.05;
  std::size_t true_loc_index = 1;
  Vector x0 = (Vector(4) << 5.0, 5.0, 1.0, -0.5).finished();
  int steps = 300;
  std::uint64_t seed = 42;
  std::vector<Interval> delta_domain{{-0.2, -0.01}};
  Matrix P0 = (Vector(4) << 25.0, 25.0, 4.0, 4.0).finished().asDiagonal();
};

[[nodiscard]] Scenario tracking_preset(const TrackingParams &params = {});

/// Standard-normal source described in the header comment.
class NormalSampler {
public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  [[nodiscard]] double uniform();
  [[nodiscard]] double normal();
  [[nodiscard]] Vector normals(Index count);

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Truth trajectory and noisy measurements only.
[[nodiscard]] RunRecord simulate(const Scenario &scenario);

/// Filter an already simulated record (truth optional) in place: SSUE and
/// the EKF baseline consume the identical measurement sequence.
void estimate_into(RunRecord &record, const SystemModel &model,
                   const NewtonOptions &opts,
                   double weight_floor = kDefaultWeightFloor);

/// simulate followed by estimate_into.
[[nodiscard]] RunRecord run_estimation(const Scenario &scenario,
                                       const NewtonOptions &opts,
                                       double weight_floor = kDefaultWeightFloor);

struct RunMetrics {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<double> final_weights;
  std::size_t identified = 0;
  bool identification_success = false;
  std::vector<double> delta_error;  ///< |δ̂_k − δ| per step
  double final_delta_error = 0.0;
  Vector rmse_ssue;                 ///< per state component
  Vector rmse_ekf;
  double compare_rmse_ssue = 0.0;   ///< over MonteCarloOptions::compare_states
  double compare_rmse_ekf = 0.0;
};

/// Per-state and combined root-mean-square errors of the fused SSUE and EKF
/// estimates against the truth.
[[nodiscard]] RunMetrics run_metrics(const RunRecord &record,
                                     const std::vector<Index> &compare_states);

struct MonteCarloOptions {
  int n_runs = 20;
  std::uint64_t seed_base = 0;
  NewtonOptions newton{};
  double weight_floor = kDefaultWeightFloor;
  /// Components pooled into compare_rmse_*; empty means all.
  std::vector<Index> compare_states;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct MetricsSummary {
  std::vector<RunMetrics> runs;
  int failed_runs = 0;
  double success_rate = 0.0;           ///< over completed runs
  double median_final_delta_error = 0.0;
  double ssue_better_rate = 0.0;       ///< compare_rmse_ssue < compare_rmse_ekf
  Vector mean_rmse_ssue;
  Vector mean_rmse_ekf;
};

/// Run n_runs copies of `scenario_template` with seeds seed_base + i.
[[nodiscard]] MetricsSummary monte_carlo(const Scenario &scenario_template,
                                         const MonteCarloOptions &opts);

/// Stable 64-bit FNV-1a over the canonical JSON of the scenario, as hex.
[[nodiscard]] std::string scenario_hash(const Scenario &scenario);

} // namespace ssue
