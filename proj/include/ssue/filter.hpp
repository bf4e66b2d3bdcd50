// Simultaneous state and uncertainty estimation recursion.
//
// Every hypothesis i carries a Gaussian over ξ = [δ; x] conditioned on 𝒜ᵢ.
// One step is:
//   1. predict the belief through the linearized perturbed dynamics,
//   2. score the measurement against the predicted belief (λᵢ),
//   3. refine the belief by a Gauss-Newton or Newton MAP iteration,
//   4. reweight the hypotheses by λᵢ and fuse them into one estimate.
// The hypotheses never exchange information; only their outputs are fused.
#pragma once

#include "ssue/belief.hpp"
#include "ssue/model.hpp"

#include <vector>

namespace ssue {

enum class NewtonMode { gauss_newton, full_newton };
enum class LineSearch { none, backtracking };

struct NewtonOptions {
  int max_iterations = 10;
  double step_tolerance = 1e-9;
  NewtonMode mode = NewtonMode::gauss_newton;
  LineSearch line_search = LineSearch::backtracking;
  double contraction = 0.5;
  int max_halvings = 20;
  /// Added to Q's diagonal during prediction when Q is singular.
  double q_jitter = 1e-9;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

inline constexpr double kDefaultWeightFloor = 1e-12;

struct UpdateReport {
  int iterations_used = 0;
  double final_cost = 0.0;
  /// L(ξ⁽⁰⁾), L(ξ⁽¹⁾), ... for every accepted iterate.
  std::vector<double> cost_trajectory;
  bool converged = false;
};

struct UpdateResult {
  JointBelief posterior;
  UpdateReport report;
};

struct StepResult {
  HypothesisBank bank;
  FusedEstimate fused;
  std::size_t identified_index = 0;
  std::vector<double> lambdas;
  std::vector<double> log_lambdas;
  std::vector<UpdateReport> reports;
};

/// Linearized propagation of a joint belief through x⁺ = (A + δ𝒜)x + w.
[[nodiscard]] JointBelief predict(const JointBelief &b,
                                  const LocationMatrix &loc, const Matrix &A,
                                  const Matrix &Q,
                                  double q_jitter = NewtonOptions{}.q_jitter);

/// MAP cost L(ξ) = ‖R^{-1/2}(y − h(x))‖² + ‖P^{-1/2}(ξ − ξ̂)‖².
[[nodiscard]] double map_cost(const JointBelief &pred, const Vector &y,
                              const MeasurementMap &map, const Matrix &R,
                              const Vector &xi);

/// Iterated MAP measurement update starting from the predicted mean.
[[nodiscard]] UpdateResult newton_update(const JointBelief &pred,
                                         const Vector &y,
                                         const MeasurementMap &map,
                                         const Matrix &R,
                                         const NewtonOptions &opts);

/// log p(y | 𝒜ᵢ, Y_{k−1}) from the innovation density N(h(x̂), Γ),
/// Γ = ∇h·P^x·∇hᵀ + R, evaluated at the predicted belief.
[[nodiscard]] double log_likelihood(const JointBelief &pred, const Vector &y,
                                    const MeasurementMap &map, const Matrix &R);
/// exp(log_likelihood); underflows to 0 for large innovations.
[[nodiscard]] double likelihood(const JointBelief &pred, const Vector &y,
                                const MeasurementMap &map, const Matrix &R);

/// μᵢ ∝ λᵢ·μᵢ,prev computed by log-sum-exp from log λ, then floored at
/// `floor` and renormalized. Throws DegenerateEvidenceError when every
/// product is zero.
[[nodiscard]] std::vector<double>
update_weights_log(const std::vector<double> &mu_prev,
                   const std::vector<double> &log_lambdas,
                   double floor = kDefaultWeightFloor);
/// Same as update_weights_log with λ given in the linear domain.
[[nodiscard]] std::vector<double>
update_weights(const std::vector<double> &mu_prev,
               const std::vector<double> &lambdas,
               double floor = kDefaultWeightFloor);

/// Bank at k = 0: δ̂ at the midpoint of Δ's hull with variance equal to the
/// squared half-width, x̂ = 0 with covariance P0, equal weights.
[[nodiscard]] HypothesisBank initial_bank(const SystemModel &model);

/// One full recursion step. `step` only annotates error messages.
[[nodiscard]] StepResult ssue_step(const HypothesisBank &bank, const Vector &y,
                                   const SystemModel &model,
                                   const NewtonOptions &opts,
                                   double weight_floor = kDefaultWeightFloor,
                                   long step = -1);

struct GaussianState {
  Vector mean;
  Matrix cov;
};

/// Extended Kalman filter step on the nominal model (δ = 0).
[[nodiscard]] GaussianState ekf_step(const Vector &mean, const Matrix &cov,
                                     const Vector &y, const SystemModel &model);

} // namespace ssue
