// Consistency diagnostics for location identification.
//
// With x₀ ~ N(0, P0) and linear outputs, the stacked output
// Y_k = [y₀; …; y_k] = 𝒪_k x₀ + ℐ_k W_k + V_k is zero-mean Gaussian with
// covariance Σ_k. Hypotheses whose Σ_k differ are separated by a positive
// KL divergence, and the true hypothesis' cumulative log-likelihood ratio
// against any other should grow with k.
#pragma once

#include "ssue/model.hpp"
#include "ssue/observability.hpp"
#include "ssue/record.hpp"

#include <vector>

namespace ssue {

/// (k+1)p × kn block lower-triangular matrix: block (i, j) is
/// C(A + δ𝒜)^{i−j−1} for i > j and zero otherwise.
[[nodiscard]] Matrix stacked_input_matrix(double delta,
                                          const LocationMatrix &loc,
                                          const Matrix &A, const Matrix &C,
                                          int k);

struct StackedOutputModel {
  Matrix O_k;
  Matrix I_k;
  Matrix Omega_k;     ///< blkdiag(P0, Q, …, Q) with k copies of Q
  Matrix R_k_stacked; ///< blkdiag(R, …, R) with k+1 copies
  Matrix Sigma_k;     ///< [O_k I_k] Ω_k [O_k I_k]ᵀ + R_k
};

[[nodiscard]] StackedOutputModel
output_covariance(double delta, const LocationMatrix &loc, const Matrix &A,
                  const Matrix &C, const Matrix &Q, const Matrix &R,
                  const Matrix &P0, int k);

/// Uses the model's A, Q, R, P0 and the given linear measurement matrix C.
[[nodiscard]] StackedOutputModel output_covariance(double delta,
                                                   std::size_t location,
                                                   const SystemModel &model,
                                                   const Matrix &C, int k);

/// D(N(0, Σ_t) ‖ N(0, Σ_i)). Throws ContractError unless both inputs are
/// symmetric positive definite of equal size.
[[nodiscard]] double gaussian_kl(const Matrix &sigma_t, const Matrix &sigma_i);

struct KlSeparation {
  std::vector<Hypothesis> hypotheses; ///< grid-major, location-minor
  Matrix divergence; ///< divergence(a, b) = D(hypothesis a ‖ hypothesis b)
};

[[nodiscard]] KlSeparation kl_separation(const SystemModel &model,
                                         const Matrix &C,
                                         const DeltaGrid &grid, int k);

/// Σ_τ≤k (log λ_t,τ − log λ_i,τ) for every step of the record.
[[nodiscard]] std::vector<double>
loglik_ratio_trajectory(const RunRecord &run, std::size_t t_index,
                        std::size_t i_index);

} // namespace ssue
