// Gaussian beliefs over the augmented vector ξ = [δ; x].
#pragma once

#include "ssue/linalg.hpp"

#include <cstddef>
#include <vector>

namespace ssue {

/// Gaussian over ξ = [δ; x] stored in block form.
struct JointBelief {
  double delta_mean = 0.0;
  Vector x_mean;
  double p_delta = 1.0;
  RowVector p_delta_x; ///< 1×n cross-covariance between δ and x
  Matrix p_x;

  [[nodiscard]] Index state_dim() const noexcept { return x_mean.size(); }
  /// [δ̂; x̂]
  [[nodiscard]] Vector xi_mean() const;

  /// Throws ContractError on inconsistent block sizes, p_delta <= 0, or a
  /// joint covariance that fails the PSD tolerance.
  void validate() const;
};

/// [[P^δ, P^{δx}], [P^{δx}ᵀ, P^x]]
[[nodiscard]] Matrix assemble_joint_covariance(const JointBelief &b);

/// Inverse of assemble_joint_covariance: split an (n+1) mean and covariance
/// back into blocks. The covariance is symmetrized first.
[[nodiscard]] JointBelief split_joint(const Vector &xi_mean,
                                      const Matrix &xi_cov);

struct HypothesisBank {
  std::vector<JointBelief> beliefs;
  std::vector<double> weights; ///< μᵢ = p(𝒜ᵢ | Y_k)

  [[nodiscard]] std::size_t size() const noexcept { return beliefs.size(); }
  /// Throws ContractError if lengths differ, any weight is negative, or the
  /// weights do not sum to one within 1e-12.
  void validate() const;
};

struct FusedEstimate {
  Vector xi_mean;
  Matrix xi_cov;
};

/// Moment-matched collapse of the bank into a single Gaussian:
///   ξ̂ = Σ μᵢ ξ̂ᵢ,  P = Σ μᵢ [Pᵢ + (ξ̂ᵢ − ξ̂)(ξ̂ᵢ − ξ̂)ᵀ]
[[nodiscard]] FusedEstimate fuse(const HypothesisBank &bank);

/// Zero-based index of the largest weight; ties go to the lowest index.
[[nodiscard]] std::size_t identify_location(const std::vector<double> &weights);
[[nodiscard]] std::size_t identify_location(const HypothesisBank &bank);

inline constexpr double kWeightSumTolerance = 1e-12;

} // namespace ssue
