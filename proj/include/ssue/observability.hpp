// Joint observability of (x₀, δ, 𝒜) for linear measurements y = Cx.
//
// Two hypotheses (δ, 𝒜) and (δ′, 𝒜′) can be told apart from noise-free
// outputs over [0, k] for every pair of initial states exactly when
// [𝒪_k(δ,𝒜)  𝒪_k(δ′,𝒜′)] has full column rank 2n, where
// 𝒪_k(δ,𝒜) stacks C(A + δ𝒜)^j for j = 0..k. Δ is continuous, so the test
// runs over a finite DeltaGrid: a passing report is a grid certificate, not
// a proof over all of Δ.
#pragma once

#include "ssue/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ssue {

struct DeltaGrid {
  std::vector<double> values; ///< sorted, distinct
  double resolution = 0.0;    ///< largest spacing used; 0 for a single point

  /// `points_per_interval` uniform points in every interval of Δ (a
  /// degenerate interval contributes one point); duplicates are merged.
  [[nodiscard]] static DeltaGrid uniform(const UncertaintyDomain &domain,
                                         int points_per_interval = 101);
  /// Explicit values; sorted and deduplicated. Throws ContractError when a
  /// value lies outside `domain`.
  [[nodiscard]] static DeltaGrid from_values(std::vector<double> values,
                                             const UncertaintyDomain &domain);
  /// Explicit values without a domain check.
  [[nodiscard]] static DeltaGrid from_values(std::vector<double> values);

  [[nodiscard]] bool contains_zero() const noexcept;
};

struct RankTolerance {
  enum class Kind { relative, absolute };
  Kind kind = Kind::relative;
  /// relative: σ > value·σ_max, where value <= 0 selects the default
  /// max(rows, cols)·ε·σ_max; absolute: σ > value.
  double value = 0.0;

  [[nodiscard]] double threshold(const Vector &singular_values, Index rows,
                                 Index cols) const;
  [[nodiscard]] std::string describe() const;
};

/// Count of singular values above the tolerance threshold.
[[nodiscard]] Index numerical_rank(const Matrix &m,
                                   const RankTolerance &tol = {});

/// (k+1)p × n matrix whose j-th row block is C(A + δ𝒜)^j.
[[nodiscard]] Matrix stack_observability(double delta,
                                         const LocationMatrix &loc,
                                         const Matrix &A, const Matrix &C,
                                         int k);

struct Hypothesis {
  double delta = 0.0;
  std::size_t location = 0;

  friend bool operator==(const Hypothesis &, const Hypothesis &) = default;
};

/// rank [𝒪_k(first) 𝒪_k(second)].
[[nodiscard]] Index pair_rank(const Hypothesis &first,
                              const Hypothesis &second, const Matrix &A,
                              const Matrix &C, const LocationSet &locations,
                              int k, const RankTolerance &tol = {});

struct PairFailure {
  Hypothesis first;
  Hypothesis second;
  Index rank = 0;
  Index required_rank = 0;
};

struct ObservabilityReport {
  int horizon_tested = 0;
  std::optional<int> smallest_passing_N;
  std::vector<PairFailure> failures; ///< failing pairs at the horizon K
  std::vector<std::string> warnings;
  RankTolerance tolerance;
  DeltaGrid grid;
  std::size_t pairs_tested = 0;

  [[nodiscard]] bool observable() const noexcept {
    return smallest_passing_N.has_value();
  }
};

/// Tests every unordered pair of distinct hypotheses in grid × locations for
/// k = 1..K. smallest_passing_N is the smallest k at which every pair has
/// rank 2n. Throws ContractError for K < 1 or an empty grid.
[[nodiscard]] ObservabilityReport
pairwise_rank_test(const Matrix &A, const Matrix &C,
                   const LocationSet &locations, const DeltaGrid &grid, int K,
                   const RankTolerance &tol = {});

struct Reconstruction {
  Vector x0;
  double delta = 0.0;
  std::size_t location = 0;
  double residual = 0.0; ///< ‖𝒪x₀ − Y*‖ / ‖Y*‖
};

/// Recovers (x₀, δ, 𝒜) from a noise-free stacked output Y* = [y₀; …; y_k]
/// by least squares over every grid × location candidate, keeping the
/// minimal-residual candidate among those with residual <= tol.
/// Throws ExcitationError for Y* = 0 and NoMatchError when no candidate
/// fits.
[[nodiscard]] Reconstruction reconstruct(const Vector &y_stacked,
                                         const Matrix &A, const Matrix &C,
                                         const LocationSet &locations,
                                         const DeltaGrid &grid, double tol);

} // namespace ssue
