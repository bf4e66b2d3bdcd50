#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace ssue {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kPsdRelativeTolerance = 1e-10;
inline constexpr double kInversionJitter = 1e-12;

/// (M + Mᵀ)/2.
[[nodiscard]] Matrix symmetrize(const Matrix &m);

[[nodiscard]] bool is_symmetric(const Matrix &m,
                                double tol = kSymmetryTolerance);

/// Minimum eigenvalue of the symmetric part of m.
[[nodiscard]] double min_eigenvalue(const Matrix &m);

/// PSD in the relaxed sense: λ_min > −tol·max(λ_max, 0).
[[nodiscard]] bool is_psd(const Matrix &m,
                          double rel_tol = kPsdRelativeTolerance);

/// Strictly positive definite (Cholesky succeeds and λ_min > 0).
[[nodiscard]] bool is_pd(const Matrix &m);

/// Cholesky factorization of a symmetric matrix. If the first attempt fails
/// the factorization is retried once with `kInversionJitter·I` added; a
/// second failure throws NumericalError naming `what`.
[[nodiscard]] Eigen::LLT<Matrix> robust_cholesky(const Matrix &m,
                                                 std::string_view what);

/// log det of the matrix factored by `llt`.
[[nodiscard]] double log_determinant(const Eigen::LLT<Matrix> &llt);

/// Inverse of the matrix factored by `llt`, symmetrized.
[[nodiscard]] Matrix inverse_from(const Eigen::LLT<Matrix> &llt);

/// Square-root factor S with S·Sᵀ = m for a symmetric PSD matrix, computed by
/// a pivoted LDLᵀ so that singular (including zero) inputs are handled
/// exactly. Throws NumericalError when m is indefinite.
[[nodiscard]] Matrix psd_square_root(const Matrix &m, std::string_view what);

} // namespace ssue
