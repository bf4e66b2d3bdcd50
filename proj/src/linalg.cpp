#include "ssue/linalg.hpp"

#include "ssue/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ssue {

Matrix symmetrize(const Matrix &m) { return 0.5 * (m + m.transpose()); }

bool is_symmetric(const Matrix &m, double tol) {
  if (m.rows() != m.cols()) {
    return false;
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_eigenvalue(const Matrix &m) {
  if (m.size() == 0) {
    return 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Matrix &m, double rel_tol) {
  if (m.rows() != m.cols()) {
    return false;
  }
  if (m.size() == 0) {
    return true;
  }
  if (!m.allFinite()) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m),
                                           Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo > -rel_tol * std::max(hi, 0.0) || lo >= 0.0;
}

bool is_pd(const Matrix &m) {
  if (m.rows() != m.cols() || !m.allFinite()) {
    return false;
  }
  Eigen::LLT<Matrix> llt(symmetrize(m));
  return llt.info() == Eigen::Success && min_eigenvalue(m) > 0.0;
}

Eigen::LLT<Matrix> robust_cholesky(const Matrix &m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw NumericalError(std::string(what) + ": matrix is not square");
  }
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": matrix has non-finite entries");
  }
  const Matrix sym = symmetrize(m);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    return llt;
  }
  llt.compute(sym + kInversionJitter * Matrix::Identity(m.rows(), m.cols()));
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) +
                         ": not positive definite after jitter (min eigenvalue " +
                         std::to_string(min_eigenvalue(sym)) + ")");
  }
  return llt;
}

double log_determinant(const Eigen::LLT<Matrix> &llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Matrix inverse_from(const Eigen::LLT<Matrix> &llt) {
  const Index n = llt.matrixLLT().rows();
  return symmetrize(llt.solve(Matrix::Identity(n, n)));
}

Matrix psd_square_root(const Matrix &m, std::string_view what) {
  const Index n = m.rows();
  if (n != m.cols()) {
    throw NumericalError(std::string(what) + ": matrix is not square");
  }
  if (n == 0) {
    return Matrix(0, 0);
  }
  Eigen::LDLT<Matrix> ldlt(symmetrize(m));
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": LDLT factorization failed");
  }
  Vector d = ldlt.vectorD();
  const double scale = std::max(d.cwiseAbs().maxCoeff(), 0.0);
  for (Index i = 0; i < n; ++i) {
    if (d(i) < -kPsdRelativeTolerance * scale) {
      throw NumericalError(std::string(what) +
                           ": matrix is indefinite, cannot sample");
    }
    d(i) = std::sqrt(std::max(d(i), 0.0));
  }
  // m = Pᵀ L D Lᵀ P
  Matrix l = ldlt.matrixL();
  Matrix factor = l * d.asDiagonal();
  return ldlt.transpositionsP().transpose() * factor;
}

} // namespace ssue
