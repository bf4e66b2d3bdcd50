#include "ssue/analysis.hpp"

#include "ssue/errors.hpp"

#include <cmath>

namespace ssue {

Matrix stacked_input_matrix(double delta, const LocationMatrix &loc,
                            const Matrix &A, const Matrix &C, int k) {
  if (k < 1) {
    throw ContractError("stacked_input_matrix: k must be >= 1");
  }
  const Index n = A.rows();
  const Index p = C.rows();
  // Row block j of the observability stack is C(A + δ𝒜)^j.
  const Matrix powers = stack_observability(delta, loc, A, C, k - 1);
  Matrix out = Matrix::Zero((k + 1) * p, k * n);
  for (int i = 1; i <= k; ++i) {
    for (int j = 0; j < i; ++j) {
      out.block(i * p, j * n, p, n) = powers.middleRows((i - j - 1) * p, p);
    }
  }
  return out;
}

StackedOutputModel output_covariance(double delta, const LocationMatrix &loc,
                                     const Matrix &A, const Matrix &C,
                                     const Matrix &Q, const Matrix &R,
                                     const Matrix &P0, int k) {
  if (k < 0) {
    throw ContractError("output_covariance: k must be >= 0");
  }
  const Index n = A.rows();
  const Index p = C.rows();
  if (Q.rows() != n || P0.rows() != n || R.rows() != p) {
    throw ContractError("output_covariance: dimension mismatch");
  }

  StackedOutputModel out;
  out.O_k = stack_observability(delta, loc, A, C, k);
  out.I_k = k >= 1 ? stacked_input_matrix(delta, loc, A, C, k)
                   : Matrix((k + 1) * p, 0);

  out.Omega_k = Matrix::Zero((k + 1) * n, (k + 1) * n);
  out.Omega_k.topLeftCorner(n, n) = P0;
  for (int j = 1; j <= k; ++j) {
    out.Omega_k.block(j * n, j * n, n, n) = Q;
  }
  out.R_k_stacked = Matrix::Zero((k + 1) * p, (k + 1) * p);
  for (int j = 0; j <= k; ++j) {
    out.R_k_stacked.block(j * p, j * p, p, p) = R;
  }

  Matrix pi(out.O_k.rows(), out.O_k.cols() + out.I_k.cols());
  pi << out.O_k, out.I_k;
  out.Sigma_k = symmetrize(pi * out.Omega_k * pi.transpose() + out.R_k_stacked);
  return out;
}

StackedOutputModel output_covariance(double delta, std::size_t location,
                                     const SystemModel &model, const Matrix &C,
                                     int k) {
  return output_covariance(delta, model.locations[location], model.A, C,
                           model.Q, model.R, model.P0, k);
}

namespace {

Eigen::LLT<Matrix> checked_cholesky(const Matrix &m, const char *what) {
  if (m.rows() != m.cols() || !is_symmetric(m)) {
    throw ContractError(std::string("gaussian_kl: ") + what +
                        " is not symmetric");
  }
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) {
    throw ContractError(std::string("gaussian_kl: ") + what +
                        " is not positive definite");
  }
  return llt;
}

double kl_from_factors(const Matrix &sigma_t, const Eigen::LLT<Matrix> &chol_t,
                       const Eigen::LLT<Matrix> &chol_i) {
  const auto m = static_cast<double>(sigma_t.rows());
  const double trace = chol_i.solve(sigma_t).trace();
  const double d =
      0.5 * (trace - m + log_determinant(chol_i) - log_determinant(chol_t));
  // Rounding can leave tiny negatives for (nearly) equal inputs.
  return std::max(d, 0.0);
}

} // namespace

double gaussian_kl(const Matrix &sigma_t, const Matrix &sigma_i) {
  if (sigma_t.rows() != sigma_i.rows() || sigma_t.cols() != sigma_i.cols()) {
    throw ContractError("gaussian_kl: covariance sizes differ");
  }
  const auto chol_t = checked_cholesky(sigma_t, "Sigma_t");
  const auto chol_i = checked_cholesky(sigma_i, "Sigma_i");
  return kl_from_factors(sigma_t, chol_t, chol_i);
}

KlSeparation kl_separation(const SystemModel &model, const Matrix &C,
                           const DeltaGrid &grid, int k) {
  KlSeparation out;
  std::vector<Matrix> sigmas;
  std::vector<Eigen::LLT<Matrix>> factors;
  for (double d : grid.values) {
    for (std::size_t m = 0; m < model.locations.size(); ++m) {
      out.hypotheses.push_back({d, m});
      sigmas.push_back(output_covariance(d, m, model, C, k).Sigma_k);
      factors.push_back(checked_cholesky(sigmas.back(), "Sigma_k"));
    }
  }
  const auto count = static_cast<Index>(out.hypotheses.size());
  out.divergence = Matrix::Zero(count, count);
  for (Index a = 0; a < count; ++a) {
    for (Index b = 0; b < count; ++b) {
      if (a == b) {
        continue;
      }
      const auto ia = static_cast<std::size_t>(a);
      const auto ib = static_cast<std::size_t>(b);
      out.divergence(a, b) = kl_from_factors(sigmas[ia], factors[ia], factors[ib]);
    }
  }
  return out;
}

std::vector<double> loglik_ratio_trajectory(const RunRecord &run,
                                            std::size_t t_index,
                                            std::size_t i_index) {
  if (run.log_lambdas.empty() || run.log_lambdas.size() != run.steps()) {
    throw ContractError("loglik_ratio_trajectory: record has no stored "
                        "log-likelihoods");
  }
  std::vector<double> out;
  out.reserve(run.log_lambdas.size());
  double sum = 0.0;
  for (const auto &step : run.log_lambdas) {
    if (t_index >= step.size() || i_index >= step.size()) {
      throw ContractError("loglik_ratio_trajectory: hypothesis index out of "
                          "range");
    }
    if (t_index != i_index) {
      sum += step[t_index] - step[i_index];
    }
    out.push_back(sum);
  }
  return out;
}

} // namespace ssue
