#include "ssue/belief.hpp"

#include "ssue/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace ssue {

Vector JointBelief::xi_mean() const {
  Vector xi(x_mean.size() + 1);
  xi(0) = delta_mean;
  xi.tail(x_mean.size()) = x_mean;
  return xi;
}

void JointBelief::validate() const {
  const Index n = x_mean.size();
  if (p_delta_x.size() != n || p_x.rows() != n || p_x.cols() != n) {
    throw ContractError("joint belief blocks have inconsistent sizes");
  }
  if (!(p_delta > 0.0)) {
    throw ContractError("joint belief has non-positive delta variance");
  }
  if (!is_psd(assemble_joint_covariance(*this))) {
    throw ContractError("joint belief covariance is not positive semidefinite");
  }
}

Matrix assemble_joint_covariance(const JointBelief &b) {
  const Index n = b.x_mean.size();
  Matrix p(n + 1, n + 1);
  p(0, 0) = b.p_delta;
  p.block(0, 1, 1, n) = b.p_delta_x;
  p.block(1, 0, n, 1) = b.p_delta_x.transpose();
  p.bottomRightCorner(n, n) = b.p_x;
  return p;
}

JointBelief split_joint(const Vector &xi_mean, const Matrix &xi_cov) {
  const Index n = xi_mean.size() - 1;
  if (n < 0 || xi_cov.rows() != n + 1 || xi_cov.cols() != n + 1) {
    throw ContractError("split_joint: mean/covariance size mismatch");
  }
  const Matrix p = symmetrize(xi_cov);
  JointBelief b;
  b.delta_mean = xi_mean(0);
  b.x_mean = xi_mean.tail(n);
  b.p_delta = p(0, 0);
  b.p_delta_x = p.block(0, 1, 1, n);
  b.p_x = p.bottomRightCorner(n, n);
  return b;
}

void HypothesisBank::validate() const {
  if (beliefs.size() != weights.size() || beliefs.empty()) {
    throw ContractError("hypothesis bank: " + std::to_string(beliefs.size()) +
                        " beliefs but " + std::to_string(weights.size()) +
                        " weights");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw ContractError("hypothesis bank: negative or NaN weight");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw ContractError("hypothesis bank: weights sum to " +
                        std::to_string(sum));
  }
}

FusedEstimate fuse(const HypothesisBank &bank) {
  bank.validate();
  const Index dim = bank.beliefs.front().x_mean.size() + 1;
  Vector mean = Vector::Zero(dim);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    mean += bank.weights[i] * bank.beliefs[i].xi_mean();
  }
  Matrix cov = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const Vector spread = bank.beliefs[i].xi_mean() - mean;
    cov += bank.weights[i] * (assemble_joint_covariance(bank.beliefs[i]) +
                              spread * spread.transpose());
  }
  return {std::move(mean), symmetrize(cov)};
}

std::size_t identify_location(const std::vector<double> &weights) {
  if (weights.empty()) {
    throw ContractError("identify_location: empty weight vector");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < weights.size(); ++i) {
    if (weights[i] > weights[best]) {
      best = i;
    }
  }
  return best;
}

std::size_t identify_location(const HypothesisBank &bank) {
  bank.validate();
  return identify_location(bank.weights);
}

} // namespace ssue
