// Helpers shared by the unit and acceptance tests. Oracles here are written
// without calling the library routine they check.
#pragma once

#include "ssue/belief.hpp"
#include "ssue/linalg.hpp"
#include "ssue/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace ssue::test {

inline Matrix random_matrix(std::mt19937_64 &rng, Index rows, Index cols,
                            double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = normal(rng);
    }
  }
  return m;
}

inline Vector random_vector(std::mt19937_64 &rng, Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

/// Symmetric positive definite with eigenvalues in [lo, hi].
inline Matrix random_spd(std::mt19937_64 &rng, Index n, double lo = 0.5,
                         double hi = 5.0) {
  const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
  const Matrix q = qr.householderQ();
  std::uniform_real_distribution<double> eig(lo, hi);
  Vector d(n);
  for (Index i = 0; i < n; ++i) {
    d(i) = eig(rng);
  }
  Matrix s = q * d.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

/// Joint belief over [δ; x] with a random SPD joint covariance.
inline JointBelief random_belief(std::mt19937_64 &rng, Index n,
                                 double mean_scale = 1.0, double lo = 0.5,
                                 double hi = 5.0) {
  const Matrix cov = random_spd(rng, n + 1, lo, hi);
  const Vector mean = random_vector(rng, n + 1, mean_scale);
  JointBelief b;
  b.delta_mean = mean(0);
  b.x_mean = mean.tail(n);
  b.p_delta = cov(0, 0);
  b.p_delta_x = cov.block(0, 1, 1, n);
  b.p_x = cov.bottomRightCorner(n, n);
  return b;
}

inline Matrix joint_cov(const JointBelief &b) {
  const Index n = b.x_mean.size();
  Matrix p(n + 1, n + 1);
  p(0, 0) = b.p_delta;
  p.block(0, 1, 1, n) = b.p_delta_x;
  p.block(1, 0, n, 1) = b.p_delta_x.transpose();
  p.bottomRightCorner(n, n) = b.p_x;
  return p;
}

inline Vector joint_mean(const JointBelief &b) {
  Vector m(b.x_mean.size() + 1);
  m << b.delta_mean, b.x_mean;
  return m;
}

inline double rel_error(const Matrix &a, const Matrix &b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

/// Textbook Kalman measurement update of the augmented state with
/// observation matrix [0 C], in Joseph form.
struct KalmanResult {
  Vector mean;
  Matrix cov;
};

inline KalmanResult augmented_kalman_update(const Vector &mean,
                                            const Matrix &cov, const Matrix &C,
                                            const Matrix &R, const Vector &y) {
  const Index n = C.cols();
  Matrix H = Matrix::Zero(C.rows(), n + 1);
  H.rightCols(n) = C;
  const Matrix S = H * cov * H.transpose() + R;
  const Matrix K = cov * H.transpose() * S.inverse();
  const Matrix I = Matrix::Identity(n + 1, n + 1);
  KalmanResult out;
  out.mean = mean + K * (y - H * mean);
  out.cov = (I - K * H) * cov * (I - K * H).transpose() + K * R * K.transpose();
  return out;
}

/// Ranges from (px, py) to each sensor, written independently of the map.
inline Vector ranges(const std::vector<SensorPosition> &sensors, double px,
                     double py) {
  Vector out(static_cast<Index>(sensors.size()));
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    out(static_cast<Index>(i)) =
        std::hypot(px - sensors[i].x, py - sensors[i].y);
  }
  return out;
}

inline bool is_simplex(const std::vector<double> &mu, double tol = 1e-12) {
  double sum = 0.0;
  for (double m : mu) {
    if (!(m >= 0.0)) {
      return false;
    }
    sum += m;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline bool symmetric_pd(const Matrix &m) {
  if ((m - m.transpose()).norm() > 1e-10 * std::max(1.0, m.norm())) {
    return false;
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().minCoeff() > 0.0;
}

} // namespace ssue::test
