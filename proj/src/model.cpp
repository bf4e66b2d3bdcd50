#include "ssue/model.hpp"

#include "ssue/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ssue {

namespace {

std::string dims(const Matrix &m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace

LocationMatrix::LocationMatrix(Matrix entries, std::string label)
    : entries_(std::move(entries)), label_(std::move(label)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw ConfigError("location matrix '" + label_ + "' must be square, got " +
                      dims(entries_));
  }
  bool any_one = false;
  for (Index i = 0; i < entries_.size(); ++i) {
    const double v = entries_.data()[i];
    if (v != 0.0 && v != 1.0) {
      throw ConfigError("location matrix '" + label_ +
                        "' has an entry that is not 0 or 1");
    }
    any_one = any_one || v == 1.0;
  }
  if (!any_one) {
    throw ConfigError("location matrix '" + label_ +
                      "' is all zero; delta would be unidentifiable");
  }
}

LocationSet::LocationSet(std::vector<LocationMatrix> members)
    : LocationSet(std::move(members), Unchecked{}) {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    for (std::size_t j = i + 1; j < members_.size(); ++j) {
      if (members_[i] == members_[j]) {
        throw ConfigError("location matrices '" + members_[i].label() +
                          "' and '" + members_[j].label() + "' are identical");
      }
    }
  }
}

LocationSet::LocationSet(std::vector<LocationMatrix> members, Unchecked)
    : members_(std::move(members)) {
  if (members_.empty()) {
    throw ConfigError("location set must contain at least one matrix");
  }
  for (const auto &m : members_) {
    if (m.dim() != members_.front().dim()) {
      throw ConfigError("location matrices have mixed dimensions");
    }
  }
}

UncertaintyDomain::UncertaintyDomain(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  if (intervals_.empty()) {
    throw ConfigError("uncertainty domain must contain at least one interval");
  }
  for (const auto &iv : intervals_) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw ConfigError("uncertainty domain interval must be finite with lo <= hi");
    }
  }
}

Interval UncertaintyDomain::hull() const noexcept {
  Interval h = intervals_.front();
  for (const auto &iv : intervals_) {
    h.lo = std::min(h.lo, iv.lo);
    h.hi = std::max(h.hi, iv.hi);
  }
  return h;
}

bool UncertaintyDomain::contains(double delta) const noexcept {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [delta](const Interval &iv) {
                       return iv.lo <= delta && delta <= iv.hi;
                     });
}

// ---------------------------------------------------------------------------
// LinearMap

LinearMap::LinearMap(Matrix c) : c_(std::move(c)) {
  if (c_.rows() < 1 || c_.cols() < 1) {
    throw ConfigError("linear measurement matrix must be non-empty, got " +
                      dims(c_));
  }
}

Vector LinearMap::evaluate(const Vector &x) const {
  if (x.size() != c_.cols()) {
    throw ConfigError("linear map: state has " + std::to_string(x.size()) +
                      " entries, expected " + std::to_string(c_.cols()));
  }
  return c_ * x;
}

Matrix LinearMap::jacobian(const Vector &x) const {
  if (x.size() != c_.cols()) {
    throw ConfigError("linear map: state dimension mismatch");
  }
  return c_;
}

std::optional<std::vector<Matrix>> LinearMap::hessian(const Vector &x) const {
  if (x.size() != c_.cols()) {
    throw ConfigError("linear map: state dimension mismatch");
  }
  return std::vector<Matrix>(static_cast<std::size_t>(c_.rows()),
                             Matrix::Zero(c_.cols(), c_.cols()));
}

// ---------------------------------------------------------------------------
// RangeSensorMap

RangeSensorMap::RangeSensorMap(std::vector<SensorPosition> sensors,
                               std::pair<Index, Index> position_indices,
                               Index state_dim)
    : sensors_(std::move(sensors)), indices_(position_indices),
      state_dim_(state_dim) {
  if (sensors_.empty()) {
    throw ConfigError("range map needs at least one sensor");
  }
  const auto [ix, iy] = indices_;
  if (ix < 0 || iy < 0 || ix >= state_dim_ || iy >= state_dim_ || ix == iy) {
    throw ConfigError("range map position indices are invalid for state "
                      "dimension " +
                      std::to_string(state_dim_));
  }
}

Vector RangeSensorMap::evaluate(const Vector &x) const {
  if (x.size() != state_dim_) {
    throw ConfigError("range map: state dimension mismatch");
  }
  Vector out(output_dim());
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    out(static_cast<Index>(i)) = std::hypot(x(indices_.first) - sensors_[i].x,
                                            x(indices_.second) - sensors_[i].y);
  }
  return out;
}

Matrix RangeSensorMap::jacobian(const Vector &x) const {
  const Vector range = evaluate(x);
  Matrix jac = Matrix::Zero(output_dim(), state_dim_);
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    const auto row = static_cast<Index>(i);
    if (range(row) == 0.0) {
      throw SingularGradientError("range map: state position coincides with "
                                  "sensor " +
                                  std::to_string(i));
    }
    jac(row, indices_.first) = (x(indices_.first) - sensors_[i].x) / range(row);
    jac(row, indices_.second) =
        (x(indices_.second) - sensors_[i].y) / range(row);
  }
  return jac;
}

std::optional<std::vector<Matrix>>
RangeSensorMap::hessian(const Vector &x) const {
  const Vector range = evaluate(x);
  std::vector<Matrix> out;
  out.reserve(sensors_.size());
  const auto [ix, iy] = indices_;
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    const double r = range(static_cast<Index>(i));
    if (r == 0.0) {
      throw SingularGradientError("range map: Hessian undefined at sensor " +
                                  std::to_string(i));
    }
    const double dx = x(ix) - sensors_[i].x;
    const double dy = x(iy) - sensors_[i].y;
    const double r3 = r * r * r;
    Matrix h = Matrix::Zero(state_dim_, state_dim_);
    h(ix, ix) = dy * dy / r3;
    h(iy, iy) = dx * dx / r3;
    h(ix, iy) = -dx * dy / r3;
    h(iy, ix) = h(ix, iy);
    out.push_back(std::move(h));
  }
  return out;
}

MeasurementMapPtr linear_map(Matrix c) {
  return std::make_shared<LinearMap>(std::move(c));
}

MeasurementMapPtr range_sensor_map(std::vector<SensorPosition> sensors,
                                   std::pair<Index, Index> position_indices,
                                   Index state_dim) {
  return std::make_shared<RangeSensorMap>(std::move(sensors), position_indices,
                                          state_dim);
}

// ---------------------------------------------------------------------------
// SystemModel

Matrix SystemModel::perturbed_dynamics(double delta, std::size_t i) const {
  return A + delta * locations[i].entries();
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    os << (i ? "; " : "") << violations[i];
  }
  return os.str();
}

ValidationReport validate_model(const SystemModel &m) {
  ValidationReport report;
  auto fail = [&report](std::string msg) {
    report.violations.push_back(std::move(msg));
  };

  const Index n = m.A.rows();
  if (m.A.cols() != n || n == 0) {
    fail("A must be square and non-empty, got " + dims(m.A));
  }
  if (m.locations.dim() != n) {
    fail("location matrices are " + std::to_string(m.locations.dim()) +
         "x" + std::to_string(m.locations.dim()) + ", expected n=" +
         std::to_string(n));
  }

  if (m.Q.rows() != n || m.Q.cols() != n) {
    fail("Q must be " + std::to_string(n) + "x" + std::to_string(n) +
         ", got " + dims(m.Q));
  } else {
    if (!is_symmetric(m.Q)) {
      fail("Q is not symmetric");
    }
    if (!is_psd(m.Q)) {
      fail("Q is not positive semidefinite");
    }
  }

  if (!m.measurement) {
    fail("measurement map is missing");
  } else {
    const Index p = m.measurement->output_dim();
    if (m.measurement->state_dim() != n) {
      fail("measurement map expects state dimension " +
           std::to_string(m.measurement->state_dim()) + ", model has " +
           std::to_string(n));
    }
    if (m.R.rows() != p || m.R.cols() != p) {
      fail("R must be " + std::to_string(p) + "x" + std::to_string(p) +
           ", got " + dims(m.R));
    }
  }
  if (m.R.rows() == m.R.cols() && m.R.size() > 0) {
    if (!is_symmetric(m.R)) {
      fail("R is not symmetric");
    }
    if (!is_pd(m.R)) {
      fail("R is not positive definite");
    }
  }

  if (m.P0.rows() != n || m.P0.cols() != n) {
    fail("P0 must be " + std::to_string(n) + "x" + std::to_string(n) +
         ", got " + dims(m.P0));
  } else {
    if (!is_symmetric(m.P0)) {
      fail("P0 is not symmetric");
    }
    if (!is_pd(m.P0)) {
      fail("P0 is not positive definite");
    }
  }
  return report;
}

Matrix measurement_matrix(const MeasurementMap &map,
                          const Vector &linearization_point) {
  if (const auto *lin = dynamic_cast<const LinearMap *>(&map)) {
    return lin->matrix();
  }
  return map.jacobian(linearization_point);
}

} // namespace ssue
