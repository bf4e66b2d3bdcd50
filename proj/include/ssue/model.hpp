// Uncertain linear-process / nonlinear-measurement system
//
//   x_{k+1} = (A + δ·𝒜) x_k + w_k,    w_k ~ N(0, Q)
//   y_k     = h(x_k) + v_k,           v_k ~ N(0, R)
//
// where δ is an unknown scalar in a domain Δ and 𝒜 is one of M candidate
// binary location matrices.
#pragma once

#include "ssue/linalg.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ssue {

/// Binary n×n matrix marking which entries of A are perturbed by δ.
class LocationMatrix {
public:
  /// Throws ConfigError unless every entry is 0 or 1 and at least one is 1.
  LocationMatrix(Matrix entries, std::string label);

  [[nodiscard]] const Matrix &entries() const noexcept { return entries_; }
  [[nodiscard]] const std::string &label() const noexcept { return label_; }
  [[nodiscard]] Index dim() const noexcept { return entries_.rows(); }

  friend bool operator==(const LocationMatrix &a, const LocationMatrix &b) {
    return a.entries_ == b.entries_;
  }

private:
  Matrix entries_;
  std::string label_;
};

class LocationSet {
public:
  struct Unchecked {};

  /// Throws ConfigError on an empty list, mixed dimensions or duplicates.
  explicit LocationSet(std::vector<LocationMatrix> members);
  /// Skips the distinctness check. Only meant for exercising degenerate
  /// banks; everything else must go through the checked constructor.
  LocationSet(std::vector<LocationMatrix> members, Unchecked);

  [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
  [[nodiscard]] const LocationMatrix &operator[](std::size_t i) const {
    return members_.at(i);
  }
  [[nodiscard]] auto begin() const noexcept { return members_.begin(); }
  [[nodiscard]] auto end() const noexcept { return members_.end(); }
  [[nodiscard]] Index dim() const noexcept { return members_.front().dim(); }

private:
  std::vector<LocationMatrix> members_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Δ: a finite union of closed intervals.
class UncertaintyDomain {
public:
  explicit UncertaintyDomain(std::vector<Interval> intervals);

  [[nodiscard]] const std::vector<Interval> &intervals() const noexcept {
    return intervals_;
  }
  [[nodiscard]] Interval hull() const noexcept;
  [[nodiscard]] bool contains(double delta) const noexcept;

private:
  std::vector<Interval> intervals_;
};

/// h: ℝⁿ → ℝᵖ with analytic Jacobian and optional Hessians.
class MeasurementMap {
public:
  virtual ~MeasurementMap() = default;

  [[nodiscard]] virtual Index output_dim() const = 0;
  [[nodiscard]] virtual Index state_dim() const = 0;
  [[nodiscard]] virtual Vector evaluate(const Vector &x) const = 0;
  /// p×n matrix ∇ₓh.
  [[nodiscard]] virtual Matrix jacobian(const Vector &x) const = 0;
  /// One symmetric n×n Hessian per output component, or nullopt when the
  /// map does not provide second derivatives.
  [[nodiscard]] virtual std::optional<std::vector<Matrix>>
  hessian(const Vector &x) const = 0;
};

using MeasurementMapPtr = std::shared_ptr<const MeasurementMap>;

/// h(x) = C·x.
class LinearMap final : public MeasurementMap {
public:
  explicit LinearMap(Matrix c);

  [[nodiscard]] Index output_dim() const override { return c_.rows(); }
  [[nodiscard]] Index state_dim() const override { return c_.cols(); }
  [[nodiscard]] Vector evaluate(const Vector &x) const override;
  [[nodiscard]] Matrix jacobian(const Vector &x) const override;
  [[nodiscard]] std::optional<std::vector<Matrix>>
  hessian(const Vector &x) const override;

  [[nodiscard]] const Matrix &matrix() const noexcept { return c_; }

private:
  Matrix c_;
};

struct SensorPosition {
  double x = 0.0;
  double y = 0.0;
};

/// Euclidean distance from the planar position (x[ix], x[iy]) to each sensor.
class RangeSensorMap final : public MeasurementMap {
public:
  RangeSensorMap(std::vector<SensorPosition> sensors,
                 std::pair<Index, Index> position_indices, Index state_dim);

  [[nodiscard]] Index output_dim() const override {
    return static_cast<Index>(sensors_.size());
  }
  [[nodiscard]] Index state_dim() const override { return state_dim_; }
  [[nodiscard]] Vector evaluate(const Vector &x) const override;
  /// Throws SingularGradientError when x coincides with a sensor.
  [[nodiscard]] Matrix jacobian(const Vector &x) const override;
  [[nodiscard]] std::optional<std::vector<Matrix>>
  hessian(const Vector &x) const override;

  [[nodiscard]] const std::vector<SensorPosition> &sensors() const noexcept {
    return sensors_;
  }
  [[nodiscard]] std::pair<Index, Index> position_indices() const noexcept {
    return indices_;
  }

private:
  std::vector<SensorPosition> sensors_;
  std::pair<Index, Index> indices_;
  Index state_dim_;
};

[[nodiscard]] MeasurementMapPtr linear_map(Matrix c);
[[nodiscard]] MeasurementMapPtr
range_sensor_map(std::vector<SensorPosition> sensors,
                 std::pair<Index, Index> position_indices, Index state_dim);

struct SystemModel {
  Matrix A;
  LocationSet locations;
  UncertaintyDomain domain;
  Matrix Q;
  Matrix R;
  Matrix P0;
  MeasurementMapPtr measurement;

  [[nodiscard]] Index state_dim() const noexcept { return A.rows(); }
  [[nodiscard]] Index output_dim() const { return measurement->output_dim(); }
  /// A + δ·𝒜ᵢ
  [[nodiscard]] Matrix perturbed_dynamics(double delta, std::size_t i) const;
};

struct ValidationReport {
  std::vector<std::string> violations;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
  [[nodiscard]] std::string to_string() const;
};

[[nodiscard]] ValidationReport validate_model(const SystemModel &m);

/// Matrix used by the rank and output-covariance analyses. Linear maps
/// return C; nonlinear maps return ∇ₓh at `linearization_point`.
[[nodiscard]] Matrix measurement_matrix(const MeasurementMap &map,
                                        const Vector &linearization_point);

} // namespace ssue
