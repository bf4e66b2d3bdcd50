#include "ssue/filter.hpp"

#include "ssue/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ssue {

namespace {

// Re-raise an error from inside `fn` with `context` prepended, keeping its
// concrete type so callers can still dispatch on it.
template <typename Fn> auto with_context(const std::string &context, Fn &&fn) {
  try {
    return fn();
  } catch (const SingularGradientError &e) {
    throw SingularGradientError(context + ": " + e.what());
  } catch (const DegenerateEvidenceError &e) {
    throw DegenerateEvidenceError(context + ": " + e.what());
  } catch (const NumericalError &e) {
    throw NumericalError(context + ": " + e.what());
  } catch (const ContractError &e) {
    throw ContractError(context + ": " + e.what());
  } catch (const ConfigError &e) {
    throw ConfigError(context + ": " + e.what());
  }
}

// Hessians of h, analytic when available, otherwise central differences
// of the Jacobian with step 1e-5·(1 + |x_j|).
std::vector<Matrix> measurement_hessians(const MeasurementMap &map,
                                         const Vector &x) {
  if (auto analytic = map.hessian(x)) {
    return std::move(*analytic);
  }
  const Index n = x.size();
  const Index p = map.output_dim();
  std::vector<Matrix> out(static_cast<std::size_t>(p), Matrix::Zero(n, n));
  for (Index j = 0; j < n; ++j) {
    const double h = 1e-5 * (1.0 + std::abs(x(j)));
    Vector xp = x;
    Vector xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Matrix dj = (map.jacobian(xp) - map.jacobian(xm)) / (2.0 * h);
    for (Index q = 0; q < p; ++q) {
      out[static_cast<std::size_t>(q)].col(j) = dj.row(q).transpose();
    }
  }
  for (auto &m : out) {
    m = symmetrize(m);
  }
  return out;
}

// Whitened residual of the MAP objective and the factors it is built from.
struct Residual {
  const JointBelief &pred;
  const Vector &y;
  const MeasurementMap &map;
  Vector xi_pred;
  Eigen::LLT<Matrix> r_chol;
  Eigen::LLT<Matrix> p_chol;

  Residual(const JointBelief &pred_, const Vector &y_,
           const MeasurementMap &map_, const Matrix &R)
      : pred(pred_), y(y_), map(map_), xi_pred(pred_.xi_mean()),
        r_chol(robust_cholesky(R, "measurement covariance R")),
        p_chol(robust_cholesky(assemble_joint_covariance(pred_),
                               "predicted joint covariance")) {}

  [[nodiscard]] Index n() const { return xi_pred.size() - 1; }
  [[nodiscard]] Index p() const { return y.size(); }

  [[nodiscard]] Vector measurement_block(const Vector &xi) const {
    const Vector innovation = y - map.evaluate(xi.tail(n()));
    return r_chol.matrixL().solve(innovation);
  }

  [[nodiscard]] Vector operator()(const Vector &xi) const {
    Vector r(p() + n() + 1);
    r.head(p()) = measurement_block(xi);
    r.tail(n() + 1) = p_chol.matrixL().solve(xi - xi_pred);
    return r;
  }

  [[nodiscard]] double cost(const Vector &xi) const {
    return (*this)(xi).squaredNorm();
  }

  // ∇_ξ r = [[0, −L_R⁻¹ C], [L_P⁻¹]]
  [[nodiscard]] Matrix jacobian(const Vector &xi) const {
    const Matrix c = map.jacobian(xi.tail(n()));
    Matrix jac = Matrix::Zero(p() + n() + 1, n() + 1);
    jac.block(0, 1, p(), n()) = -r_chol.matrixL().solve(c);
    jac.bottomRows(n() + 1) =
        p_chol.matrixL().solve(Matrix::Identity(n() + 1, n() + 1));
    return jac;
  }

  // S = Σⱼ rⱼ ∇²rⱼ. Only the measurement rows are curved, and only in x:
  // S_xx = −Σ_q (R⁻¹(y − h))_q ∇²h_q.
  [[nodiscard]] Matrix second_order(const Vector &xi) const {
    const Vector whitened = measurement_block(xi);
    const Vector weights =
        r_chol.matrixL().transpose().solve(whitened); // R⁻¹(y − h)
    const auto hessians = measurement_hessians(map, xi.tail(n()));
    Matrix s = Matrix::Zero(n() + 1, n() + 1);
    for (Index q = 0; q < p(); ++q) {
      s.bottomRightCorner(n(), n()) -=
          weights(q) * hessians[static_cast<std::size_t>(q)];
    }
    return s;
  }
};

} // namespace

void NewtonOptions::validate() const {
  if (max_iterations < 1) {
    throw ConfigError("newton.max_iterations must be >= 1");
  }
  if (!(step_tolerance > 0.0)) {
    throw ConfigError("newton.step_tolerance must be positive");
  }
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw ConfigError("newton.contraction must lie in (0, 1)");
  }
  if (max_halvings < 0) {
    throw ConfigError("newton.max_halvings must be >= 0");
  }
  if (!(q_jitter >= 0.0)) {
    throw ConfigError("newton.q_jitter must be >= 0");
  }
}

JointBelief predict(const JointBelief &b, const LocationMatrix &loc,
                    const Matrix &A, const Matrix &Q, double q_jitter) {
  const Index n = b.state_dim();
  if (A.rows() != n || A.cols() != n || loc.dim() != n || Q.rows() != n ||
      Q.cols() != n) {
    throw ContractError("predict: dimension mismatch");
  }

  const Matrix dynamics = A + b.delta_mean * loc.entries();
  Matrix f(n, n + 1);
  f.col(0) = loc.entries() * b.x_mean;
  f.rightCols(n) = dynamics;

  Matrix q = Q;
  if (Eigen::LLT<Matrix>(symmetrize(Q)).info() != Eigen::Success) {
    q += q_jitter * Matrix::Identity(n, n);
  }

  const Matrix joint = assemble_joint_covariance(b);
  RowVector top(n + 1);
  top(0) = b.p_delta;
  top.tail(n) = b.p_delta_x;

  JointBelief out;
  out.delta_mean = b.delta_mean;
  out.x_mean = dynamics * b.x_mean;
  out.p_delta = b.p_delta;
  out.p_delta_x = top * f.transpose();
  out.p_x = symmetrize(f * joint * f.transpose() + q);

  const Matrix predicted = assemble_joint_covariance(out);
  if (!is_psd(predicted)) {
    throw NumericalError("predict: joint covariance lost positive "
                         "semidefiniteness (min eigenvalue " +
                         std::to_string(min_eigenvalue(predicted)) + ")");
  }
  return out;
}

double map_cost(const JointBelief &pred, const Vector &y,
                const MeasurementMap &map, const Matrix &R, const Vector &xi) {
  return Residual(pred, y, map, R).cost(xi);
}

UpdateResult newton_update(const JointBelief &pred, const Vector &y,
                           const MeasurementMap &map, const Matrix &R,
                           const NewtonOptions &opts) {
  opts.validate();
  const Index n = pred.state_dim();
  if (y.size() != map.output_dim() || map.state_dim() != n) {
    throw ContractError("newton_update: measurement dimension mismatch");
  }

  const Residual residual(pred, y, map, R);
  Vector xi = residual.xi_pred;
  double cost = residual.cost(xi);

  UpdateReport report;
  report.cost_trajectory.push_back(cost);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Vector r = residual(xi);
    const Matrix jac = residual.jacobian(xi);
    const Vector gradient = jac.transpose() * r;
    const Matrix gauss_newton = jac.transpose() * jac;

    Vector direction;
    bool solved = false;
    if (opts.mode == NewtonMode::full_newton) {
      // Away from the minimum JᵀJ + S can be indefinite; fall back to the
      // Gauss-Newton matrix for that iteration.
      const Matrix full = symmetrize(gauss_newton + residual.second_order(xi));
      Eigen::LLT<Matrix> llt(full);
      if (llt.info() == Eigen::Success) {
        direction = -llt.solve(gradient);
        solved = direction.allFinite();
      }
    }
    if (!solved) {
      const auto llt =
          robust_cholesky(gauss_newton, "newton_update: normal equations");
      direction = -llt.solve(gradient);
    }

    double step_length = 1.0;
    Vector candidate = xi + direction;
    double candidate_cost = residual.cost(candidate);
    if (opts.line_search == LineSearch::backtracking) {
      int halvings = 0;
      while (!(candidate_cost < cost) && halvings < opts.max_halvings) {
        step_length *= opts.contraction;
        candidate = xi + step_length * direction;
        candidate_cost = residual.cost(candidate);
        ++halvings;
      }
      if (!(candidate_cost < cost)) {
        // No decrease along a descent direction: numerically stationary.
        report.converged = true;
        break;
      }
    }

    const double step_norm = (candidate - xi).norm();
    xi = std::move(candidate);
    cost = candidate_cost;
    report.cost_trajectory.push_back(cost);
    ++report.iterations_used;
    if (step_norm < opts.step_tolerance) {
      report.converged = true;
      break;
    }
  }
  report.final_cost = cost;

  // Posterior covariance from the information form, with C at the last
  // iterate actually reached.
  const Matrix c = map.jacobian(xi.tail(n));
  Matrix information = inverse_from(residual.p_chol);
  information.bottomRightCorner(n, n) +=
      c.transpose() * residual.r_chol.solve(c);
  const auto info_chol =
      robust_cholesky(symmetrize(information), "newton_update: information");
  const Matrix posterior_cov = inverse_from(info_chol);

  return {split_joint(xi, posterior_cov), std::move(report)};
}

double log_likelihood(const JointBelief &pred, const Vector &y,
                      const MeasurementMap &map, const Matrix &R) {
  const Index p = map.output_dim();
  if (y.size() != p) {
    throw ContractError("log_likelihood: measurement dimension mismatch");
  }
  const Matrix c = map.jacobian(pred.x_mean);
  const Vector innovation = y - map.evaluate(pred.x_mean);
  const Matrix gamma = symmetrize(c * pred.p_x * c.transpose() + R);
  const auto chol = robust_cholesky(gamma, "innovation covariance");
  const double mahalanobis = chol.matrixL().solve(innovation).squaredNorm();
  return -0.5 * (static_cast<double>(p) * std::log(2.0 * std::numbers::pi) +
                 log_determinant(chol) + mahalanobis);
}

double likelihood(const JointBelief &pred, const Vector &y,
                  const MeasurementMap &map, const Matrix &R) {
  return std::exp(log_likelihood(pred, y, map, R));
}

std::vector<double> update_weights_log(const std::vector<double> &mu_prev,
                                       const std::vector<double> &log_lambdas,
                                       double floor) {
  if (mu_prev.size() != log_lambdas.size() || mu_prev.empty()) {
    throw ContractError("update_weights: length mismatch");
  }
  if (!(floor >= 0.0) || floor * static_cast<double>(mu_prev.size()) >= 1.0) {
    throw ContractError("update_weights: invalid weight floor");
  }
  double prev_sum = 0.0;
  for (double m : mu_prev) {
    if (!(m >= 0.0)) {
      throw ContractError("update_weights: previous weights must be >= 0");
    }
    prev_sum += m;
  }
  if (std::abs(prev_sum - 1.0) > kWeightSumTolerance) {
    throw ContractError("update_weights: previous weights are not a simplex");
  }

  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_terms(mu_prev.size());
  double peak = neg_inf;
  for (std::size_t i = 0; i < mu_prev.size(); ++i) {
    if (std::isnan(log_lambdas[i]) || log_lambdas[i] == -neg_inf) {
      throw ContractError("update_weights: log-likelihood must be finite or -inf");
    }
    log_terms[i] =
        mu_prev[i] > 0.0 ? log_lambdas[i] + std::log(mu_prev[i]) : neg_inf;
    peak = std::max(peak, log_terms[i]);
  }
  if (peak == neg_inf) {
    throw DegenerateEvidenceError(
        "update_weights: every hypothesis has zero posterior mass");
  }

  std::vector<double> mu(mu_prev.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mu[i] = std::exp(log_terms[i] - peak);
    sum += mu[i];
  }
  for (double &m : mu) {
    m /= sum;
  }
  if (floor > 0.0) {
    sum = 0.0;
    for (double &m : mu) {
      m = std::max(m, floor);
      sum += m;
    }
    for (double &m : mu) {
      m /= sum;
    }
  }
  return mu;
}

std::vector<double> update_weights(const std::vector<double> &mu_prev,
                                   const std::vector<double> &lambdas,
                                   double floor) {
  std::vector<double> logs(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0)) {
      throw ContractError("update_weights: likelihoods must be >= 0");
    }
    logs[i] = std::log(lambdas[i]);
  }
  return update_weights_log(mu_prev, logs, floor);
}

HypothesisBank initial_bank(const SystemModel &model) {
  const Interval hull = model.domain.hull();
  const double half_width = 0.5 * (hull.hi - hull.lo);
  if (!(half_width > 0.0)) {
    throw ConfigError("delta domain has zero width; initial delta variance "
                      "would be zero");
  }
  const Index n = model.state_dim();
  JointBelief b;
  b.delta_mean = 0.5 * (hull.lo + hull.hi);
  b.x_mean = Vector::Zero(n);
  b.p_delta = half_width * half_width;
  b.p_delta_x = RowVector::Zero(n);
  b.p_x = model.P0;

  const std::size_t m = model.locations.size();
  return HypothesisBank{std::vector<JointBelief>(m, b),
                        std::vector<double>(m, 1.0 / static_cast<double>(m))};
}

StepResult ssue_step(const HypothesisBank &bank, const Vector &y,
                     const SystemModel &model, const NewtonOptions &opts,
                     double weight_floor, long step) {
  bank.validate();
  if (bank.size() != model.locations.size()) {
    throw ContractError("ssue_step: bank has " + std::to_string(bank.size()) +
                        " hypotheses, model has " +
                        std::to_string(model.locations.size()));
  }
  const std::string step_label =
      step >= 0 ? "step " + std::to_string(step) : std::string("step");

  StepResult out;
  out.bank.beliefs.reserve(bank.size());
  out.log_lambdas.reserve(bank.size());
  out.reports.reserve(bank.size());

  for (std::size_t i = 0; i < bank.size(); ++i) {
    const std::string context = step_label + ", hypothesis " +
                                std::to_string(i) + " (" +
                                model.locations[i].label() + ")";
    with_context(context, [&] {
      const JointBelief pred = predict(bank.beliefs[i], model.locations[i],
                                       model.A, model.Q, opts.q_jitter);
      out.log_lambdas.push_back(
          log_likelihood(pred, y, *model.measurement, model.R));
      auto update = newton_update(pred, y, *model.measurement, model.R, opts);
      out.bank.beliefs.push_back(std::move(update.posterior));
      out.reports.push_back(std::move(update.report));
      return 0;
    });
  }

  out.bank.weights = with_context(step_label, [&] {
    return update_weights_log(bank.weights, out.log_lambdas, weight_floor);
  });
  out.lambdas.reserve(bank.size());
  for (double l : out.log_lambdas) {
    out.lambdas.push_back(std::exp(l));
  }
  out.identified_index = identify_location(out.bank.weights);
  out.fused = fuse(out.bank);
  return out;
}

GaussianState ekf_step(const Vector &mean, const Matrix &cov, const Vector &y,
                       const SystemModel &model) {
  const Index n = model.state_dim();
  if (mean.size() != n || cov.rows() != n || cov.cols() != n) {
    throw ContractError("ekf_step: state dimension mismatch");
  }
  const Vector x_pred = model.A * mean;
  const Matrix p_pred =
      symmetrize(model.A * cov * model.A.transpose() + model.Q);

  const MeasurementMap &map = *model.measurement;
  const Matrix c = map.jacobian(x_pred);
  const Vector innovation = y - map.evaluate(x_pred);
  const Matrix s = symmetrize(c * p_pred * c.transpose() + model.R);
  const auto s_chol = robust_cholesky(s, "ekf_step: innovation covariance");
  const Matrix gain = s_chol.solve(c * p_pred).transpose();

  const Matrix i_kc = Matrix::Identity(n, n) - gain * c;
  GaussianState out;
  out.mean = x_pred + gain * innovation;
  out.cov = symmetrize(i_kc * p_pred * i_kc.transpose() +
                       gain * model.R * gain.transpose());
  return out;
}

} // namespace ssue
