#include "ssue/errors.hpp"
#include "ssue/filter.hpp"
#include "ssue/sim.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace ssue {
namespace {

JointBelief scalar_belief(double delta, double x, double pd, double pdx,
                          double px) {
  JointBelief b;
  b.delta_mean = delta;
  b.x_mean = Vector::Constant(1, x);
  b.p_delta = pd;
  b.p_delta_x = RowVector::Constant(1, pdx);
  b.p_x = Matrix::Constant(1, 1, px);
  return b;
}

const Matrix kOne = Matrix::Identity(1, 1);
const LocationMatrix kLocOne(Matrix::Identity(1, 1), "L");

/// Range map without analytic Hessians, to exercise the finite-difference
/// fallback.
class NoHessianMap final : public MeasurementMap {
public:
  explicit NoHessianMap(MeasurementMapPtr inner) : inner_(std::move(inner)) {}
  Index output_dim() const override { return inner_->output_dim(); }
  Index state_dim() const override { return inner_->state_dim(); }
  Vector evaluate(const Vector &x) const override { return inner_->evaluate(x); }
  Matrix jacobian(const Vector &x) const override { return inner_->jacobian(x); }
  std::optional<std::vector<Matrix>> hessian(const Vector &) const override {
    return std::nullopt;
  }

private:
  MeasurementMapPtr inner_;
};

/// Predicted belief near the tracking target with modest uncertainty.
JointBelief tracking_prior(std::mt19937_64 &rng, Vector *truth) {
  std::uniform_real_distribution<double> pos(-8.0, 8.0);
  std::uniform_real_distribution<double> vel(-2.0, 2.0);
  std::uniform_real_distribution<double> dlt(-0.2, -0.01);
  JointBelief b = test::random_belief(rng, 4, 0.0, 0.05, 2.0);
  b.delta_mean = dlt(rng);
  b.x_mean = (Vector(4) << pos(rng), pos(rng), vel(rng), vel(rng)).finished();
  b.p_delta = std::min(b.p_delta, 0.01);
  b.p_delta_x *= 0.05;
  *truth = b.x_mean + test::random_vector(rng, 4, 0.7);
  return b;
}

TEST(Predict, NominalDynamicsAtZeroDelta) {
  std::mt19937_64 rng(1);
  const Matrix A = test::random_matrix(rng, 3, 3);
  const LocationMatrix loc((Matrix(3, 3) << 1, 0, 0, 0, 0, 1, 0, 0, 0).finished(),
                           "L");
  JointBelief b = test::random_belief(rng, 3);
  b.delta_mean = 0.0;
  const JointBelief out = predict(b, loc, A, Matrix::Identity(3, 3));
  EXPECT_LT((out.x_mean - A * b.x_mean).norm(), 1e-14);
  // Cross-covariance uses F = [𝒜x̂, A].
  Matrix F(3, 4);
  F << loc.entries() * b.x_mean, A;
  Matrix row(1, 4);
  row << b.p_delta, b.p_delta_x;
  EXPECT_LT((out.p_delta_x - row * F.transpose()).norm(), 1e-12);
}

TEST(Predict, ScalarMean) {
  const JointBelief out =
      predict(scalar_belief(-0.05, 2.0, 1, 0, 1), kLocOne, kOne, kOne);
  EXPECT_NEAR(out.x_mean(0), 1.9, 1e-15);
}

TEST(Predict, ScalarCovarianceBlocks) {
  const JointBelief out = predict(scalar_belief(0.0, 1.0, 1, 0, 1), kLocOne,
                                  kOne, Matrix::Zero(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(out.p_x(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(out.p_delta_x(0), 1.0);
  EXPECT_EQ(out.p_delta, 1.0);
}

TEST(Predict, PreservesDeltaVarianceExactly) {
  const Scenario s = tracking_preset();
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const JointBelief b = test::random_belief(rng, 4);
    for (const auto &loc : s.model.locations) {
      const JointBelief out = predict(b, loc, s.model.A, s.model.Q);
      EXPECT_EQ(out.p_delta, b.p_delta);
      EXPECT_EQ(out.delta_mean, b.delta_mean);
      EXPECT_TRUE(test::symmetric_pd(assemble_joint_covariance(out)));
    }
  }
}

TEST(NewtonUpdate, ZeroInnovationIsFixedPoint) {
  const Scenario s = tracking_preset();
  std::mt19937_64 rng(3);
  for (const auto mode : {NewtonMode::gauss_newton, NewtonMode::full_newton}) {
    Vector truth;
    const JointBelief pred = tracking_prior(rng, &truth);
    const Vector y = s.model.measurement->evaluate(pred.x_mean);
    NewtonOptions opts;
    opts.mode = mode;
    const UpdateResult r =
        newton_update(pred, y, *s.model.measurement, s.model.R, opts);
    EXPECT_LT((r.posterior.xi_mean() - pred.xi_mean()).norm(), 1e-12);
    EXPECT_EQ(r.report.cost_trajectory.front(), 0.0);
    EXPECT_TRUE(r.report.converged);
  }
}

TEST(NewtonUpdate, LinearMapMatchesKalmanForAnyIterationCount) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Index n = 1 + static_cast<Index>(rng() % 5);
    const Index p = 1 + static_cast<Index>(rng() % 3);
    const Matrix C = test::random_matrix(rng, p, n);
    const Matrix R = test::random_spd(rng, p);
    const JointBelief pred = test::random_belief(rng, n);
    const Vector y = test::random_vector(rng, p, 3.0);
    const test::KalmanResult kf = test::augmented_kalman_update(
        test::joint_mean(pred), test::joint_cov(pred), C, R, y);
    for (int iters : {1, 2, 10}) {
      NewtonOptions opts;
      opts.max_iterations = iters;
      const UpdateResult r = newton_update(pred, y, *linear_map(C), R, opts);
      EXPECT_LT(test::rel_error(r.posterior.xi_mean(), kf.mean), 1e-8);
      EXPECT_LT(test::rel_error(assemble_joint_covariance(r.posterior), kf.cov),
                1e-8);
    }
  }
}

TEST(NewtonUpdate, CostIsNonIncreasingWithLineSearch) {
  const Scenario s = tracking_preset();
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    Vector truth;
    const JointBelief pred = tracking_prior(rng, &truth);
    const Vector y = s.model.measurement->evaluate(truth) +
                     test::random_vector(rng, 3, std::sqrt(2.0));
    for (const auto mode : {NewtonMode::gauss_newton, NewtonMode::full_newton}) {
      NewtonOptions opts;
      opts.mode = mode;
      const UpdateResult r =
          newton_update(pred, y, *s.model.measurement, s.model.R, opts);
      const auto &c = r.report.cost_trajectory;
      ASSERT_FALSE(c.empty());
      for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_LE(c[i], c[i - 1]);
      }
      EXPECT_DOUBLE_EQ(r.report.final_cost, c.back());
      EXPECT_DOUBLE_EQ(c.back(), map_cost(pred, y, *s.model.measurement,
                                          s.model.R, r.posterior.xi_mean()));
      EXPECT_TRUE(test::symmetric_pd(assemble_joint_covariance(r.posterior)));
    }
  }
}

TEST(NewtonUpdate, GaussNewtonAndFullNewtonShareFixedPoint) {
  const Scenario s = tracking_preset();
  std::mt19937_64 rng(6);
  int compared = 0;
  for (int t = 0; t < 30; ++t) {
    Vector truth;
    const JointBelief pred = tracking_prior(rng, &truth);
    const Vector y = s.model.measurement->evaluate(truth) +
                     test::random_vector(rng, 3, std::sqrt(2.0));
    NewtonOptions gn;
    gn.max_iterations = 100;
    gn.step_tolerance = 1e-12;
    NewtonOptions fn = gn;
    fn.mode = NewtonMode::full_newton;
    const UpdateResult a = newton_update(pred, y, *s.model.measurement, s.model.R, gn);
    const UpdateResult b = newton_update(pred, y, *s.model.measurement, s.model.R, fn);
    if (a.report.converged && b.report.converged) {
      ++compared;
      EXPECT_LT((a.posterior.xi_mean() - b.posterior.xi_mean()).norm(), 1e-6);
    }
  }
  EXPECT_GT(compared, 20);
}

TEST(NewtonUpdate, FiniteDifferenceHessianFallback) {
  const Scenario s = tracking_preset();
  const NoHessianMap fd_map(s.model.measurement);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    Vector truth;
    const JointBelief pred = tracking_prior(rng, &truth);
    const Vector y = s.model.measurement->evaluate(truth);
    NewtonOptions opts;
    opts.mode = NewtonMode::full_newton;
    opts.max_iterations = 50;
    opts.step_tolerance = 1e-12;
    const UpdateResult a =
        newton_update(pred, y, *s.model.measurement, s.model.R, opts);
    const UpdateResult b = newton_update(pred, y, fd_map, s.model.R, opts);
    EXPECT_LT((a.posterior.xi_mean() - b.posterior.xi_mean()).norm(), 1e-6);
  }
}

TEST(NewtonUpdate, SingularGradientPropagates) {
  std::mt19937_64 rng(8);
  JointBelief pred = test::random_belief(rng, 2);
  pred.x_mean << 1.0, 1.0;
  const auto map = range_sensor_map({{1.0, 1.0}}, {0, 1}, 2);
  EXPECT_THROW((void)newton_update(pred, Vector::Ones(1), *map, kOne, {}),
               SingularGradientError);
}

TEST(NewtonOptions, Validation) {
  NewtonOptions o;
  EXPECT_NO_THROW(o.validate());
  o.max_iterations = 0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = {};
  o.step_tolerance = 0.0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = {};
  o.contraction = 1.0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = {};
  o.q_jitter = -1.0;
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST(Likelihood, ScalarInnovationDensity) {
  // Γ = 1·1·1 + 1 = 2 and zero innovation: 1/√(2π·2).
  const JointBelief pred = scalar_belief(0.0, 0.0, 1, 0, 1);
  const auto map = linear_map(kOne);
  const double expected = 1.0 / std::sqrt(2.0 * std::numbers::pi * 2.0);
  EXPECT_NEAR(likelihood(pred, Vector::Zero(1), *map, kOne), expected, 1e-15);
  EXPECT_NEAR(expected, 0.28209, 1e-5);
}

TEST(Likelihood, LogDomainSurvivesLargeInnovation) {
  const JointBelief pred = scalar_belief(0.0, 0.0, 1, 0, 1);
  const auto map = linear_map(kOne);
  const double nu = 100.0;
  const double expected =
      -0.5 * std::log(2.0 * std::numbers::pi * 2.0) - nu * nu / 4.0;
  const double ll = log_likelihood(pred, Vector::Constant(1, nu), *map, kOne);
  EXPECT_NEAR(ll, expected, 1e-10);
  EXPECT_EQ(likelihood(pred, Vector::Constant(1, 1e3), *map, kOne), 0.0);
}

TEST(UpdateWeights, EqualEvidenceLeavesWeights) {
  const std::vector<double> mu{0.2, 0.3, 0.5};
  const auto out = update_weights(mu, {0.7, 0.7, 0.7});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(out[i], mu[i], 1e-15);
  }
}

TEST(UpdateWeights, DirectNormalization) {
  const auto out = update_weights({0.5, 0.5}, {2.0, 1.0});
  EXPECT_NEAR(out[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(out[1], 1.0 / 3.0, 1e-15);
}

TEST(UpdateWeights, FloorRevivesDeadHypothesis) {
  const auto out = update_weights({1.0, 0.0}, {1.0, 1.0}, 1e-12);
  EXPECT_GT(out[1], 0.0);
  EXPECT_NEAR(out[1], 1e-12 / (1.0 + 1e-12), 1e-26);
  EXPECT_TRUE(test::is_simplex(out));
  const auto later = update_weights(out, {1.0, 1e20}, 1e-12);
  EXPECT_GT(later[1], 0.5);
}

TEST(UpdateWeights, FloorZeroDisables) {
  const auto out = update_weights({1.0, 0.0}, {1.0, 1.0}, 0.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(UpdateWeights, DegenerateEvidence) {
  EXPECT_THROW((void)update_weights({0.5, 0.5}, {0.0, 0.0}),
               DegenerateEvidenceError);
  EXPECT_THROW((void)update_weights_log({0.5, 0.5}, {-INFINITY, -INFINITY}),
               DegenerateEvidenceError);
}

TEST(UpdateWeights, LogDomainHandlesUnderflow) {
  const auto out = update_weights_log({0.5, 0.5}, {-2000.0, -2001.0});
  EXPECT_NEAR(out[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-14);
}

TEST(UpdateWeights, ScalingEvidenceDoesNotChangeIdentification) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> mu{u(rng), u(rng), u(rng)};
    const double s = mu[0] + mu[1] + mu[2];
    for (auto &m : mu) {
      m /= s;
    }
    const std::vector<double> lam{u(rng), u(rng), u(rng)};
    std::vector<double> scaled = lam;
    for (auto &l : scaled) {
      l *= 1e6;
    }
    const auto a = update_weights(mu, lam);
    const auto b = update_weights(mu, scaled);
    EXPECT_EQ(identify_location(a), identify_location(b));
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-14);
    }
  }
}

TEST(InitialBank, UsesDomainHullAndP0) {
  const Scenario s = tracking_preset();
  const HypothesisBank bank = initial_bank(s.model);
  ASSERT_EQ(bank.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(bank.beliefs[i].delta_mean, (-0.2 - 0.01) / 2.0);
    EXPECT_DOUBLE_EQ(bank.beliefs[i].p_delta, std::pow((0.2 - 0.01) / 2.0, 2));
    EXPECT_EQ(bank.beliefs[i].x_mean, Vector::Zero(4));
    EXPECT_EQ(bank.beliefs[i].p_x, s.model.P0);
    EXPECT_DOUBLE_EQ(bank.weights[i], 1.0 / 3.0);
  }
}

SystemModel scalar_model(LocationSet locations) {
  return SystemModel{kOne,
                     std::move(locations),
                     UncertaintyDomain({{-0.2, -0.01}}),
                     0.1 * kOne,
                     kOne,
                     kOne,
                     linear_map(kOne)};
}

TEST(SsueStep, SingleHypothesisKeepsUnitWeight) {
  const SystemModel m = scalar_model(LocationSet({kLocOne}));
  HypothesisBank bank = initial_bank(m);
  for (int k = 0; k < 20; ++k) {
    const StepResult r = ssue_step(bank, Vector::Constant(1, 0.3 * k), m, {});
    EXPECT_EQ(r.bank.weights[0], 1.0);
    EXPECT_EQ(r.identified_index, 0u);
    EXPECT_EQ(r.fused.xi_mean, r.bank.beliefs[0].xi_mean());
    EXPECT_EQ(r.fused.xi_cov, assemble_joint_covariance(r.bank.beliefs[0]));
    bank = r.bank;
  }
}

TEST(SsueStep, IdenticalHypothesesKeepPrior) {
  const SystemModel m =
      scalar_model(LocationSet({kLocOne, LocationMatrix(kOne, "L2")},
                               LocationSet::Unchecked{}));
  HypothesisBank bank = initial_bank(m);
  bank.weights = {0.3, 0.7};
  const StepResult r = ssue_step(bank, Vector::Constant(1, 1.5), m, {});
  EXPECT_EQ(r.lambdas[0], r.lambdas[1]);
  EXPECT_NEAR(r.bank.weights[0], 0.3, 1e-15);
  EXPECT_NEAR(r.bank.weights[1], 0.7, 1e-15);
}

TEST(SsueStep, LambdaUsesPredictedBelief) {
  const Scenario s = tracking_preset();
  const HypothesisBank bank = initial_bank(s.model);
  const Vector y = (Vector(3) << 16.0, 7.0, 7.0).finished();
  const StepResult r = ssue_step(bank, y, s.model, {});
  for (std::size_t i = 0; i < 3; ++i) {
    const JointBelief pred = predict(bank.beliefs[i], s.model.locations[i],
                                     s.model.A, s.model.Q);
    EXPECT_DOUBLE_EQ(r.log_lambdas[i],
                     log_likelihood(pred, y, *s.model.measurement, s.model.R));
  }
  EXPECT_TRUE(test::is_simplex(r.bank.weights));
}

TEST(SsueStep, ErrorsCarryStepAndHypothesis) {
  const Scenario s = tracking_preset();
  HypothesisBank bank = initial_bank(s.model);
  for (auto &b : bank.beliefs) {
    b.x_mean << -10.0, 0.0, 0.0, 0.0;
    b.p_delta_x.setZero();
    b.delta_mean = 0.0;
  }
  try {
    (void)ssue_step(bank, Vector::Ones(3), s.model, {}, kDefaultWeightFloor, 7);
    FAIL() << "expected a singular-gradient error";
  } catch (const SingularGradientError &e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("step 7"), std::string::npos) << what;
    EXPECT_NE(what.find("hypothesis"), std::string::npos) << what;
  }
}

TEST(EkfStep, LinearMapIsKalmanFilter) {
  std::mt19937_64 rng(10);
  const Index n = 3;
  const Matrix A = test::random_matrix(rng, n, n, 0.5);
  const Matrix C = test::random_matrix(rng, 2, n);
  const Matrix Q = test::random_spd(rng, n, 0.1, 1.0);
  const Matrix R = test::random_spd(rng, 2, 0.5, 2.0);
  const SystemModel m{A,
                      LocationSet({LocationMatrix(Matrix::Identity(n, n), "I")}),
                      UncertaintyDomain({{-0.1, 0.1}}),
                      Q,
                      R,
                      Matrix::Identity(n, n),
                      linear_map(C)};
  Vector mean = Vector::Zero(n);
  Matrix cov = Matrix::Identity(n, n);
  Vector km = mean;
  Matrix kc = cov;
  for (int k = 0; k < 50; ++k) {
    const Vector y = test::random_vector(rng, 2);
    const GaussianState g = ekf_step(mean, cov, y, m);
    const Vector pm = A * km;
    const Matrix pc = A * kc * A.transpose() + Q;
    const Matrix S = C * pc * C.transpose() + R;
    const Matrix K = pc * C.transpose() * S.inverse();
    km = pm + K * (y - C * pm);
    kc = (Matrix::Identity(n, n) - K * C) * pc;
    EXPECT_LT(test::rel_error(g.mean, km), 1e-10);
    EXPECT_LT(test::rel_error(g.cov, kc), 1e-10);
    mean = g.mean;
    cov = g.cov;
  }
}

TEST(EkfStep, ZeroInnovationKeepsPredictedMean) {
  const Scenario s = tracking_preset();
  const Vector mean = s.x0_truth;
  const Vector pred = s.model.A * mean;
  const Vector y = s.model.measurement->evaluate(pred);
  const GaussianState g = ekf_step(mean, s.model.P0, y, s.model);
  EXPECT_LT((g.mean - pred).norm(), 1e-12);
}

} // namespace
} // namespace ssue
