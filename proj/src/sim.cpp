#include "ssue/sim.hpp"

#include "ssue/errors.hpp"
#include "ssue/scenario_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

namespace ssue {

void Scenario::validate() const {
  if (steps < 1) {
    throw ContractError("scenario: steps must be >= 1");
  }
  if (!(Ts > 0.0)) {
    throw ContractError("scenario: Ts must be positive");
  }
  if (true_loc_index >= model.locations.size()) {
    throw ContractError("scenario: true location index out of range");
  }
  if (x0_truth.size() != model.state_dim()) {
    throw ContractError("scenario: x0 has wrong dimension");
  }
  const Index n = model.state_dim();
  if (model.A.cols() != n || model.Q.rows() != n || model.Q.cols() != n ||
      model.locations.dim() != n || !model.measurement ||
      model.measurement->state_dim() != n) {
    throw ContractError("scenario: model dimensions are inconsistent");
  }
  const Index p = model.measurement->output_dim();
  if (model.R.rows() != p || model.R.cols() != p) {
    throw ContractError("scenario: R does not match the measurement map");
  }
}

Scenario tracking_preset(const TrackingParams &params) {
  if (!(params.Ts > 0.0) || !(params.q >= 0.0) || !(params.r > 0.0)) {
    throw ConfigError("tracking preset needs Ts > 0, q >= 0, r > 0");
  }
  if (params.x0.size() != 4 || params.P0.rows() != 4 || params.P0.cols() != 4) {
    throw ConfigError("tracking preset state is 4-dimensional");
  }
  const double ts = params.Ts;

  Matrix a = Matrix::Identity(4, 4);
  a(0, 2) = ts;
  a(1, 3) = ts;

  Matrix a1 = Matrix::Zero(4, 4);
  a1(0, 3) = 1.0;
  Matrix a2 = Matrix::Zero(4, 4);
  a2(0, 0) = 1.0;
  a2(1, 1) = 1.0;
  Matrix a3 = Matrix::Zero(4, 4);
  a3(2, 2) = 1.0;

  const double t2 = ts * ts / 2.0;
  const double t3 = ts * ts * ts / 3.0;
  Matrix q(4, 4);
  q << t3, 0, t2, 0,  //
      0, t3, 0, t2,   //
      t2, 0, ts, 0,   //
      0, t2, 0, ts;
  q *= params.q;

  const auto p = static_cast<Index>(params.sensors.size());
  SystemModel model{
      std::move(a),
      LocationSet({LocationMatrix(a1, "A1"), LocationMatrix(a2, "A2"),
                   LocationMatrix(a3, "A3")}),
      UncertaintyDomain(params.delta_domain),
      std::move(q),
      params.r * Matrix::Identity(p, p),
      params.P0,
      range_sensor_map(params.sensors, {0, 1}, 4)};

  Scenario s{std::move(model), params.true_delta, params.true_loc_index,
             params.x0, params.steps, params.seed, ts};
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------

double NormalSampler::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalSampler::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform(); // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Vector NormalSampler::normals(Index count) {
  Vector v(count);
  for (Index i = 0; i < count; ++i) {
    v(i) = normal();
  }
  return v;
}

RunRecord simulate(const Scenario &scenario) {
  scenario.validate();
  const SystemModel &m = scenario.model;
  const Matrix dynamics =
      m.perturbed_dynamics(scenario.true_delta, scenario.true_loc_index);
  const Matrix q_root = psd_square_root(m.Q, "process noise Q");
  const Matrix r_root = psd_square_root(m.R, "measurement noise R");

  RunRecord rec;
  rec.seed = scenario.seed;
  rec.scenario_hash = scenario_hash(scenario);
  for (const auto &loc : m.locations) {
    rec.labels.push_back(loc.label());
  }
  rec.true_loc_index = scenario.true_loc_index;
  rec.true_delta = scenario.true_delta;

  const auto steps = static_cast<std::size_t>(scenario.steps);
  rec.truth.reserve(steps);
  rec.measurements.reserve(steps);

  NormalSampler rng(scenario.seed);
  Vector x = scenario.x0_truth;
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector w = q_root * rng.normals(m.state_dim());
    x = dynamics * x + w;
    const Vector v = r_root * rng.normals(m.output_dim());
    rec.truth.push_back(x);
    rec.measurements.push_back(m.measurement->evaluate(x) + v);
  }
  return rec;
}

void estimate_into(RunRecord &record, const SystemModel &model,
                   const NewtonOptions &opts, double weight_floor) {
  const std::size_t steps = record.steps();
  if (steps == 0) {
    throw ContractError("estimate: record has no measurements");
  }
  if (record.labels.empty()) {
    for (const auto &loc : model.locations) {
      record.labels.push_back(loc.label());
    }
  }
  record.log_lambdas.clear();
  record.weights.clear();
  record.fused.clear();
  record.identified.clear();
  record.ekf_mean.clear();
  record.ekf_cov.clear();

  HypothesisBank bank = initial_bank(model);
  Vector ekf_mean = Vector::Zero(model.state_dim());
  Matrix ekf_cov = model.P0;

  for (std::size_t k = 0; k < steps; ++k) {
    const Vector &y = record.measurements[k];
    StepResult res = ssue_step(bank, y, model, opts, weight_floor,
                               static_cast<long>(k + 1));
    record.log_lambdas.push_back(res.log_lambdas);
    record.weights.push_back(res.bank.weights);
    record.fused.push_back(res.fused);
    record.identified.push_back(res.identified_index);
    bank = std::move(res.bank);

    GaussianState ekf = ekf_step(ekf_mean, ekf_cov, y, model);
    ekf_mean = std::move(ekf.mean);
    ekf_cov = std::move(ekf.cov);
    record.ekf_mean.push_back(ekf_mean);
    record.ekf_cov.push_back(ekf_cov);
  }
}

RunRecord run_estimation(const Scenario &scenario, const NewtonOptions &opts,
                         double weight_floor) {
  RunRecord rec = simulate(scenario);
  estimate_into(rec, scenario.model, opts, weight_floor);
  return rec;
}

// ---------------------------------------------------------------------------

RunMetrics run_metrics(const RunRecord &record,
                       const std::vector<Index> &compare_states) {
  if (!record.has_truth() || !record.has_estimates()) {
    throw ContractError("run_metrics: record needs truth and estimates");
  }
  const std::size_t steps = record.steps();
  const Index n = record.truth.front().size();

  RunMetrics m;
  m.seed = record.seed;
  m.final_weights = record.weights.back();
  m.identified = record.identified.back();
  m.identification_success =
      record.true_loc_index && m.identified == *record.true_loc_index;

  Vector ssue_sq = Vector::Zero(n);
  Vector ekf_sq = Vector::Zero(n);
  m.delta_error.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector &truth = record.truth[k];
    const Vector &xi = record.fused[k].xi_mean;
    ssue_sq += (xi.tail(n) - truth).array().square().matrix();
    ekf_sq += (record.ekf_mean[k] - truth).array().square().matrix();
    m.delta_error.push_back(
        record.true_delta ? std::abs(xi(0) - *record.true_delta) : 0.0);
  }
  const double count = static_cast<double>(steps);
  m.rmse_ssue = (ssue_sq / count).array().sqrt().matrix();
  m.rmse_ekf = (ekf_sq / count).array().sqrt().matrix();
  m.final_delta_error = m.delta_error.back();

  std::vector<Index> states = compare_states;
  if (states.empty()) {
    for (Index i = 0; i < n; ++i) {
      states.push_back(i);
    }
  }
  double s = 0.0;
  double e = 0.0;
  for (Index i : states) {
    if (i < 0 || i >= n) {
      throw ContractError("run_metrics: comparison state index out of range");
    }
    s += ssue_sq(i);
    e += ekf_sq(i);
  }
  const double pooled = count * static_cast<double>(states.size());
  m.compare_rmse_ssue = std::sqrt(s / pooled);
  m.compare_rmse_ekf = std::sqrt(e / pooled);
  return m;
}

MetricsSummary monte_carlo(const Scenario &scenario_template,
                           const MonteCarloOptions &opts) {
  if (opts.n_runs < 1) {
    throw ContractError("monte_carlo: n_runs must be >= 1");
  }
  opts.newton.validate();
  scenario_template.validate();

  const auto runs = static_cast<std::size_t>(opts.n_runs);
  MetricsSummary summary;
  summary.runs.resize(runs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      Scenario s = scenario_template;
      s.seed = opts.seed_base + i;
      RunMetrics &slot = summary.runs[i];
      try {
        const RunRecord rec =
            run_estimation(s, opts.newton, opts.weight_floor);
        slot = run_metrics(rec, opts.compare_states);
      } catch (const Error &e) {
        slot = RunMetrics{};
        slot.seed = s.seed;
        slot.failed = true;
        slot.error = e.what();
      }
    }
  };

  unsigned threads = opts.threads ? opts.threads
                                  : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(runs));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    worker();
  }

  std::vector<double> final_delta;
  int successes = 0;
  int better = 0;
  int completed = 0;
  for (const auto &r : summary.runs) {
    if (r.failed) {
      ++summary.failed_runs;
      continue;
    }
    ++completed;
    successes += r.identification_success ? 1 : 0;
    better += r.compare_rmse_ssue < r.compare_rmse_ekf ? 1 : 0;
    final_delta.push_back(r.final_delta_error);
    if (summary.mean_rmse_ssue.size() == 0) {
      summary.mean_rmse_ssue = Vector::Zero(r.rmse_ssue.size());
      summary.mean_rmse_ekf = Vector::Zero(r.rmse_ekf.size());
    }
    summary.mean_rmse_ssue += r.rmse_ssue;
    summary.mean_rmse_ekf += r.rmse_ekf;
  }
  if (completed > 0) {
    const double c = static_cast<double>(completed);
    summary.success_rate = successes / c;
    summary.ssue_better_rate = better / c;
    summary.mean_rmse_ssue /= c;
    summary.mean_rmse_ekf /= c;
    std::sort(final_delta.begin(), final_delta.end());
    const std::size_t mid = final_delta.size() / 2;
    summary.median_final_delta_error =
        final_delta.size() % 2 ? final_delta[mid]
                               : 0.5 * (final_delta[mid - 1] + final_delta[mid]);
  }
  return summary;
}

// ---------------------------------------------------------------------------

std::string scenario_hash(const Scenario &scenario) {
  const std::string text = scenario_to_json(scenario).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json scenario_to_json(const Scenario &s) {
  return Json{{"model", model_to_json(s.model)},
              {"true_delta", s.true_delta},
              {"true_location", s.model.locations[s.true_loc_index].label()},
              {"x0", vector_to_json(s.x0_truth)},
              {"steps", s.steps},
              {"seed", s.seed},
              {"Ts", s.Ts}};
}

namespace {

std::size_t location_index(const Json &j, const LocationSet &locations) {
  if (j.is_string()) {
    const auto label = j.get<std::string>();
    for (std::size_t i = 0; i < locations.size(); ++i) {
      if (locations[i].label() == label) {
        return i;
      }
    }
    throw ConfigError("unknown location label '" + label + "'");
  }
  if (j.is_number_integer() && j.get<long long>() >= 0 &&
      static_cast<std::size_t>(j.get<long long>()) < locations.size()) {
    return static_cast<std::size_t>(j.get<long long>());
  }
  throw ConfigError("true_location must be a label or a valid zero-based index");
}

} // namespace

Scenario scenario_from_json(const Json &j) {
  try {
    if (!j.is_object()) {
      throw ConfigError("scenario must be an object");
    }
    if (j.contains("model")) {
      SystemModel model = model_from_json(j.at("model"));
      Scenario s{model,
                 j.value("true_delta", 0.0),
                 0,
                 j.contains("x0") ? vector_from_json(j.at("x0"), "x0")
                                  : Vector(Vector::Zero(model.state_dim())),
                 j.value("steps", 300),
                 j.value("seed", std::uint64_t{42}),
                 j.value("Ts", 0.1)};
      if (j.contains("true_location")) {
        s.true_loc_index = location_index(j.at("true_location"), s.model.locations);
      }
      if (s.x0_truth.size() != s.model.state_dim()) {
        throw ConfigError("x0 has wrong dimension");
      }
      if (s.steps < 1) {
        throw ConfigError("steps must be >= 1");
      }
      if (!(s.Ts > 0.0)) {
        throw ConfigError("Ts must be positive");
      }
      return s;
    }

    const std::string preset = j.value("preset", std::string("tracking"));
    if (preset != "tracking") {
      throw ConfigError("unknown scenario preset '" + preset + "'");
    }
    TrackingParams p;
    p.Ts = j.value("Ts", p.Ts);
    p.q = j.value("q", p.q);
    p.r = j.value("r", p.r);
    if (j.contains("sensors")) {
      p.sensors.clear();
      for (const auto &s : j.at("sensors")) {
        if (!s.is_array() || s.size() != 2) {
          throw ConfigError("sensors entries must be [sx, sy]");
        }
        p.sensors.push_back({s[0].get<double>(), s[1].get<double>()});
      }
    }
    p.true_delta = j.value("true_delta", p.true_delta);
    if (j.contains("x0")) {
      p.x0 = vector_from_json(j.at("x0"), "x0");
    }
    p.steps = j.value("steps", p.steps);
    p.seed = j.value("seed", p.seed);
    if (j.contains("delta_domain")) {
      p.delta_domain.clear();
      for (const auto &iv : j.at("delta_domain")) {
        if (!iv.is_array() || iv.size() != 2) {
          throw ConfigError("delta_domain entries must be [lo, hi]");
        }
        p.delta_domain.push_back({iv[0].get<double>(), iv[1].get<double>()});
      }
    }
    if (j.contains("P0")) {
      p.P0 = matrix_from_json(j.at("P0"), "P0");
    }
    if (p.steps < 1) {
      throw ConfigError("steps must be >= 1");
    }
    // Resolve the location after the model exists so labels work.
    Scenario s = tracking_preset(p);
    if (j.contains("true_location")) {
      s.true_loc_index = location_index(j.at("true_location"), s.model.locations);
    }
    return s;
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("scenario JSON: ") + e.what());
  } catch (const ContractError &e) {
    throw ConfigError(e.what());
  }
}

} // namespace ssue
