#include "ssue/cli.hpp"

#include "ssue/analysis.hpp"
#include "ssue/errors.hpp"
#include "ssue/record_io.hpp"
#include "ssue/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace fs = std::filesystem;

namespace ssue {

// ---------------------------------------------------------------------------
// Config

Json newton_to_json(const NewtonOptions &o) {
  return Json{
      {"max_iterations", o.max_iterations},
      {"step_tolerance", o.step_tolerance},
      {"mode", o.mode == NewtonMode::full_newton ? "full_newton"
                                                 : "gauss_newton"},
      {"line_search",
       o.line_search == LineSearch::backtracking ? "backtracking" : "none"},
      {"contraction", o.contraction},
      {"max_halvings", o.max_halvings},
      {"q_jitter", o.q_jitter}};
}

NewtonOptions newton_from_json(const Json &j) {
  if (!j.is_object()) {
    throw ConfigError("newton must be an object");
  }
  NewtonOptions o;
  try {
    o.max_iterations = j.value("max_iterations", o.max_iterations);
    o.step_tolerance = j.value("step_tolerance", o.step_tolerance);
    o.contraction = j.value("contraction", o.contraction);
    o.max_halvings = j.value("max_halvings", o.max_halvings);
    o.q_jitter = j.value("q_jitter", o.q_jitter);
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "gauss_newton") {
        o.mode = NewtonMode::gauss_newton;
      } else if (mode == "full_newton") {
        o.mode = NewtonMode::full_newton;
      } else {
        throw ConfigError("newton.mode must be gauss_newton or full_newton");
      }
    }
    if (j.contains("line_search")) {
      const auto ls = j.at("line_search").get<std::string>();
      if (ls == "backtracking") {
        o.line_search = LineSearch::backtracking;
      } else if (ls == "none") {
        o.line_search = LineSearch::none;
      } else {
        throw ConfigError("newton.line_search must be backtracking or none");
      }
    }
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("newton: ") + e.what());
  }
  o.validate();
  return o;
}

namespace {

std::vector<double> number_list(const Json &j, const char *what) {
  if (!j.is_array()) {
    throw ConfigError(std::string(what) + " must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto &v : j) {
    if (!v.is_number()) {
      throw ConfigError(std::string(what) + " must be an array of numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

ObservabilityConfig observability_from_json(const Json &j) {
  ObservabilityConfig c;
  c.K = j.value("K", c.K);
  c.grid_points = j.value("grid_points", c.grid_points);
  if (j.contains("grid")) {
    c.grid = number_list(j.at("grid"), "observability.grid");
  }
  if (j.contains("tolerance_policy")) {
    const Json &t = j.at("tolerance_policy");
    const auto kind = t.value("kind", std::string("relative"));
    if (kind == "relative") {
      c.tolerance.kind = RankTolerance::Kind::relative;
    } else if (kind == "absolute") {
      c.tolerance.kind = RankTolerance::Kind::absolute;
    } else {
      throw ConfigError("observability.tolerance_policy.kind must be "
                        "relative or absolute");
    }
    c.tolerance.value = t.value("value", 0.0);
    if (c.tolerance.kind == RankTolerance::Kind::absolute &&
        !(c.tolerance.value > 0.0)) {
      throw ConfigError("absolute rank tolerance must be positive");
    }
  }
  if (j.contains("linearization_point")) {
    c.linearization_point =
        vector_from_json(j.at("linearization_point"), "linearization_point");
  }
  if (c.grid_points < 1) {
    throw ConfigError("observability.grid_points must be >= 1");
  }
  return c;
}

AnalysisConfig analysis_from_json(const Json &j) {
  AnalysisConfig c;
  c.k = j.value("k", c.k);
  if (j.contains("grid")) {
    c.grid = number_list(j.at("grid"), "analysis.grid");
  }
  if (j.contains("pairs")) {
    for (const auto &p : j.at("pairs")) {
      if (!p.is_array() || p.size() != 2) {
        throw ConfigError("analysis.pairs entries must be [t, i]");
      }
      c.pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
    }
  }
  if (j.contains("record_dir")) {
    c.record_dir = j.at("record_dir").get<std::string>();
  }
  if (c.k < 0) {
    throw ConfigError("analysis.k must be >= 0");
  }
  return c;
}

} // namespace

RunConfig config_from_json(const Json &j, const Overrides &ov) {
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  try {
    Json scenario_json = j.value("scenario", Json::object());
    if (ov.seed) {
      scenario_json["seed"] = *ov.seed;
    }
    if (ov.steps) {
      scenario_json["steps"] = *ov.steps;
    }
    RunConfig c(scenario_from_json(scenario_json));
    if (j.contains("newton")) {
      c.newton = newton_from_json(j.at("newton"));
    }
    c.weight_floor = j.value("weight_floor", c.weight_floor);
    if (!(c.weight_floor >= 0.0) ||
        c.weight_floor * static_cast<double>(c.scenario.model.locations.size()) >= 1.0) {
      throw ConfigError("weight_floor must be >= 0 and below 1/M");
    }
    if (j.contains("observability")) {
      c.observability = observability_from_json(j.at("observability"));
    }
    if (j.contains("analysis")) {
      c.analysis = analysis_from_json(j.at("analysis"));
    }
    if (j.contains("output_dir")) {
      c.output_dir = j.at("output_dir").get<std::string>();
    }
    c.runs = j.value("runs", c.runs);
    if (j.contains("input")) {
      c.input = j.at("input").get<std::string>();
    }
    if (ov.out) {
      c.output_dir = *ov.out;
    }
    if (ov.input) {
      c.input = *ov.input;
    }
    if (ov.runs) {
      c.runs = *ov.runs;
    }
    if (c.runs < 1) {
      throw ConfigError("runs must be >= 1");
    }
    return c;
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const fs::path &path, const Overrides &overrides) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open config " + path.string());
  }
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::exception &e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, overrides);
}

// ---------------------------------------------------------------------------
// Helpers

int guarded(std::ostream &err, const std::function<int()> &fn) {
  try {
    return fn();
  } catch (const NumericalError &e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError &e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError &e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error &e) {
    err << "io error: " << e.what() << '\n';
    return kExitConfig;
  }
}

namespace {

void require_valid_model(const SystemModel &m) {
  const ValidationReport report = validate_model(m);
  if (!report.ok()) {
    throw ConfigError("invalid model: " + report.to_string());
  }
}

void prepare_output_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory " + dir.string());
  }
  const fs::path probe = dir / ".ssue_write_probe";
  {
    std::ofstream os(probe);
    if (!os) {
      throw ConfigError("output directory " + dir.string() +
                        " is not writable");
    }
  }
  fs::remove(probe, ec);
}

void write_json(const fs::path &path, const Json &j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    throw ConfigError("cannot write " + path.string());
  }
  os << j.dump(2) << '\n';
}

Matrix analysis_matrix(const RunConfig &c) {
  const Vector point = c.observability.linearization_point.value_or(
      c.scenario.x0_truth);
  if (point.size() != c.scenario.model.state_dim()) {
    throw ConfigError("linearization_point has wrong dimension");
  }
  return measurement_matrix(*c.scenario.model.measurement, point);
}

Json summary_json(const RunRecord &rec) {
  const std::size_t id = rec.identified.back();
  Json weights = Json::object();
  for (std::size_t i = 0; i < rec.labels.size(); ++i) {
    weights[rec.labels[i]] = rec.weights.back()[i];
  }
  Json s{{"seed", rec.seed},
         {"steps", rec.steps()},
         {"scenario_hash", rec.scenario_hash},
         {"identified", rec.labels[id]},
         {"identified_index", id},
         {"final_weights", weights},
         {"final_delta", rec.fused.back().xi_mean(0)}};
  if (rec.has_truth()) {
    const RunMetrics m = run_metrics(rec, {});
    s["rmse"] = Json{{"ssue", vector_to_json(m.rmse_ssue)},
                     {"ekf", vector_to_json(m.rmse_ekf)}};
    s["identification_success"] = m.identification_success;
    s["final_delta_error"] = m.final_delta_error;
  } else {
    s["rmse"] = nullptr;
  }
  return s;
}

} // namespace

// ---------------------------------------------------------------------------
// Commands

int cmd_simulate(const RunConfig &c, std::ostream &err) {
  return guarded(err, [&] {
    require_valid_model(c.scenario.model);
    prepare_output_dir(c.output_dir);
    const RunRecord rec = simulate(c.scenario);
    write_record(rec, c.output_dir);
    return kExitOk;
  });
}

int cmd_estimate(const RunConfig &c, std::ostream &err) {
  return guarded(err, [&] {
    require_valid_model(c.scenario.model);
    prepare_output_dir(c.output_dir);

    if (c.input) {
      RunRecord rec;
      rec.seed = c.scenario.seed;
      rec.scenario_hash = scenario_hash(c.scenario);
      rec.measurements = read_measurements(*c.input);
      for (const auto &y : rec.measurements) {
        if (y.size() != c.scenario.model.output_dim()) {
          throw ConfigError("input measurements do not match the model's "
                            "output dimension");
        }
      }
      estimate_into(rec, c.scenario.model, c.newton, c.weight_floor);
      write_record(rec, c.output_dir);
      write_json(c.output_dir / "summary.json", summary_json(rec));
      return kExitOk;
    }

    if (c.runs == 1) {
      const RunRecord rec = run_estimation(c.scenario, c.newton, c.weight_floor);
      write_record(rec, c.output_dir);
      write_json(c.output_dir / "summary.json", summary_json(rec));
      return kExitOk;
    }

    // Batch: compute every run before writing anything.
    std::vector<RunRecord> records;
    for (int i = 0; i < c.runs; ++i) {
      Scenario s = c.scenario;
      s.seed = c.scenario.seed + static_cast<std::uint64_t>(i);
      records.push_back(run_estimation(s, c.newton, c.weight_floor));
    }
    Json per_run = Json::array();
    std::vector<RunMetrics> metrics;
    for (int i = 0; i < c.runs; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%03d", i);
      const fs::path dir = c.output_dir / name;
      const auto &rec = records[static_cast<std::size_t>(i)];
      write_record(rec, dir);
      const Json summary = summary_json(rec);
      write_json(dir / "summary.json", summary);
      per_run.push_back(summary);
      metrics.push_back(run_metrics(rec, {}));
    }
    double success = 0.0;
    Vector ssue = Vector::Zero(metrics.front().rmse_ssue.size());
    Vector ekf = ssue;
    for (const auto &m : metrics) {
      success += m.identification_success ? 1.0 : 0.0;
      ssue += m.rmse_ssue;
      ekf += m.rmse_ekf;
    }
    const double runs = static_cast<double>(c.runs);
    write_json(c.output_dir / "aggregate.json",
               Json{{"runs", c.runs},
                    {"seed_base", c.scenario.seed},
                    {"identification_success_rate", success / runs},
                    {"mean_rmse", Json{{"ssue", vector_to_json(ssue / runs)},
                                       {"ekf", vector_to_json(ekf / runs)}}},
                    {"per_run", per_run}});
    return kExitOk;
  });
}

int cmd_observability(const RunConfig &c, std::ostream &err) {
  return guarded(err, [&] {
    if (c.observability.K < 1) {
      throw ConfigError("observability.K must be >= 1");
    }
    require_valid_model(c.scenario.model);
    prepare_output_dir(c.output_dir);

    const SystemModel &m = c.scenario.model;
    const DeltaGrid grid =
        c.observability.grid
            ? DeltaGrid::from_values(*c.observability.grid, m.domain)
            : DeltaGrid::uniform(m.domain, c.observability.grid_points);
    const Matrix cmat = analysis_matrix(c);
    const ObservabilityReport report = pairwise_rank_test(
        m.A, cmat, m.locations, grid, c.observability.K,
        c.observability.tolerance);

    Json failures = Json::array();
    for (const auto &f : report.failures) {
      failures.push_back(
          Json{{"first", Json{{"delta", f.first.delta},
                              {"location", m.locations[f.first.location].label()}}},
               {"second", Json{{"delta", f.second.delta},
                               {"location", m.locations[f.second.location].label()}}},
               {"rank", f.rank},
               {"required_rank", f.required_rank}});
    }
    Json out{{"smallest_passing_N", report.smallest_passing_N
                                        ? Json(*report.smallest_passing_N)
                                        : Json(nullptr)},
             {"horizon_tested", report.horizon_tested},
             {"pairs_tested", report.pairs_tested},
             {"failures", failures},
             {"warnings", report.warnings},
             {"tolerance", report.tolerance.describe()},
             {"measurement_matrix", matrix_to_json(cmat)},
             {"grid", Json{{"values", grid.values},
                           {"resolution", grid.resolution},
                           {"points", grid.values.size()}}}};
    write_json(c.output_dir / "observability.json", out);
    for (const auto &w : report.warnings) {
      err << "warning: " << w << '\n';
    }
    return report.observable() ? kExitOk : kExitUnobservable;
  });
}

int cmd_analyze(const RunConfig &c, std::ostream &err) {
  return guarded(err, [&] {
    const fs::path record_dir =
        c.analysis.record_dir.value_or(c.input.value_or(c.output_dir));
    const RunRecord rec = read_record(record_dir);
    if (rec.log_lambdas.size() != rec.steps()) {
      throw ConfigError("record in " + record_dir.string() +
                        " has no stored log-likelihoods (weights.csv)");
    }
    const SystemModel &m = c.scenario.model;
    if (rec.labels.size() != m.locations.size()) {
      throw ConfigError("record hypotheses do not match the configured model");
    }
    prepare_output_dir(c.output_dir);

    const DeltaGrid grid = DeltaGrid::from_values(
        c.analysis.grid.value_or(std::vector<double>{c.scenario.true_delta}));
    const KlSeparation kl =
        kl_separation(m, analysis_matrix(c), grid, c.analysis.k);
    CsvTable kl_table;
    kl_table.header = {"row", "delta", "location_index"};
    for (std::size_t b = 0; b < kl.hypotheses.size(); ++b) {
      kl_table.header.push_back("D" + std::to_string(b));
    }
    for (std::size_t a = 0; a < kl.hypotheses.size(); ++a) {
      std::vector<double> row{static_cast<double>(a), kl.hypotheses[a].delta,
                              static_cast<double>(kl.hypotheses[a].location)};
      for (std::size_t b = 0; b < kl.hypotheses.size(); ++b) {
        row.push_back(kl.divergence(static_cast<Index>(a), static_cast<Index>(b)));
      }
      kl_table.rows.push_back(std::move(row));
    }
    write_csv(c.output_dir / "kl_matrix.csv", kl_table);

    auto pairs = c.analysis.pairs;
    if (pairs.empty()) {
      for (std::size_t t = 0; t < rec.labels.size(); ++t) {
        if (rec.true_loc_index && t != *rec.true_loc_index) {
          continue;
        }
        for (std::size_t i = 0; i < rec.labels.size(); ++i) {
          if (i != t) {
            pairs.emplace_back(t, i);
          }
        }
      }
    }
    for (const auto &[t, i] : pairs) {
      if (t >= rec.labels.size() || i >= rec.labels.size()) {
        throw ConfigError("analysis pair index out of range");
      }
      const auto llr = loglik_ratio_trajectory(rec, t, i);
      CsvTable table;
      table.header = {"k", "llr"};
      for (std::size_t k = 0; k < llr.size(); ++k) {
        table.rows.push_back({static_cast<double>(k + 1), llr[k]});
      }
      write_csv(c.output_dir /
                    ("llr_" + rec.labels[t] + "_vs_" + rec.labels[i] + ".csv"),
                table);
    }
    return kExitOk;
  });
}

} // namespace ssue
