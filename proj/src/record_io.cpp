#include "ssue/record_io.hpp"

#include "ssue/errors.hpp"
#include "ssue/model_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ssue {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_number(const std::string &s, const fs::path &path) {
  double v = 0.0;
  const char *first = s.data();
  const char *last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    // from_chars rejects "inf"/"nan" spellings produced elsewhere.
    if (s == "inf") {
      return INFINITY;
    }
    if (s == "-inf") {
      return -INFINITY;
    }
    throw ConfigError(path.string() + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::ofstream open_for_write(const fs::path &path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw ConfigError("cannot write " + path.string());
  }
  return os;
}

void prefixed(std::vector<std::string> &header, const std::string &prefix,
              Index count) {
  for (Index i = 0; i < count; ++i) {
    header.push_back(prefix + std::to_string(i));
  }
}

std::size_t column(const CsvTable &t, const std::string &name,
                   const fs::path &path) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == name) {
      return i;
    }
  }
  throw ConfigError(path.string() + ": missing column '" + name + "'");
}

std::vector<std::size_t> columns_with_prefix(const CsvTable &t,
                                             const std::string &prefix) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i].rfind(prefix, 0) == 0) {
      out.push_back(i);
    }
  }
  return out;
}

Vector gather(const std::vector<double> &row,
              const std::vector<std::size_t> &cols) {
  Vector v(static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    v(static_cast<Index>(i)) = row[cols[i]];
  }
  return v;
}

} // namespace

CsvTable read_csv(const fs::path &path) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("missing file " + path.string());
  }
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) {
    throw ConfigError(path.string() + ": empty file");
  }
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != t.header.size()) {
      throw ConfigError(path.string() + ": row has " +
                        std::to_string(fields.size()) + " columns, header has " +
                        std::to_string(t.header.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto &f : fields) {
      row.push_back(parse_number(f, path));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const fs::path &path, const CsvTable &table) {
  std::ofstream os = open_for_write(path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    os << (i ? "," : "") << table.header[i];
  }
  os << '\n';
  for (const auto &row : table.rows) {
    if (row.size() != table.header.size()) {
      throw ContractError("write_csv: row width differs from header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << format_number(row[i]);
    }
    os << '\n';
  }
  if (!os) {
    throw ConfigError("failed writing " + path.string());
  }
}

void write_record(const RunRecord &rec, const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory " + dir.string());
  }
  const std::size_t steps = rec.steps();

  if (rec.has_truth()) {
    CsvTable t;
    t.header = {"k"};
    prefixed(t.header, "x", rec.truth.front().size());
    for (std::size_t k = 0; k < steps; ++k) {
      std::vector<double> row{static_cast<double>(k + 1)};
      for (Index i = 0; i < rec.truth[k].size(); ++i) {
        row.push_back(rec.truth[k](i));
      }
      t.rows.push_back(std::move(row));
    }
    write_csv(dir / "truth.csv", t);
  }

  {
    CsvTable t;
    t.header = {"k"};
    prefixed(t.header, "y", steps ? rec.measurements.front().size() : 0);
    for (std::size_t k = 0; k < steps; ++k) {
      std::vector<double> row{static_cast<double>(k + 1)};
      for (Index i = 0; i < rec.measurements[k].size(); ++i) {
        row.push_back(rec.measurements[k](i));
      }
      t.rows.push_back(std::move(row));
    }
    write_csv(dir / "measurements.csv", t);
  }

  if (rec.has_estimates()) {
    const Index n = rec.fused.front().xi_mean.size() - 1;
    CsvTable e;
    e.header = {"k", "delta_hat"};
    prefixed(e.header, "x_hat", n);
    e.header.push_back("var_delta");
    prefixed(e.header, "var_x", n);
    e.header.push_back("identified");
    prefixed(e.header, "ekf_x", n);
    prefixed(e.header, "ekf_var_x", n);
    for (std::size_t k = 0; k < steps; ++k) {
      const auto &f = rec.fused[k];
      std::vector<double> row{static_cast<double>(k + 1)};
      for (Index i = 0; i <= n; ++i) {
        row.push_back(f.xi_mean(i));
      }
      for (Index i = 0; i <= n; ++i) {
        row.push_back(f.xi_cov(i, i));
      }
      row.push_back(static_cast<double>(rec.identified[k]));
      for (Index i = 0; i < n; ++i) {
        row.push_back(rec.ekf_mean[k](i));
      }
      for (Index i = 0; i < n; ++i) {
        row.push_back(rec.ekf_cov[k](i, i));
      }
      e.rows.push_back(std::move(row));
    }
    write_csv(dir / "estimates.csv", e);

    CsvTable w;
    w.header = {"k"};
    for (const auto &l : rec.labels) {
      w.header.push_back("mu_" + l);
    }
    for (const auto &l : rec.labels) {
      w.header.push_back("loglik_" + l);
    }
    for (std::size_t k = 0; k < steps; ++k) {
      std::vector<double> row{static_cast<double>(k + 1)};
      row.insert(row.end(), rec.weights[k].begin(), rec.weights[k].end());
      row.insert(row.end(), rec.log_lambdas[k].begin(),
                 rec.log_lambdas[k].end());
      w.rows.push_back(std::move(row));
    }
    write_csv(dir / "weights.csv", w);
  }

  Json meta{{"seed", rec.seed},
            {"scenario_hash", rec.scenario_hash},
            {"labels", rec.labels},
            {"steps", steps},
            {"has_truth", rec.has_truth()},
            {"has_estimates", rec.has_estimates()}};
  if (rec.true_loc_index) {
    meta["true_location"] = *rec.true_loc_index;
  }
  if (rec.true_delta) {
    meta["true_delta"] = *rec.true_delta;
  }
  const auto now = std::chrono::system_clock::now();
  meta["created_unix_seconds"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
          .count();
  std::ofstream os = open_for_write(dir / "meta.json");
  os << meta.dump(2) << '\n';
  if (!os) {
    throw ConfigError("failed writing meta.json");
  }
}

std::vector<Vector> read_measurements(const fs::path &path) {
  const CsvTable t = read_csv(path);
  const auto cols = columns_with_prefix(t, "y");
  if (cols.empty()) {
    throw ConfigError(path.string() + ": no measurement columns y*");
  }
  std::vector<Vector> out;
  out.reserve(t.rows.size());
  for (const auto &row : t.rows) {
    out.push_back(gather(row, cols));
  }
  return out;
}

RunRecord read_record(const fs::path &dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream is(meta_path);
  if (!is) {
    throw ConfigError("missing file " + meta_path.string());
  }
  RunRecord rec;
  try {
    const Json meta = Json::parse(is);
    rec.seed = meta.at("seed").get<std::uint64_t>();
    rec.scenario_hash = meta.value("scenario_hash", std::string{});
    rec.labels = meta.at("labels").get<std::vector<std::string>>();
    if (meta.contains("true_location")) {
      rec.true_loc_index = meta.at("true_location").get<std::size_t>();
    }
    if (meta.contains("true_delta")) {
      rec.true_delta = meta.at("true_delta").get<double>();
    }
  } catch (const Json::exception &e) {
    throw ConfigError(meta_path.string() + ": " + e.what());
  }

  rec.measurements = read_measurements(dir / "measurements.csv");

  if (fs::exists(dir / "truth.csv")) {
    const CsvTable t = read_csv(dir / "truth.csv");
    const auto cols = columns_with_prefix(t, "x");
    for (const auto &row : t.rows) {
      rec.truth.push_back(gather(row, cols));
    }
  }

  if (fs::exists(dir / "weights.csv")) {
    const fs::path wp = dir / "weights.csv";
    const CsvTable w = read_csv(wp);
    std::vector<std::size_t> mu_cols;
    std::vector<std::size_t> ll_cols;
    for (const auto &l : rec.labels) {
      mu_cols.push_back(column(w, "mu_" + l, wp));
      ll_cols.push_back(column(w, "loglik_" + l, wp));
    }
    for (const auto &row : w.rows) {
      std::vector<double> mu;
      std::vector<double> ll;
      for (std::size_t i = 0; i < mu_cols.size(); ++i) {
        mu.push_back(row[mu_cols[i]]);
        ll.push_back(row[ll_cols[i]]);
      }
      rec.weights.push_back(std::move(mu));
      rec.log_lambdas.push_back(std::move(ll));
    }
  }

  if (fs::exists(dir / "estimates.csv")) {
    const fs::path ep = dir / "estimates.csv";
    const CsvTable e = read_csv(ep);
    const auto x_cols = columns_with_prefix(e, "x_hat");
    const auto var_cols = columns_with_prefix(e, "var_x");
    const auto ekf_cols = columns_with_prefix(e, "ekf_x");
    const auto ekf_var_cols = columns_with_prefix(e, "ekf_var_x");
    const std::size_t d_col = column(e, "delta_hat", ep);
    const std::size_t vd_col = column(e, "var_delta", ep);
    const std::size_t id_col = column(e, "identified", ep);
    for (const auto &row : e.rows) {
      FusedEstimate f;
      const Index n = static_cast<Index>(x_cols.size());
      f.xi_mean.resize(n + 1);
      f.xi_mean(0) = row[d_col];
      f.xi_mean.tail(n) = gather(row, x_cols);
      Vector var(n + 1);
      var(0) = row[vd_col];
      var.tail(n) = gather(row, var_cols);
      f.xi_cov = var.asDiagonal();
      rec.fused.push_back(std::move(f));
      rec.identified.push_back(static_cast<std::size_t>(row[id_col]));
      rec.ekf_mean.push_back(gather(row, ekf_cols));
      rec.ekf_cov.push_back(Matrix(gather(row, ekf_var_cols).asDiagonal()));
    }
  }
  return rec;
}

} // namespace ssue
