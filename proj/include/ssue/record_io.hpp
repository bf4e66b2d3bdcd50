// RunRecord persistence as a directory:
//
//   truth.csv         k, x0..x{n-1}                      (simulated runs only)
//   measurements.csv  k, y0..y{p-1}
//   estimates.csv     k, delta_hat, x_hat*, var_delta, var_x*, identified,
//                     ekf_x*, ekf_var_x*
//   weights.csv       k, mu_<label>*, loglik_<label>*
//   meta.json         seed, scenario_hash, labels, steps, truth metadata,
//                     creation timestamp
//
// Numbers use the shortest decimal form that round-trips, so CSV bodies are
// byte-identical across reruns; the timestamp lives only in meta.json.
#pragma once

#include "ssue/record.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ssue {

/// Shortest round-trip decimal representation.
[[nodiscard]] std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Throws ConfigError when the file is missing or malformed.
[[nodiscard]] CsvTable read_csv(const std::filesystem::path &path);
void write_csv(const std::filesystem::path &path, const CsvTable &table);

/// Throws ConfigError if the directory cannot be created or written.
void write_record(const RunRecord &record, const std::filesystem::path &dir);
/// Reads whatever series are present. measurements.csv and meta.json are
/// required; fused estimates are restored with diagonal covariances.
[[nodiscard]] RunRecord read_record(const std::filesystem::path &dir);

/// Measurement series from a measurements.csv-shaped file.
[[nodiscard]] std::vector<Vector>
read_measurements(const std::filesystem::path &path);

} // namespace ssue
