#include "ssue/model_io.hpp"

#include "ssue/errors.hpp"

#include <string>

namespace ssue {

namespace {

const Json &require(const Json &j, const char *key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

double number(const Json &j, std::string_view what) {
  if (!j.is_number()) {
    throw ConfigError(std::string(what) + ": expected a number");
  }
  return j.get<double>();
}

} // namespace

Json matrix_to_json(const Matrix &m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Vector &v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) {
    out.push_back(v(i));
  }
  return out;
}

Matrix matrix_from_json(const Json &j, std::string_view what) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string(what) + ": expected a non-empty array of rows");
  }
  const auto rows = static_cast<Index>(j.size());
  if (!j.front().is_array()) {
    throw ConfigError(std::string(what) + ": rows must be arrays");
  }
  const auto cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json &row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ConfigError(std::string(what) + ": ragged matrix rows");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = number(row[static_cast<std::size_t>(c)], what);
    }
  }
  return m;
}

Vector vector_from_json(const Json &j, std::string_view what) {
  if (!j.is_array()) {
    throw ConfigError(std::string(what) + ": expected an array");
  }
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = number(j[i], what);
  }
  return v;
}

Json measurement_to_json(const MeasurementMap &map) {
  if (const auto *lin = dynamic_cast<const LinearMap *>(&map)) {
    return Json{{"type", "linear"}, {"C", matrix_to_json(lin->matrix())}};
  }
  if (const auto *range = dynamic_cast<const RangeSensorMap *>(&map)) {
    Json sensors = Json::array();
    for (const auto &s : range->sensors()) {
      sensors.push_back(Json::array({s.x, s.y}));
    }
    const auto [ix, iy] = range->position_indices();
    return Json{{"type", "range"},
                {"sensors", sensors},
                {"position_indices", Json::array({ix, iy})}};
  }
  throw ConfigError("measurement map type has no JSON representation");
}

MeasurementMapPtr measurement_from_json(const Json &j, Index state_dim) {
  const std::string type = require(j, "type").get<std::string>();
  if (type == "linear") {
    Matrix c = matrix_from_json(require(j, "C"), "measurement.C");
    if (c.cols() != state_dim) {
      throw ConfigError("measurement.C must have " + std::to_string(state_dim) +
                        " columns");
    }
    return linear_map(std::move(c));
  }
  if (type == "range") {
    std::vector<SensorPosition> sensors;
    for (const auto &s : require(j, "sensors")) {
      if (!s.is_array() || s.size() != 2) {
        throw ConfigError("measurement.sensors entries must be [sx, sy]");
      }
      sensors.push_back({number(s[0], "sensor x"), number(s[1], "sensor y")});
    }
    const Json &idx = require(j, "position_indices");
    if (!idx.is_array() || idx.size() != 2 || !idx[0].is_number_integer() ||
        !idx[1].is_number_integer()) {
      throw ConfigError("measurement.position_indices must be [ix, iy]");
    }
    return range_sensor_map(std::move(sensors),
                            {idx[0].get<Index>(), idx[1].get<Index>()},
                            state_dim);
  }
  throw ConfigError("unknown measurement type '" + type + "'");
}

Json model_to_json(const SystemModel &m) {
  Json locations = Json::array();
  Json labels = Json::array();
  for (const auto &loc : m.locations) {
    locations.push_back(matrix_to_json(loc.entries()));
    labels.push_back(loc.label());
  }
  Json domain = Json::array();
  for (const auto &iv : m.domain.intervals()) {
    domain.push_back(Json::array({iv.lo, iv.hi}));
  }
  return Json{{"A", matrix_to_json(m.A)},
              {"locations", locations},
              {"location_labels", labels},
              {"delta_domain", domain},
              {"Q", matrix_to_json(m.Q)},
              {"R", matrix_to_json(m.R)},
              {"P0", matrix_to_json(m.P0)},
              {"measurement", measurement_to_json(*m.measurement)}};
}

SystemModel model_from_json(const Json &j) {
  try {
    Matrix a = matrix_from_json(require(j, "A"), "A");

    const Json &locs = require(j, "locations");
    if (!locs.is_array() || locs.empty()) {
      throw ConfigError("locations must be a non-empty array");
    }
    std::vector<std::string> labels;
    if (j.contains("location_labels")) {
      labels = j.at("location_labels").get<std::vector<std::string>>();
      if (labels.size() != locs.size()) {
        throw ConfigError("location_labels length differs from locations");
      }
    } else {
      for (std::size_t i = 0; i < locs.size(); ++i) {
        labels.push_back("A" + std::to_string(i + 1));
      }
    }
    std::vector<LocationMatrix> members;
    for (std::size_t i = 0; i < locs.size(); ++i) {
      members.emplace_back(matrix_from_json(locs[i], "locations"), labels[i]);
    }

    std::vector<Interval> intervals;
    for (const auto &iv : require(j, "delta_domain")) {
      if (!iv.is_array() || iv.size() != 2) {
        throw ConfigError("delta_domain entries must be [lo, hi]");
      }
      intervals.push_back({number(iv[0], "delta_domain"),
                           number(iv[1], "delta_domain")});
    }

    const Index n = a.rows();
    SystemModel m{std::move(a),
                  LocationSet(std::move(members)),
                  UncertaintyDomain(std::move(intervals)),
                  matrix_from_json(require(j, "Q"), "Q"),
                  matrix_from_json(require(j, "R"), "R"),
                  matrix_from_json(require(j, "P0"), "P0"),
                  measurement_from_json(require(j, "measurement"), n)};
    return m;
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
}

} // namespace ssue
