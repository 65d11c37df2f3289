// Copyright 2026 The apfmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scenario files (JSON), simulation log CSV, summaries and plot series.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apfmpc/simulator.hpp"

namespace apfmpc {

/// Configuration problem, tagged with the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

namespace io_detail {

using nlohmann::json;

inline const json& Require(const json& obj, const std::string& key,
                           const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(path.empty() ? key : path + "." + key, "missing key");
  }
  return obj.at(key);
}

inline std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double Number(const json& obj, const std::string& key,
                     const std::string& path) {
  const json& v = Require(obj, key, path);
  if (!v.is_number()) throw ConfigError(Join(path, key), "expected a number");
  return v.get<double>();
}

inline double NumberOr(const json& obj, const std::string& key,
                       const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  return Number(obj, key, path);
}

inline Vec2 Point(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number()) {
    throw ConfigError(path, "expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

inline OrientedRectangle Rectangle(const json& v, const std::string& path) {
  const Vec2 c = Point(Require(v, "center", path), Join(path, "center"));
  const double heading = Number(v, "heading", path);
  const double hl = Number(v, "half_length", path);
  const double hw = Number(v, "half_width", path);
  if (!(hl > 0.0)) throw ConfigError(Join(path, "half_length"), "must be > 0");
  if (!(hw > 0.0)) throw ConfigError(Join(path, "half_width"), "must be > 0");
  return OrientedRectangle(Pose2D(c.x(), c.y(), heading), hl, hw);
}

inline json RectangleJson(const OrientedRectangle& r) {
  return json{{"center", {r.center().x, r.center().y}},
              {"heading", r.center().heading},
              {"half_length", r.half_length()},
              {"half_width", r.half_width()}};
}

}  // namespace io_detail

inline Scenario ScenarioFromJson(const nlohmann::json& doc) {
  using namespace io_detail;
  Scenario s;
  const json& meta = Require(doc, "scenario", "");
  const json& name = Require(meta, "name", "scenario");
  if (!name.is_string() || name.get<std::string>().empty()) {
    throw ConfigError("scenario.name", "expected a non-empty string");
  }
  s.name = name.get<std::string>();
  if (meta.contains("note")) {
    if (!meta.at("note").is_string()) {
      throw ConfigError("scenario.note", "expected a string");
    }
    s.note = meta.at("note").get<std::string>();
  }

  const json& corridor = Require(doc, "corridor", "");
  if (!corridor.is_array()) throw ConfigError("corridor", "expected an array");
  for (size_t i = 0; i < corridor.size(); ++i) {
    s.corridor.push_back(
        Rectangle(corridor[i], "corridor[" + std::to_string(i) + "]"));
  }

  const json& path = Require(doc, "path", "");
  if (!path.is_array() || path.size() < 2) {
    throw ConfigError("path", "expected an array of at least two points");
  }
  for (size_t i = 0; i < path.size(); ++i) {
    const std::string key = "path[" + std::to_string(i) + "]";
    s.path.push_back(Point(path[i], key));
    if (i > 0 && !((s.path[i] - s.path[i - 1]).norm() > 0.0)) {
      throw ConfigError(key, "repeats the previous point");
    }
  }

  s.ref_speed = Number(doc, "ref_speed_mps", "");
  if (!(s.ref_speed >= 0.0)) throw ConfigError("ref_speed_mps", "must be >= 0");

  const json& obstacles = Require(doc, "obstacles", "");
  if (!obstacles.is_array()) throw ConfigError("obstacles", "expected an array");
  for (size_t i = 0; i < obstacles.size(); ++i) {
    const std::string key = "obstacles[" + std::to_string(i) + "]";
    const json& o = obstacles[i];
    Obstacle obs{Rectangle(o, key), Vec2::Zero(), 0.0, ObstacleKind::kObstacle};
    if (o.contains("velocity")) {
      obs.velocity = Point(o.at("velocity"), Join(key, "velocity"));
    }
    obs.yaw_rate = NumberOr(o, "yaw_rate", key, 0.0);
    s.obstacles.push_back(obs);
  }

  const json& init = Require(doc, "initial_state", "");
  s.initial_state.x = Number(init, "x", "initial_state");
  s.initial_state.y = Number(init, "y", "initial_state");
  s.initial_state.heading =
      NormalizeAngle(Number(init, "theta", "initial_state"));
  s.initial_state.v_front = Number(init, "v_f", "initial_state");
  s.initial_state.v_rear = Number(init, "v_r", "initial_state");

  s.duration = Number(doc, "duration_s", "");
  if (!(s.duration > 0.0)) throw ConfigError("duration_s", "must be > 0");

  if (doc.contains("controller_variant")) {
    const json& v = doc.at("controller_variant");
    if (!v.is_string()) {
      throw ConfigError("controller_variant", "expected a string");
    }
    try {
      s.variant = ParseVariant(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("controller_variant", e.what());
    }
  }
  return s;
}

inline nlohmann::json ScenarioToJson(const Scenario& s) {
  using namespace io_detail;
  json doc;
  doc["scenario"] = json{{"name", s.name}};
  if (!s.note.empty()) doc["scenario"]["note"] = s.note;
  doc["corridor"] = json::array();
  for (const auto& r : s.corridor) doc["corridor"].push_back(RectangleJson(r));
  doc["path"] = json::array();
  for (const Vec2& p : s.path) doc["path"].push_back({p.x(), p.y()});
  doc["ref_speed_mps"] = s.ref_speed;
  doc["obstacles"] = json::array();
  for (const Obstacle& o : s.obstacles) {
    json j = RectangleJson(o.footprint);
    j["velocity"] = {o.velocity.x(), o.velocity.y()};
    j["yaw_rate"] = o.yaw_rate;
    doc["obstacles"].push_back(j);
  }
  doc["initial_state"] = json{{"x", s.initial_state.x},
                              {"y", s.initial_state.y},
                              {"theta", s.initial_state.heading},
                              {"v_f", s.initial_state.v_front},
                              {"v_r", s.initial_state.v_rear}};
  doc["duration_s"] = s.duration;
  doc["controller_variant"] = ToString(s.variant);
  return doc;
}

/// Throws ConfigError (key "file" when unreadable or not valid JSON).
inline Scenario LoadScenario(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError("file", "cannot open scenario file '" + filename + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("file", "'" + filename + "' is not valid JSON: " + e.what());
  }
  return ScenarioFromJson(doc);
}

inline void SaveScenario(const Scenario& s, const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw std::runtime_error("cannot write '" + filename + "'");
  out << ScenarioToJson(s).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Log output

inline const char* kLogHeader =
    "t,x,y,theta,v_f,v_r,a_f,a_r,delta_f,delta_r,slip_measure,min_clearance,"
    "objective,solver_iterations";

/// Shortest round-trip representation of a double.
inline std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer fewer digits when they still round-trip.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

inline std::string LogCsv(const SimulationLog& log) {
  std::ostringstream out;
  out << kLogHeader << "\n";
  for (const SimulationRecord& r : log.records) {
    const double fields[] = {r.t,
                             r.state.x,
                             r.state.y,
                             r.state.heading,
                             r.state.v_front,
                             r.state.v_rear,
                             r.input.accel_front,
                             r.input.accel_rear,
                             r.input.steer_front,
                             r.input.steer_rear,
                             r.slip_measure,
                             r.min_clearance,
                             r.objective};
    for (double f : fields) out << FormatNumber(f) << ",";
    out << r.solver_iterations << "\n";
  }
  return out.str();
}

/// A parsed CSV table with a fixed header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int Column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw std::out_of_range("no column '" + name + "'");
  }
};

/// Strict reader: every row must have exactly the header's field count and
/// every field must parse completely as a number.
inline CsvTable ParseCsv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw std::runtime_error("csv: bad number '" + cell + "' on line " +
                                 std::to_string(line_no));
      }
      row.push_back(v);
    }
    if (!line.empty() && line.back() == ',') {
      throw std::runtime_error("csv: trailing comma on line " +
                               std::to_string(line_no));
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("csv: wrong field count on line " +
                               std::to_string(line_no));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline std::string SummaryText(const SimulationLog& log) {
  const Metrics m = metrics(log);
  std::ostringstream out;
  out << "scenario: " << log.scenario_name << "\n"
      << "variant: " << ToString(log.variant) << "\n"
      << "completion: " << ToString(m.completion) << "\n"
      << "ticks: " << m.ticks << "\n"
      << "min_clearance: " << FormatNumber(m.min_clearance) << "\n"
      << "min_obstacle_clearance: " << FormatNumber(m.min_obstacle_clearance)
      << "\n"
      << "max_slip_measure: " << FormatNumber(m.max_slip_measure) << "\n"
      << "rms_tracking_error: " << FormatNumber(m.rms_tracking_error) << "\n"
      << "max_heading_rate: " << FormatNumber(m.max_heading_rate) << "\n"
      << "final_lateral_error: " << FormatNumber(m.final_lateral_error) << "\n"
      << "max_fallback_level: " << m.max_fallback_level << "\n";
  return out.str();
}

}  // namespace apfmpc
