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

// Command implementations behind tools/apfmpc_cli. Each command reports
// diagnostics on the given streams and returns the process exit status.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "apfmpc/mpc.hpp"
#include "apfmpc/scenario_io.hpp"
#include "apfmpc/simulator.hpp"

namespace apfmpc::cli {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kInternal = 3 };

struct RunOptions {
  std::string scenario_path;
  std::string output_dir = ".";
  bool emit_plots = false;
  std::optional<ControllerVariant> variant_override;
};

/// Plot-ready series files, keyed by the suffix appended to the scenario name.
struct SeriesFile {
  std::string suffix;
  std::string contents;
};

inline std::string Row(std::initializer_list<double> values) {
  std::string line;
  for (double v : values) {
    if (!line.empty()) line += ",";
    line += FormatNumber(v);
  }
  return line + "\n";
}

inline std::vector<SeriesFile> PanelSeries(const SimulationLog& log,
                                           const MpcConfig& cfg) {
  std::string traj = "t,x,y\n" + Row({0.0, log.initial_state.x, log.initial_state.y});
  std::string heading = "t,theta,theta_ref\n";
  std::string speeds = "t,v_f,v_r\n";
  std::string inputs = "t,a_f,a_r,delta_f,delta_r\n";
  std::string slip = "t,slip_measure,slip_band\n";
  for (const SimulationRecord& r : log.records) {
    traj += Row({r.t, r.state.x, r.state.y});
    heading += Row({r.t, r.state.heading, r.reference_heading});
    speeds += Row({r.t, r.state.v_front, r.state.v_rear});
    inputs += Row({r.t, r.input.accel_front, r.input.accel_rear,
                   r.input.steer_front, r.input.steer_rear});
    slip += Row({r.t, r.slip_measure, cfg.slip_band});
  }
  return {{".trajectory.csv", traj},
          {".heading.csv", heading},
          {".wheel_speeds.csv", speeds},
          {".inputs.csv", inputs},
          {".slip.csv", slip}};
}

/// Self-contained SVG: corridor walls, obstacles at the start and at the end
/// of the run, the driven path and a robot outline every second.
inline std::string TrajectorySvg(const Scenario& scenario,
                                 const SimulationLog& log,
                                 const RobotGeometry& geom) {
  std::vector<std::vector<Vec2>> walls;
  for (const auto& w : scenario.corridor) {
    const auto c = corners(w);
    walls.emplace_back(c.begin(), c.end());
  }
  std::vector<std::vector<Vec2>> obstacles_start;
  std::vector<std::vector<Vec2>> obstacles_end;
  for (const auto& o : scenario.obstacles) {
    const auto c = corners(o.footprint);
    obstacles_start.emplace_back(c.begin(), c.end());
  }
  if (!log.obstacle_history.empty()) {
    for (const auto& r : log.obstacle_history.back()) {
      const auto c = corners(r);
      obstacles_end.emplace_back(c.begin(), c.end());
    }
  }
  std::vector<Vec2> path{log.initial_state.pose().position()};
  std::vector<std::vector<Vec2>> outlines;
  const int every = std::max(1, static_cast<int>(std::lround(1.0 / log.dt)));
  for (size_t k = 0; k < log.records.size(); ++k) {
    path.push_back(log.records[k].state.pose().position());
    if (k % every == 0) {
      const auto c = corners(geom.Footprint(log.records[k].state.pose()));
      outlines.emplace_back(c.begin(), c.end());
    }
  }

  double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
  auto grow = [&](const Vec2& p) {
    x0 = std::min(x0, p.x());
    y0 = std::min(y0, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  };
  for (const auto* group : {&walls, &obstacles_start, &obstacles_end, &outlines}) {
    for (const auto& poly : *group) {
      for (const Vec2& p : poly) grow(p);
    }
  }
  for (const Vec2& p : path) grow(p);
  const double margin = 1.0;
  x0 -= margin;
  y0 -= margin;
  x1 += margin;
  y1 += margin;
  const double scale = 20.0;

  auto pt = [&](const Vec2& p) {
    return FormatNumber(std::round((p.x() - x0) * scale * 100.0) / 100.0) + "," +
           FormatNumber(std::round((y1 - p.y()) * scale * 100.0) / 100.0);
  };
  auto polygons = [&](const std::vector<std::vector<Vec2>>& polys,
                      const std::string& style) {
    std::string s;
    for (const auto& poly : polys) {
      s += "  <polygon points=\"";
      for (size_t i = 0; i < poly.size(); ++i) s += (i ? " " : "") + pt(poly[i]);
      s += "\" " + style + "/>\n";
    }
    return s;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << FormatNumber(std::ceil((x1 - x0) * scale)) << "\" height=\""
      << FormatNumber(std::ceil((y1 - y0) * scale)) << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << polygons(walls, "fill=\"#555555\"");
  out << polygons(obstacles_start, "fill=\"#b5e3b5\" stroke=\"#2e8b2e\"");
  out << polygons(obstacles_end, "fill=\"none\" stroke=\"#2e8b2e\" "
                                 "stroke-dasharray=\"4 2\"");
  out << polygons(outlines, "fill=\"none\" stroke=\"#8fa8d8\"");
  out << "  <polyline points=\"";
  for (size_t i = 0; i < path.size(); ++i) out << (i ? " " : "") << pt(path[i]);
  out << "\" fill=\"none\" stroke=\"#1f4fb4\" stroke-width=\"2\"/>\n";
  out << "</svg>\n";
  return out.str();
}

inline void WriteFile(const std::filesystem::path& path,
                      const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline bool PrepareOutputDir(const std::string& dir, std::ostream& err) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    err << "error: cannot create output directory '" << dir << "'\n";
    return false;
  }
  return true;
}

/// Loads and validates a scenario; on failure prints the offending key and
/// returns nullopt.
inline std::optional<Scenario> LoadChecked(const std::string& path,
                                           std::ostream& err) {
  try {
    Scenario s = LoadScenario(path);
    ValidateScenario(s);
    return s;
  } catch (const ConfigError& e) {
    err << "config error in '" << path << "': " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "config error in '" << path << "': " << e.what() << "\n";
  }
  return std::nullopt;
}

struct VariantResult {
  ControllerVariant variant = ControllerVariant::kFull;
  SimulationLog log;
  Metrics metrics;
};

struct Comparison {
  VariantResult a;
  VariantResult b;
};

inline VariantResult RunVariant(Scenario scenario, ControllerVariant variant,
                                const MpcConfig& cfg, const RobotGeometry& geom) {
  scenario.variant = variant;
  VariantResult r;
  r.variant = variant;
  r.log = run(scenario, cfg, geom);
  r.metrics = metrics(r.log);
  return r;
}

inline Comparison CompareVariants(const Scenario& scenario, ControllerVariant a,
                                  ControllerVariant b, const MpcConfig& cfg = {},
                                  const RobotGeometry& geom = {}) {
  return {RunVariant(scenario, a, cfg, geom), RunVariant(scenario, b, cfg, geom)};
}

/// "key: value" lines; deltas are b minus a.
inline std::string ComparisonText(const Comparison& c) {
  const Metrics& ma = c.a.metrics;
  const Metrics& mb = c.b.metrics;
  std::ostringstream out;
  out << "scenario: " << c.a.log.scenario_name << "\n"
      << "variant_a: " << ToString(c.a.variant) << "\n"
      << "variant_b: " << ToString(c.b.variant) << "\n"
      << "completion_a: " << ToString(ma.completion) << "\n"
      << "completion_b: " << ToString(mb.completion) << "\n"
      << "ticks_a: " << ma.ticks << "\n"
      << "ticks_b: " << mb.ticks << "\n"
      << "max_heading_rate_a: " << FormatNumber(ma.max_heading_rate) << "\n"
      << "max_heading_rate_b: " << FormatNumber(mb.max_heading_rate) << "\n"
      << "max_heading_rate_delta: "
      << FormatNumber(mb.max_heading_rate - ma.max_heading_rate) << "\n"
      << "max_slip_measure_a: " << FormatNumber(ma.max_slip_measure) << "\n"
      << "max_slip_measure_b: " << FormatNumber(mb.max_slip_measure) << "\n"
      << "max_slip_measure_delta: "
      << FormatNumber(mb.max_slip_measure - ma.max_slip_measure) << "\n"
      << "min_clearance_a: " << FormatNumber(ma.min_clearance) << "\n"
      << "min_clearance_b: " << FormatNumber(mb.min_clearance) << "\n"
      << "min_clearance_delta: "
      << FormatNumber(mb.min_clearance - ma.min_clearance) << "\n";
  return out.str();
}

/// Both variants in one table; rows past the end of a truncated log hold nan.
inline std::string ComparisonSeries(const Comparison& c) {
  const auto& ra = c.a.log.records;
  const auto& rb = c.b.log.records;
  std::string out =
      "t,x_a,y_a,theta_a,slip_measure_a,min_clearance_a,"
      "x_b,y_b,theta_b,slip_measure_b,min_clearance_b\n";
  const size_t n = std::max(ra.size(), rb.size());
  const double nan = std::nan("");
  auto cols = [&](const std::vector<SimulationRecord>& recs, size_t k) {
    if (k >= recs.size()) return std::vector<double>(5, nan);
    const SimulationRecord& r = recs[k];
    return std::vector<double>{r.state.x, r.state.y, r.state.heading,
                               r.slip_measure, r.min_clearance};
  };
  for (size_t k = 0; k < n; ++k) {
    out += FormatNumber((k < ra.size() ? ra[k] : rb[k]).t);
    for (double v : cols(ra, k)) out += "," + FormatNumber(v);
    for (double v : cols(rb, k)) out += "," + FormatNumber(v);
    out += "\n";
  }
  return out;
}

inline int CmdValidate(const std::string& scenario_path, std::ostream& out,
                       std::ostream& err) {
  const auto s = LoadChecked(scenario_path, err);
  if (!s) return kConfig;
  out << "ok: " << s->name << " (" << s->obstacles.size() << " obstacles, "
      << s->corridor.size() << " boundaries, " << FormatNumber(s->duration)
      << " s)\n";
  return kOk;
}

inline int CmdRun(const RunOptions& options, std::ostream& out,
                  std::ostream& err) {
  auto scenario = LoadChecked(options.scenario_path, err);
  if (!scenario) return kConfig;
  if (options.variant_override) scenario->variant = *options.variant_override;
  if (!PrepareOutputDir(options.output_dir, err)) return kConfig;
  const MpcConfig cfg;
  const RobotGeometry geom;
  try {
    const SimulationLog log = run(*scenario, cfg, geom);
    const std::filesystem::path dir(options.output_dir);
    WriteFile(dir / (scenario->name + ".log.csv"), LogCsv(log));
    WriteFile(dir / (scenario->name + ".summary"), SummaryText(log));
    if (options.emit_plots) {
      for (const SeriesFile& f : PanelSeries(log, ConfigForVariant(cfg, log.variant))) {
        WriteFile(dir / (scenario->name + f.suffix), f.contents);
      }
      WriteFile(dir / (scenario->name + ".trajectory.svg"),
                TrajectorySvg(*scenario, log, geom));
    }
    out << scenario->name << " [" << ToString(log.variant)
        << "]: " << ToString(log.outcome) << " after " << log.records.size()
        << " ticks\n";
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

inline int CmdCompare(const std::string& scenario_path,
                      const std::string& output_dir, std::ostream& out,
                      std::ostream& err) {
  const auto scenario = LoadChecked(scenario_path, err);
  if (!scenario) return kConfig;
  if (!PrepareOutputDir(output_dir, err)) return kConfig;
  try {
    const Comparison c = CompareVariants(*scenario, ControllerVariant::kFull,
                                         ControllerVariant::kNoCustomization);
    const std::filesystem::path dir(output_dir);
    for (const VariantResult* r : {&c.a, &c.b}) {
      const std::string stem = scenario->name + "." + ToString(r->variant);
      WriteFile(dir / (stem + ".log.csv"), LogCsv(r->log));
      WriteFile(dir / (stem + ".summary"), SummaryText(r->log));
    }
    WriteFile(dir / (scenario->name + ".compare.csv"), ComparisonSeries(c));
    const std::string text = ComparisonText(c);
    WriteFile(dir / (scenario->name + ".compare.summary"), text);
    out << text;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace apfmpc::cli
