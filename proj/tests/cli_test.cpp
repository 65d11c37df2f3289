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

#include "apfmpc/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "suites.hpp"

#ifndef APFMPC_CLI_PATH
#define APFMPC_CLI_PATH "apfmpc_cli"
#endif

namespace apfmpc::cli {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> KeyValues(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find(": ");
    if (pos != std::string::npos) out[line.substr(0, pos)] = line.substr(pos + 2);
  }
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("apfmpc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, RunWithPlotsWritesPanelSet) {
  RunOptions opts;
  opts.scenario_path = testing::ScenarioPath("straight_corridor");
  opts.output_dir = dir_.string();
  opts.emit_plots = true;
  ASSERT_EQ(CmdRun(opts, out_, err_), kOk) << err_.str();
  const std::map<std::string, std::vector<std::string>> series = {
      {"straight_corridor.trajectory.csv", {"t", "x", "y"}},
      {"straight_corridor.heading.csv", {"t", "theta", "theta_ref"}},
      {"straight_corridor.wheel_speeds.csv", {"t", "v_f", "v_r"}},
      {"straight_corridor.inputs.csv", {"t", "a_f", "a_r", "delta_f", "delta_r"}},
      {"straight_corridor.slip.csv", {"t", "slip_measure", "slip_band"}}};
  for (const auto& [file, header] : series) {
    ASSERT_TRUE(fs::exists(dir_ / file)) << file;
    const CsvTable t = ParseCsv(Slurp(dir_ / file));
    EXPECT_EQ(t.header, header) << file;
    EXPECT_GE(t.rows.size(), 280u) << file;
  }
  const CsvTable log = ParseCsv(Slurp(dir_ / "straight_corridor.log.csv"));
  EXPECT_EQ(log.rows.size(), 280u);
  const auto summary = KeyValues(Slurp(dir_ / "straight_corridor.summary"));
  EXPECT_EQ(summary.at("completion"), "completed");
  EXPECT_EQ(summary.at("ticks"), "280");
  const std::string svg = Slurp(dir_ / "straight_corridor.trajectory.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
}

TEST_F(CliTest, RunWithoutPlotsWritesLogAndSummaryOnly) {
  RunOptions opts;
  opts.scenario_path = testing::ScenarioPath("empty_corridor");
  opts.output_dir = dir_.string();
  ASSERT_EQ(CmdRun(opts, out_, err_), kOk);
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++files;
  EXPECT_EQ(files, 2);
  EXPECT_NE(out_.str().find("completed"), std::string::npos);
}

TEST_F(CliTest, VariantOverrideChangesOutcome) {
  RunOptions opts;
  opts.scenario_path = testing::ScenarioPath("ablation_corridor");
  opts.output_dir = (dir_ / "full").string();
  ASSERT_EQ(CmdRun(opts, out_, err_), kOk);
  opts.output_dir = (dir_ / "ablated").string();
  opts.variant_override = ControllerVariant::kNoCustomization;
  ASSERT_EQ(CmdRun(opts, out_, err_), kOk);
  const auto full = KeyValues(Slurp(dir_ / "full" / "ablation_corridor.summary"));
  const auto ablated = KeyValues(Slurp(dir_ / "ablated" / "ablation_corridor.summary"));
  EXPECT_EQ(full.at("variant"), "full");
  EXPECT_EQ(ablated.at("variant"), "no_customization");
  EXPECT_NE(full.at("min_clearance"), ablated.at("min_clearance"));
  EXPECT_NE(full.at("max_slip_measure"), ablated.at("max_slip_measure"));
  EXPECT_LT(std::stod(ablated.at("min_clearance")), std::stod(full.at("min_clearance")));
}

TEST_F(CliTest, MissingScenarioNamesPath) {
  RunOptions opts;
  opts.scenario_path = (dir_ / "missing.json").string();
  opts.output_dir = dir_.string();
  EXPECT_EQ(CmdRun(opts, out_, err_), kConfig);
  EXPECT_NE(err_.str().find(opts.scenario_path), std::string::npos);
  EXPECT_EQ(CmdValidate(opts.scenario_path, out_, err_), kConfig);
  EXPECT_EQ(CmdCompare(opts.scenario_path, dir_.string(), out_, err_), kConfig);
}

TEST_F(CliTest, BadKeyIsReported) {
  fs::create_directories(dir_);
  nlohmann::json doc =
      nlohmann::json::parse(Slurp(testing::ScenarioPath("straight_corridor")));
  doc["obstacles"][0].erase("heading");
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << doc.dump();
  EXPECT_EQ(CmdValidate(bad.string(), out_, err_), kConfig);
  EXPECT_NE(err_.str().find("obstacles[0].heading"), std::string::npos);
}

TEST_F(CliTest, ValidateAcceptsShippedScenarios) {
  EXPECT_EQ(CmdValidate(testing::ScenarioPath("orthogonal_corridor"), out_, err_), kOk);
  EXPECT_EQ(out_.str().rfind("ok: orthogonal_corridor", 0), 0u);
}

TEST_F(CliTest, CompareWritesBothLogsAndDeltas) {
  ASSERT_EQ(CmdCompare(testing::ScenarioPath("ablation_corridor"), dir_.string(), out_, err_),
            kOk);
  for (const char* f : {"ablation_corridor.full.log.csv", "ablation_corridor.full.summary",
                        "ablation_corridor.no_customization.log.csv",
                        "ablation_corridor.no_customization.summary",
                        "ablation_corridor.compare.csv", "ablation_corridor.compare.summary"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  const CsvTable side = ParseCsv(Slurp(dir_ / "ablation_corridor.compare.csv"));
  EXPECT_EQ(side.header.size(), 11u);

  // Summary values recomputed from the two written logs.
  const auto summary = KeyValues(Slurp(dir_ / "ablation_corridor.compare.summary"));
  EXPECT_EQ(summary, KeyValues(out_.str()));
  const Scenario s = LoadScenario(testing::ScenarioPath("ablation_corridor"));
  const MpcConfig cfg;
  struct Recomputed {
    double heading_rate = 0.0, slip = 0.0, clearance = kInf;
    size_t ticks = 0;
  };
  auto recompute = [&](const std::string& file) {
    const CsvTable t = ParseCsv(Slurp(dir_ / file));
    Recomputed r;
    double prev = s.initial_state.heading;
    for (const auto& row : t.rows) {
      const double theta = row[t.Column("theta")];
      r.heading_rate = std::max(r.heading_rate, std::abs(NormalizeAngle(theta - prev)));
      prev = theta;
      r.slip = std::max(r.slip, row[t.Column("slip_measure")]);
      r.clearance = std::min(r.clearance, row[t.Column("min_clearance")]);
    }
    r.heading_rate /= cfg.dt;
    r.ticks = t.rows.size();
    return r;
  };
  const Recomputed a = recompute("ablation_corridor.full.log.csv");
  const Recomputed b = recompute("ablation_corridor.no_customization.log.csv");
  EXPECT_EQ(summary.at("max_heading_rate_a"), FormatNumber(a.heading_rate));
  EXPECT_EQ(summary.at("max_heading_rate_b"), FormatNumber(b.heading_rate));
  EXPECT_EQ(summary.at("max_heading_rate_delta"), FormatNumber(b.heading_rate - a.heading_rate));
  EXPECT_EQ(summary.at("max_slip_measure_a"), FormatNumber(a.slip));
  EXPECT_EQ(summary.at("max_slip_measure_delta"), FormatNumber(b.slip - a.slip));
  EXPECT_EQ(summary.at("min_clearance_b"), FormatNumber(b.clearance));
  EXPECT_EQ(summary.at("min_clearance_delta"), FormatNumber(b.clearance - a.clearance));
  EXPECT_EQ(summary.at("ticks_a"), std::to_string(a.ticks));
  EXPECT_EQ(summary.at("variant_b"), "no_customization");
  EXPECT_EQ(summary.at("completion_a"), "completed");
}

TEST_F(CliTest, IdenticalVariantsGiveZeroDeltas) {
  const Scenario s = LoadScenario(testing::ScenarioPath("straight_corridor"));
  const Comparison c = CompareVariants(s, ControllerVariant::kFull, ControllerVariant::kFull);
  const auto kv = KeyValues(ComparisonText(c));
  EXPECT_EQ(kv.at("max_heading_rate_delta"), "0");
  EXPECT_EQ(kv.at("max_slip_measure_delta"), "0");
  EXPECT_EQ(kv.at("min_clearance_delta"), "0");
  const CsvTable t = ParseCsv(ComparisonSeries(c));
  for (const auto& row : t.rows) {
    for (int k = 1; k <= 5; ++k) EXPECT_EQ(row[k], row[k + 5]);
  }
}

TEST_F(CliTest, OutputsAreByteIdenticalAcrossRuns) {
  RunOptions opts;
  opts.scenario_path = testing::ScenarioPath("orthogonal_corridor");
  opts.emit_plots = true;
  opts.output_dir = (dir_ / "one").string();
  ASSERT_EQ(CmdRun(opts, out_, err_), kOk);
  opts.output_dir = (dir_ / "two").string();
  ASSERT_EQ(CmdRun(opts, out_, err_), kOk);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "one")) {
    EXPECT_EQ(Slurp(e.path()), Slurp(dir_ / "two" / e.path().filename()))
        << e.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 8);
}

int Shell(const std::string& args) {
  const int status = std::system((std::string(APFMPC_CLI_PATH) + " " + args).c_str());
  return WEXITSTATUS(status);
}

TEST_F(CliTest, BinaryExitCodes) {
  fs::create_directories(dir_);
  const std::string quiet = " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
  EXPECT_EQ(Shell("validate " + testing::ScenarioPath("empty_corridor") + quiet), 0);
  EXPECT_EQ(Shell("validate " + (dir_ / "nope.json").string() + quiet), 2);
  EXPECT_NE(Slurp(dir_ / "stderr.txt").find("nope.json"), std::string::npos);
  EXPECT_EQ(Shell("frobnicate" + quiet), 1);
  EXPECT_EQ(Shell("run" + quiet), 1);
  EXPECT_EQ(Shell("run " + testing::ScenarioPath("empty_corridor") + " --variant bogus" + quiet),
            1);
  EXPECT_EQ(Shell("--help" + quiet), 0);
  EXPECT_EQ(Shell("run " + testing::ScenarioPath("empty_corridor") + " --out " +
                  (dir_ / "out").string() + " --variant no_customization" + quiet),
            0);
  const auto summary = KeyValues(Slurp(dir_ / "out" / "empty_corridor.summary"));
  EXPECT_EQ(summary.at("variant"), "no_customization");
}

}  // namespace
}  // namespace apfmpc::cli
