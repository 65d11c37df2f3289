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

#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "apfmpc/cli.hpp"

int main(int argc, char** argv) {
  using apfmpc::ControllerVariant;
  namespace cli = apfmpc::cli;

  CLI::App app{"Closed-loop MPC local planner simulations"};
  app.require_subcommand(1);

  cli::RunOptions run_opts;
  std::string variant;
  auto* run = app.add_subcommand("run", "Simulate one scenario and write its log");
  run->add_option("scenario", run_opts.scenario_path, "Scenario file")->required();
  run->add_option("--out", run_opts.output_dir, "Output directory");
  run->add_flag("--plots", run_opts.emit_plots, "Also write panel series and an SVG");
  run->add_option("--variant", variant, "Controller variant override")
      ->check(CLI::IsMember({"full", "no_customization"}));

  std::string compare_path;
  std::string compare_out = ".";
  auto* compare = app.add_subcommand("compare", "Run both controller variants");
  compare->add_option("scenario", compare_path, "Scenario file")->required();
  compare->add_option("--out", compare_out, "Output directory");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (*run) {
      if (!variant.empty()) run_opts.variant_override = apfmpc::ParseVariant(variant);
      return cli::CmdRun(run_opts, std::cout, std::cerr);
    }
    if (*compare) return cli::CmdCompare(compare_path, compare_out, std::cout, std::cerr);
    if (*validate) return cli::CmdValidate(validate_path, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return cli::kInternal;
  }
  return cli::kUsage;
}
