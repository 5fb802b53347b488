// Copyright 2026 The forgetlab Authors. All Rights Reserved.
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

// forgetlab: simulate | sweep | verify | plot | frontier

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "forgetlab/commands.h"

namespace {

void AddCommon(CLI::App* cmd, std::optional<uint64_t>& seed,
               std::optional<int>& threads,
               std::optional<std::string>& out_dir) {
  cmd->add_option("--out", out_dir, "Output directory");
  cmd->add_option("--seed", seed, "Seed (overrides the config)");
  cmd->add_option("--threads", threads, "Worker threads")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-stage forgetting laboratory on two-layer linear nets"};
  app.require_subcommand(1);

  forgetlab::CommandOptions o;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;

  CLI::App* simulate = app.add_subcommand("simulate", "Run one pipeline");
  CLI::App* sweep = app.add_subcommand("sweep", "Run a resumable grid sweep");
  CLI::App* verify = app.add_subcommand("verify", "Run the theorem checks");
  for (CLI::App* cmd : {simulate, sweep, verify}) {
    cmd->add_option("--config", o.config_path, "Experiment config file")
        ->required();
    AddCommon(cmd, seed, threads, out_dir);
  }
  CLI::App* plot = app.add_subcommand("plot", "Render a frontier SVG");
  CLI::App* frontier =
      app.add_subcommand("frontier", "Export frontier membership CSV");
  for (CLI::App* cmd : {plot, frontier}) {
    cmd->add_option("--records", o.records_path, "Pipeline record file")
        ->required();
    cmd->add_option("--projection", o.projection, "RET_FT or PRE_RET");
    cmd->add_option("--output", o.output_path, "Output file");
    AddCommon(cmd, seed, threads, out_dir);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return forgetlab::kExitConfig;
  }
  o.seed = seed;
  o.threads = threads;
  o.out_dir = out_dir;

  if (*simulate) return forgetlab::CmdSimulate(o, std::cout, std::cerr);
  if (*sweep) return forgetlab::CmdSweep(o, std::cout, std::cerr);
  if (*verify) return forgetlab::CmdVerify(o, std::cout, std::cerr);
  if (*plot) return forgetlab::CmdPlot(o, std::cout, std::cerr);
  return forgetlab::CmdFrontier(o, std::cout, std::cerr);
}
