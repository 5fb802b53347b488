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

// Command implementations behind the forgetlab binary. Each returns a
// process exit status and never throws.
//
// Output files (inside the output directory):
//   simulate  simulate_records.jsonl, simulate_summary.txt,
//             trajectory_<stage>.jsonl when [run] trajectories = true
//   sweep     sweep_records.jsonl (resumable), sweep.csv
//   verify    verify_records.jsonl

#ifndef FORGETLAB_COMMANDS_H_
#define FORGETLAB_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace forgetlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

// Default output directory when neither --out nor [run] output_dir is set.
inline constexpr char kOutputDirEnv[] = "FORGETLAB_OUT_DIR";
inline constexpr char kDefaultOutputDir[] = "forgetlab_out";

struct CommandOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  // plot / frontier
  std::string records_path;
  std::string projection = "RET_FT";
  std::string output_path;
};

int CmdSimulate(const CommandOptions& options, std::ostream& out,
                std::ostream& err);
// Exit 0 if at least one run (old or new) completed.
int CmdSweep(const CommandOptions& options, std::ostream& out,
             std::ostream& err);
// Exit 0 iff every selected check passes, 1 otherwise.
int CmdVerify(const CommandOptions& options, std::ostream& out,
              std::ostream& err);
// Writes an SVG to output_path from pipeline records.
int CmdPlot(const CommandOptions& options, std::ostream& out,
            std::ostream& err);
// Writes per-method frontier membership CSV to output_path.
int CmdFrontier(const CommandOptions& options, std::ostream& out,
                std::ostream& err);

}  // namespace forgetlab

#endif  // FORGETLAB_COMMANDS_H_
