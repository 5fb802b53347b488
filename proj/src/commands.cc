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

#include "forgetlab/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "forgetlab/errors.h"
#include "forgetlab/experiment_config.h"
#include "forgetlab/frontier.h"
#include "forgetlab/numeric_format.h"
#include "forgetlab/pipeline.h"
#include "forgetlab/run_record.h"
#include "forgetlab/svg_plot.h"
#include "forgetlab/theorems.h"

namespace forgetlab {
namespace {

namespace fs = std::filesystem;

// Maps exceptions onto the exit-code contract.
int Guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: numeric divergence at step " << e.step() << ": "
        << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

ExperimentConfig LoadConfig(const CommandOptions& options) {
  if (options.config_path.empty()) throw ConfigError("--config is required");
  return LoadExperimentConfig(options.config_path, options.seed);
}

std::string ResolveOutputDir(const CommandOptions& options,
                             const ExperimentConfig* config) {
  std::string dir;
  if (options.out_dir) {
    dir = *options.out_dir;
  } else if (config != nullptr && !config->output_dir.empty()) {
    dir = config->output_dir;
  } else if (const char* env = std::getenv(kOutputDirEnv);
             env != nullptr && *env != '\0') {
    dir = env;
  } else {
    dir = kDefaultOutputDir;
  }
  fs::create_directories(dir);
  return dir;
}

int Threads(const CommandOptions& options, const ExperimentConfig& config) {
  const int threads = options.threads.value_or(config.threads);
  if (threads < 1) throw ConfigError("--threads must be >= 1");
  return threads;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ConfigError("failed writing " + path);
}

std::string Summary(const PipelineRun& run) {
  std::string s = "run " + run.provenance.run_id + " (seed " +
                  std::to_string(run.provenance.seed) + ")\n";
  if (!run.complete()) {
    s += "status: diverged in " +
         std::string(StageIdName(*run.failed_stage)) + ": " + run.failure +
         "\n";
    return s;
  }
  const CheckpointMetrics& m = *run.metrics;
  s += "L_im  = " + FormatDouble(m.l_im) + "\n";
  s += "L_ret = " + FormatDouble(m.l_ret) + "\n";
  s += "L_ft  = " + FormatDouble(m.l_ft) + "\n";
  s += "L_pre = " + FormatDouble(m.l_pre) + "\n";
  s += "delta = " + FormatDouble(m.delta) + "\n";
  return s;
}

}  // namespace

int CmdSimulate(const CommandOptions& options, std::ostream& out,
                std::ostream& err) {
  return Guarded(err, [&] {
    const ExperimentConfig config = LoadConfig(options);
    const std::string dir = ResolveOutputDir(options, &config);
    PipelineOptions run_options;
    run_options.seed = config.seed;
    run_options.keep_trajectories = config.trajectories;
    const PipelineRun run = RunPipeline(config.family, config.plans,
                                        config.InitialState(), run_options);

    RecordAppender records(dir + "/simulate_records.jsonl",
                           RecordAppender::Mode::kTruncate);
    records.Append(PipelineRecord(run));
    const std::string summary = Summary(run);
    WriteText(dir + "/simulate_summary.txt", summary);
    const StageId stages[3] = {StageId::kPretrain, StageId::kPosttrain,
                               StageId::kFinetune};
    for (size_t i = 0; i < run.trajectories.size(); ++i) {
      WriteText(dir + "/trajectory_" + StageIdName(stages[i]) + ".jsonl",
                TrajectoryToJsonLines(run.trajectories[i]));
    }
    out << summary;
    if (!run.complete()) {
      err << "error: run diverged; partial record written\n";
      return kExitNumeric;
    }
    return kExitOk;
  });
}

int CmdSweep(const CommandOptions& options, std::ostream& out,
             std::ostream& err) {
  return Guarded(err, [&] {
    const ExperimentConfig config = LoadConfig(options);
    if (!config.sweep) throw ConfigError("config has no [sweep] section");
    if (config.sweep->size() == 0) {
      throw ConfigError("sweep grid is empty: every axis needs a value");
    }
    const std::string dir = ResolveOutputDir(options, &config);
    const std::string records_path = dir + "/sweep_records.jsonl";

    // Resume: keep every complete line already on disk, skip those runs.
    std::vector<RunRecord> existing;
    SweepOptions sweep_options;
    sweep_options.seed = config.seed;
    sweep_options.threads = Threads(options, config);
    if (fs::exists(records_path)) {
      const RecordFile file = ReadRecordFile(records_path);
      if (file.torn_tail) {
        err << "note: dropping torn trailing record in " << records_path
            << "\n";
        TruncateTornTail(records_path, file);
      }
      for (const RunRecord& r : file.records) {
        if (r.GetString("kind") != "pipeline") continue;
        sweep_options.skip_run_ids.insert(r.GetString("run_id"));
        existing.push_back(r);
      }
    }

    SweepBase base{config.plans[0], config.plans[1], config.plans[2]};
    const SweepResult result =
        RunSweep(config.family, *config.sweep, base, config.InitialState(),
                 sweep_options);
    RecordAppender appender(records_path, RecordAppender::Mode::kAppend);
    std::vector<RunRecord> all = existing;
    for (const PipelineRun& run : result.runs) {
      RunRecord record = PipelineRecord(run);
      appender.Append(record);
      all.push_back(std::move(record));
    }

    std::stable_sort(all.begin(), all.end(),
                     [](const RunRecord& a, const RunRecord& b) {
                       return a.GetString("run_id") < b.GetString("run_id");
                     });
    std::string csv = SweepCsvHeader();
    int completed = 0;
    for (const RunRecord& r : all) {
      csv += SweepCsvRow(r);
      completed += r.GetString("status") == "complete" ? 1 : 0;
    }
    WriteText(dir + "/sweep.csv", csv);
    out << "sweep: " << all.size() << " runs (" << result.runs.size()
        << " new, " << existing.size() << " resumed), "
        << all.size() - completed << " failed; stage-1 trainings: "
        << result.pretrain_executions << "\n";
    return completed > 0 ? kExitOk : kExitNumeric;
  });
}

namespace {

std::string ReportLine(const TheoremReport& report) {
  char head[96];
  std::snprintf(head, sizeof(head), "%-34s %s ", report.theorem_id.c_str(),
                report.pass ? "PASS" : "FAIL");
  std::string line = head;
  for (const auto& [name, value] : report.measured) {
    line += " " + name + "=" + FormatDouble(value);
  }
  for (const std::string& note : report.notes) line += " [" + note + "]";
  return line;
}

}  // namespace

int CmdVerify(const CommandOptions& options, std::ostream& out,
              std::ostream& err) {
  return Guarded(err, [&] {
    const ExperimentConfig config = LoadConfig(options);
    const VerifySelection& v = config.verify;
    const TaskFamily& family = *config.family;
    auto selected = [&](const std::string& name) {
      return std::find(v.checks.begin(), v.checks.end(), name) !=
             v.checks.end();
    };
    // Preconditions first, so a bad epsilon fails before any training.
    if (selected("theorem2")) {
      ValidatePosttrainEpsilon(family.spectra, v.finetune.posttrain.epsilon);
    }
    if (selected("theorem3")) {
      ValidateForgettingEpsilon(family, v.finetune.posttrain.epsilon);
    }
    const std::string dir = ResolveOutputDir(options, &config);

    std::vector<TheoremReport> reports;
    // With the literal flag both readings of the unmixed start are run.
    std::vector<bool> readings{false};
    if (v.finetune.posttrain.literal_unmixed) readings.push_back(true);
    auto tagged = [](TheoremReport r, bool literal) {
      if (literal) r.theorem_id += "_literal";
      return r;
    };
    if (selected("theorem1")) {
      reports.push_back(VerifyTheorem1(family, v.alpha, v.theorem1));
    }
    if (selected("theorem2")) {
      for (bool literal : readings) {
        PosttrainCheckSettings s = v.finetune.posttrain;
        s.literal_unmixed = literal;
        reports.push_back(tagged(VerifyTheorem2(family, v.alpha, s), literal));
      }
    }
    if (selected("theorem3")) {
      for (bool literal : readings) {
        FinetuneCheckSettings s = v.finetune;
        s.posttrain.literal_unmixed = literal;
        reports.push_back(tagged(VerifyTheorem3(family, v.alpha, s), literal));
      }
    }
    if (selected("frozen")) {
      OptimizerSettings opt;
      opt.eta = v.finetune.eta;
      opt.max_steps = v.frozen_steps;
      opt.snapshot_every = 1;
      const Trajectory traj = Train(
          IdealizedCheckpoint(family, CheckpointKind::kMixed, v.alpha),
          family.ft, family, TrainConfig::Create(opt));
      TheoremReport r = ToReport(CheckFrozenDirections(traj, family.ft));
      r.theorem_id = "frozen_directions_finetune";
      reports.push_back(r);
    }
    if (selected("sequential")) {
      OptimizerSettings opt;
      opt.eta = v.theorem1.eta;
      opt.max_steps = v.theorem1.steps;
      opt.snapshot_every = 1;
      SequentialOrderSettings seq;
      seq.eta = opt.eta;
      seq.unlearned_threshold = v.theorem1.unlearned_threshold;
      const StageDistribution dists[2] = {
          family.pre, MixDistributions(family.pre, family.post, v.alpha)};
      const char* names[2] = {"sequential_order_unmixed",
                              "sequential_order_mixed"};
      for (int i = 0; i < 2; ++i) {
        const Trajectory traj = Train(config.InitialState(), dists[i], family,
                                      TrainConfig::Create(opt));
        TheoremReport r = ToReport(CheckSequentialOrder(traj, dists[i], seq));
        r.theorem_id = names[i];
        reports.push_back(r);
      }
    }

    RecordAppender records(dir + "/verify_records.jsonl",
                           RecordAppender::Mode::kTruncate);
    bool all_pass = true;
    for (const TheoremReport& r : reports) {
      records.Append(TheoremRecord(r));
      out << ReportLine(r) << "\n";
      all_pass = all_pass && r.pass;
    }
    out << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
    return all_pass ? kExitOk : kExitCheckFailed;
  });
}

namespace {

// Complete pipeline runs grouped by method, mixed first.
std::vector<MethodSeries> LoadSeries(const std::string& path,
                                     Projection projection) {
  if (path.empty()) throw ConfigError("--records is required");
  const RecordFile file = ReadRecordFile(path);
  MethodSeries mixed{"mixed", {}};
  MethodSeries unmixed{"unmixed", {}};
  for (const RunRecord& r : file.records) {
    if (r.GetString("kind") != "pipeline") continue;
    if (r.GetString("status") != "complete") continue;
    CheckpointMetrics m;
    m.l_im = r.GetDouble("L_im");
    m.l_ret = r.GetDouble("L_ret");
    m.l_ft = r.GetDouble("L_ft");
    m.l_pre = r.GetDouble("L_pre");
    m.delta = r.GetDouble("delta");
    const FrontierPoint p =
        ProjectMetrics(m, projection, r.GetString("run_id"));
    (r.GetDouble("mix_fraction") > 0.0 ? mixed : unmixed).points.push_back(p);
  }
  if (mixed.points.empty() && unmixed.points.empty()) {
    throw ConfigError("no complete pipeline records in " + path);
  }
  std::vector<MethodSeries> series;
  if (!mixed.points.empty()) series.push_back(std::move(mixed));
  if (!unmixed.points.empty()) series.push_back(std::move(unmixed));
  return series;
}

}  // namespace

int CmdPlot(const CommandOptions& options, std::ostream& out,
            std::ostream& err) {
  return Guarded(err, [&] {
    const Projection projection = ParseProjection(options.projection);
    const std::vector<MethodSeries> series =
        LoadSeries(options.records_path, projection);
    const std::string path =
        options.output_path.empty()
            ? ResolveOutputDir(options, nullptr) + "/frontier_" +
                  ProjectionName(projection) + ".svg"
            : options.output_path;
    WriteText(path, RenderFrontierSvg(projection, series));
    out << "wrote " << path << "\n";
    return kExitOk;
  });
}

int CmdFrontier(const CommandOptions& options, std::ostream& out,
                std::ostream& err) {
  return Guarded(err, [&] {
    const Projection projection = ParseProjection(options.projection);
    const std::vector<MethodSeries> series =
        LoadSeries(options.records_path, projection);
    const std::string label = ProjectionName(projection);
    std::string csv = FrontierCsvHeader();
    std::vector<ParetoFrontier> fronts;
    for (const MethodSeries& s : series) {
      fronts.push_back(ParetoFront(s.points, label, s.method));
      csv += FrontierCsvRows(s.points, fronts.back());
      out << s.method << ": " << fronts.back().points.size() << " of "
          << s.points.size() << " runs on the " << label << " frontier\n";
    }
    if (fronts.size() == 2) {
      const DominanceReport d = Dominates(fronts[0], fronts[1], 1e-6);
      out << fronts[0].method << " covers " << FormatDouble(d.fraction)
          << " of the " << fronts[1].method << " frontier at tol 1e-6 ("
          << d.strict_count << " strictly)\n";
    }
    const std::string path =
        options.output_path.empty()
            ? ResolveOutputDir(options, nullptr) + "/frontier_" + label +
                  ".csv"
            : options.output_path;
    WriteText(path, csv);
    out << "wrote " << path << "\n";
    return kExitOk;
  });
}

}  // namespace forgetlab
