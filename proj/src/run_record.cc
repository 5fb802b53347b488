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

#include "forgetlab/run_record.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "forgetlab/errors.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {
namespace {

std::string RealToJson(double value) {
  if (!std::isfinite(value)) return "\"" + FormatDouble(value) + "\"";
  std::string text = FormatDouble(value);
  if (text.find_first_of(".eE") == std::string::npos) text += ".0";
  return text;
}

std::string ValueToJson(const RecordValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) {
    return nlohmann::json(*s).dump();
  }
  if (const auto* d = std::get_if<double>(&value)) return RealToJson(*d);
  if (const auto* i = std::get_if<int64_t>(&value)) return std::to_string(*i);
  return std::get<bool>(value) ? "true" : "false";
}

const char* TypeName(const RecordValue& value) {
  switch (value.index()) {
    case 0:
      return "string";
    case 1:
      return "real";
    case 2:
      return "integer";
    default:
      return "boolean";
  }
}

}  // namespace

void RunRecord::Set(const std::string& key, RecordValue value) {
  for (auto& [k, v] : fields_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  fields_.emplace_back(key, std::move(value));
}

const RecordValue* RunRecord::Find(const std::string& key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

template <typename T>
const T& Typed(const RunRecord& record, const std::string& key) {
  const RecordValue* value = record.Find(key);
  if (value == nullptr) throw ConfigError("record has no field '" + key + "'");
  const T* typed = std::get_if<T>(value);
  if (typed == nullptr) {
    throw ConfigError("record field '" + key + "' has type " +
                      TypeName(*value));
  }
  return *typed;
}

}  // namespace

std::string RunRecord::GetString(const std::string& key) const {
  return Typed<std::string>(*this, key);
}

double RunRecord::GetDouble(const std::string& key) const {
  return Typed<double>(*this, key);
}

int64_t RunRecord::GetInt(const std::string& key) const {
  return Typed<int64_t>(*this, key);
}

std::string RunRecord::ToJsonLine() const {
  std::string out = "{";
  for (size_t i = 0; i < fields_.size(); ++i) {
    if (i > 0) out += ',';
    out += nlohmann::json(fields_[i].first).dump() + ":" +
           ValueToJson(fields_[i].second);
  }
  return out + "}";
}

RunRecord RunRecord::FromJsonLine(const std::string& line) {
  nlohmann::ordered_json parsed;
  try {
    parsed = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed record: ") + e.what());
  }
  if (!parsed.is_object()) throw ConfigError("record must be a JSON object");
  RunRecord record;
  for (const auto& [key, value] : parsed.items()) {
    if (value.is_string()) {
      const std::string s = value.get<std::string>();
      if (s == "nan" || s == "inf" || s == "-inf") {
        record.Set(key, ParseDouble(s));
      } else {
        record.Set(key, s);
      }
    } else if (value.is_boolean()) {
      record.Set(key, value.get<bool>());
    } else if (value.is_number_float()) {
      record.Set(key, value.get<double>());
    } else if (value.is_number_integer()) {
      record.Set(key, value.get<int64_t>());
    } else {
      throw ConfigError("record field '" + key + "' is not a scalar");
    }
  }
  return record;
}

RunRecord PipelineRecord(const PipelineRun& run) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RunRecord r;
  r.Set("schema", std::string(kRecordSchema));
  r.Set("kind", std::string("pipeline"));
  r.Set("run_id", run.provenance.run_id);
  r.Set("config_hash", run.provenance.config_hash);
  r.Set("seed", static_cast<int64_t>(run.provenance.seed));
  r.Set("status", std::string(run.complete() ? "complete" : "diverged"));
  r.Set("failed_stage", std::string(run.failed_stage
                                        ? StageIdName(*run.failed_stage)
                                        : ""));
  r.Set("mix_fraction", run.plans[0].mix_fraction);
  r.Set("replay_fraction", run.plans[1].replay_fraction);
  r.Set("eta1", run.plans[0].settings.eta);
  r.Set("steps1", run.plans[0].budget_steps);
  r.Set("eta2", run.plans[1].settings.eta);
  r.Set("lambda_ridge", run.plans[1].settings.ridge_lambda);
  r.Set("steps2", run.plans[1].budget_steps);
  r.Set("eta3", run.plans[2].settings.eta);
  r.Set("steps3", run.plans[2].budget_steps);
  r.Set("exposure_steps", run.plans[0].SpecializedExposureSteps() +
                              run.plans[1].SpecializedExposureSteps());
  const CheckpointMetrics m = run.metrics.value_or(
      CheckpointMetrics{nan, nan, nan, nan, nan});
  r.Set("L_im", m.l_im);
  r.Set("L_ret", m.l_ret);
  r.Set("L_ft", m.l_ft);
  r.Set("L_pre", m.l_pre);
  r.Set("delta", m.delta);
  return r;
}

RunRecord TheoremRecord(const TheoremReport& report) {
  RunRecord r;
  r.Set("schema", std::string(kRecordSchema));
  r.Set("kind", std::string("theorem"));
  r.Set("theorem_id", report.theorem_id);
  r.Set("pass", report.pass);
  for (const auto& [name, value] : report.measured) {
    r.Set("measured." + name, value);
  }
  for (const auto& [name, value] : report.thresholds) {
    r.Set("threshold." + name, value);
  }
  r.Set("oracle", report.oracle);
  std::string notes;
  for (const std::string& note : report.notes) {
    if (!notes.empty()) notes += "; ";
    notes += note;
  }
  r.Set("notes", notes);
  return r;
}

RecordFile ReadRecordFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read record file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  RecordFile file;
  size_t pos = 0;
  int line_number = 0;
  while (pos < text.size()) {
    ++line_number;
    const size_t end = text.find('\n', pos);
    const bool has_newline = end != std::string::npos;
    const std::string line =
        text.substr(pos, has_newline ? end - pos : std::string::npos);
    const bool last = !has_newline || end + 1 == text.size();
    try {
      if (!has_newline) throw ConfigError("line without newline");
      if (!line.empty()) file.records.push_back(RunRecord::FromJsonLine(line));
    } catch (const ConfigError& e) {
      if (last) {
        file.torn_tail = true;
        return file;
      }
      throw ConfigError(path + ":" + std::to_string(line_number) + ": " +
                        e.what());
    }
    pos = end + 1;
    file.valid_bytes = pos;
  }
  return file;
}

void TruncateTornTail(const std::string& path, const RecordFile& file) {
  if (!file.torn_tail) return;
  std::filesystem::resize_file(path, file.valid_bytes);
}

RecordAppender::RecordAppender(const std::string& path, Mode mode)
    : path_(path),
      out_(path, std::ios::binary | (mode == Mode::kTruncate
                                         ? std::ios::trunc
                                         : std::ios::app)) {
  if (!out_) throw ConfigError("cannot open record file " + path);
}

void RecordAppender::Append(const RunRecord& record) {
  out_ << record.ToJsonLine() << '\n';
  out_.flush();
  if (!out_) throw ConfigError("failed writing record file " + path_);
}

std::string SweepCsvHeader() {
  return "run_id,mix_fraction,replay_fraction,eta2,lambda_ridge,eta3,steps3,"
         "L_im,L_ret,L_ft,L_pre,delta\n";
}

std::string SweepCsvRow(const RunRecord& r) {
  std::string out = r.GetString("run_id");
  for (const char* key : {"mix_fraction", "replay_fraction", "eta2",
                          "lambda_ridge", "eta3"}) {
    out += "," + FormatDouble(r.GetDouble(key));
  }
  out += "," + std::to_string(r.GetInt("steps3"));
  for (const char* key : {"L_im", "L_ret", "L_ft", "L_pre", "delta"}) {
    out += "," + FormatDouble(r.GetDouble(key));
  }
  return out + "\n";
}

}  // namespace forgetlab
