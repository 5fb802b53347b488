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

// Flat run records, one JSON object per line. Reals are written with 17
// significant digits and always carry a '.' or exponent so they parse back
// as reals; non-finite reals are written as the strings "nan", "inf",
// "-inf".

#ifndef FORGETLAB_RUN_RECORD_H_
#define FORGETLAB_RUN_RECORD_H_

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "forgetlab/pipeline.h"
#include "forgetlab/theorems.h"

namespace forgetlab {

inline constexpr char kRecordSchema[] = "forgetlab.record/1";

using RecordValue = std::variant<std::string, double, int64_t, bool>;

class RunRecord {
 public:
  // Replaces an existing field in place, otherwise appends.
  void Set(const std::string& key, RecordValue value);
  const RecordValue* Find(const std::string& key) const;

  // Typed accessors; throw ConfigError if missing or of another type.
  std::string GetString(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  int64_t GetInt(const std::string& key) const;

  const std::vector<std::pair<std::string, RecordValue>>& fields() const {
    return fields_;
  }

  std::string ToJsonLine() const;  // no trailing newline
  // Throws ConfigError on malformed input or nested values.
  static RunRecord FromJsonLine(const std::string& line);

  bool operator==(const RunRecord&) const = default;

 private:
  std::vector<std::pair<std::string, RecordValue>> fields_;
};

// kind = "pipeline": plans, provenance, status, metrics (nan if missing).
RunRecord PipelineRecord(const PipelineRun& run);
// kind = "theorem": id, pass, measured.* and threshold.* fields, notes.
RunRecord TheoremRecord(const TheoremReport& report);

struct RecordFile {
  std::vector<RunRecord> records;
  // Bytes of the file that hold complete, parseable lines.
  std::uintmax_t valid_bytes = 0;
  bool torn_tail = false;
};

// Reads a record file. A last line without newline or that fails to parse
// is reported as torn (not an error); any earlier bad line throws.
RecordFile ReadRecordFile(const std::string& path);

// Truncates a torn tail left by an interrupted writer.
void TruncateTornTail(const std::string& path, const RecordFile& file);

// Single writer for record files; each Append writes one full line.
class RecordAppender {
 public:
  enum class Mode { kTruncate, kAppend };
  RecordAppender(const std::string& path, Mode mode);
  void Append(const RunRecord& record);

 private:
  std::string path_;
  std::ofstream out_;
};

// Sweep CSV: run_id,mix_fraction,replay_fraction,eta2,lambda_ridge,eta3,
// steps3,L_im,L_ret,L_ft,L_pre,delta. Built from pipeline records.
std::string SweepCsvHeader();
std::string SweepCsvRow(const RunRecord& record);

}  // namespace forgetlab

#endif  // FORGETLAB_RUN_RECORD_H_
