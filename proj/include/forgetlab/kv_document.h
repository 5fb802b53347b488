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

// Flat, sectioned key-value text used for configs and task-family files:
//
//   # comment
//   [section]
//   key = value
//
// Keys are unique within a section. Values are raw strings; typing happens
// in KeyValueReader, which also rejects any key nobody asked for.

#ifndef FORGETLAB_KV_DOCUMENT_H_
#define FORGETLAB_KV_DOCUMENT_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace forgetlab {

class KeyValueDocument {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  static KeyValueDocument Parse(std::string_view text);
  static KeyValueDocument ParseFile(const std::string& path);

  std::string Serialize() const;

  // Appends (or replaces) a value, creating the section on first use.
  void Set(const std::string& section, const std::string& key,
           std::string value);

  const Section* FindSection(std::string_view name) const;
  std::optional<std::string> Find(std::string_view section,
                                  std::string_view key) const;
  const std::vector<Section>& sections() const { return sections_; }

 private:
  Section& GetOrAddSection(const std::string& name);

  std::vector<Section> sections_;
};

// Typed, consumption-tracking view over a document. Every getter marks the
// key as used; Finish() throws ConfigError naming the first unused key.
class KeyValueReader {
 public:
  explicit KeyValueReader(const KeyValueDocument& document)
      : document_(document) {}

  bool HasSection(std::string_view section);

  std::string String(std::string_view section, std::string_view key);
  double Double(std::string_view section, std::string_view key);
  int64_t Int(std::string_view section, std::string_view key);
  bool Bool(std::string_view section, std::string_view key);
  Eigen::VectorXd Vector(std::string_view section, std::string_view key);
  std::vector<double> DoubleList(std::string_view section,
                                 std::string_view key);

  std::string String(std::string_view section, std::string_view key,
                     const std::string& fallback);
  double Double(std::string_view section, std::string_view key,
                double fallback);
  int64_t Int(std::string_view section, std::string_view key,
              int64_t fallback);
  bool Bool(std::string_view section, std::string_view key, bool fallback);
  std::vector<double> DoubleList(std::string_view section,
                                 std::string_view key,
                                 const std::vector<double>& fallback);

  void Finish() const;

 private:
  std::optional<std::string> Take(std::string_view section,
                                  std::string_view key);
  std::string Require(std::string_view section, std::string_view key);

  const KeyValueDocument& document_;
  std::set<std::pair<std::string, std::string>> used_;
  std::set<std::string> used_sections_;
};

}  // namespace forgetlab

#endif  // FORGETLAB_KV_DOCUMENT_H_
