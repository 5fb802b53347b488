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

#include "forgetlab/kv_document.h"

#include <fstream>
#include <sstream>

#include "forgetlab/errors.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {
namespace {

std::string Trim(std::string_view text) {
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && (text[begin] == ' ' || text[begin] == '\t' ||
                         text[begin] == '\r')) {
    ++begin;
  }
  while (end > begin && (text[end - 1] == ' ' || text[end - 1] == '\t' ||
                         text[end - 1] == '\r')) {
    --end;
  }
  return std::string(text.substr(begin, end - begin));
}

std::string Where(std::string_view section, std::string_view key) {
  return "'" + std::string(key) + "' in section [" + std::string(section) +
         "]";
}

}  // namespace

KeyValueDocument KeyValueDocument::Parse(std::string_view text) {
  KeyValueDocument document;
  std::string current;
  std::istringstream stream{std::string(text)};
  std::string raw;
  int line_number = 0;
  while (std::getline(stream, raw)) {
    ++line_number;
    const size_t hash = raw.find('#');
    const std::string line =
        Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_number) +
                          ": malformed section header '" + line + "'");
      }
      current = Trim(line.substr(1, line.size() - 2));
      if (document.FindSection(current) != nullptr) {
        throw ConfigError("line " + std::to_string(line_number) +
                          ": duplicate section [" + current + "]");
      }
      document.GetOrAddSection(current);
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": empty key");
    }
    if (document.Find(current, key).has_value()) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": duplicate key " + Where(current, key));
    }
    document.Set(current, key, value);
  }
  return document;
}

KeyValueDocument KeyValueDocument::ParseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream content;
  content << in.rdbuf();
  return Parse(content.str());
}

std::string KeyValueDocument::Serialize() const {
  std::string out;
  for (const Section& section : sections_) {
    if (!section.name.empty()) {
      if (!out.empty()) out += '\n';
      out += "[" + section.name + "]\n";
    }
    for (const auto& [key, value] : section.entries) {
      out += key + " = " + value + "\n";
    }
  }
  return out;
}

void KeyValueDocument::Set(const std::string& section, const std::string& key,
                           std::string value) {
  Section& target = GetOrAddSection(section);
  for (auto& entry : target.entries) {
    if (entry.first == key) {
      entry.second = std::move(value);
      return;
    }
  }
  target.entries.emplace_back(key, std::move(value));
}

const KeyValueDocument::Section* KeyValueDocument::FindSection(
    std::string_view name) const {
  for (const Section& section : sections_) {
    if (section.name == name) return &section;
  }
  return nullptr;
}

std::optional<std::string> KeyValueDocument::Find(std::string_view section,
                                                  std::string_view key) const {
  const Section* found = FindSection(section);
  if (found == nullptr) return std::nullopt;
  for (const auto& entry : found->entries) {
    if (entry.first == key) return entry.second;
  }
  return std::nullopt;
}

KeyValueDocument::Section& KeyValueDocument::GetOrAddSection(
    const std::string& name) {
  for (Section& section : sections_) {
    if (section.name == name) return section;
  }
  sections_.push_back(Section{name, {}});
  return sections_.back();
}

bool KeyValueReader::HasSection(std::string_view section) {
  if (document_.FindSection(section) == nullptr) return false;
  used_sections_.insert(std::string(section));
  return true;
}

std::optional<std::string> KeyValueReader::Take(std::string_view section,
                                                std::string_view key) {
  used_sections_.insert(std::string(section));
  used_.emplace(std::string(section), std::string(key));
  return document_.Find(section, key);
}

std::string KeyValueReader::Require(std::string_view section,
                                    std::string_view key) {
  std::optional<std::string> value = Take(section, key);
  if (!value.has_value()) {
    throw ConfigError("missing required key " + Where(section, key));
  }
  return *value;
}

namespace {

template <typename Fn>
auto Typed(std::string_view section, std::string_view key,
           const std::string& raw, Fn parse) {
  try {
    return parse(raw);
  } catch (const ConfigError& e) {
    throw ConfigError("bad value for " + Where(section, key) + ": " +
                      e.what());
  }
}

}  // namespace

std::string KeyValueReader::String(std::string_view section,
                                   std::string_view key) {
  return Require(section, key);
}

double KeyValueReader::Double(std::string_view section, std::string_view key) {
  return Typed(section, key, Require(section, key),
               [](const std::string& s) { return ParseDouble(s); });
}

int64_t KeyValueReader::Int(std::string_view section, std::string_view key) {
  return Typed(section, key, Require(section, key),
               [](const std::string& s) { return ParseInt(s); });
}

bool KeyValueReader::Bool(std::string_view section, std::string_view key) {
  return Typed(section, key, Require(section, key),
               [](const std::string& s) { return ParseBool(s); });
}

Eigen::VectorXd KeyValueReader::Vector(std::string_view section,
                                       std::string_view key) {
  return Typed(section, key, Require(section, key),
               [](const std::string& s) { return ParseVector(s); });
}

std::vector<double> KeyValueReader::DoubleList(std::string_view section,
                                               std::string_view key) {
  return Typed(section, key, Require(section, key),
               [](const std::string& s) { return ParseDoubleList(s); });
}

std::string KeyValueReader::String(std::string_view section,
                                   std::string_view key,
                                   const std::string& fallback) {
  return Take(section, key).value_or(fallback);
}

double KeyValueReader::Double(std::string_view section, std::string_view key,
                              double fallback) {
  const std::optional<std::string> raw = Take(section, key);
  if (!raw.has_value()) return fallback;
  return Typed(section, key, *raw,
               [](const std::string& s) { return ParseDouble(s); });
}

int64_t KeyValueReader::Int(std::string_view section, std::string_view key,
                            int64_t fallback) {
  const std::optional<std::string> raw = Take(section, key);
  if (!raw.has_value()) return fallback;
  return Typed(section, key, *raw,
               [](const std::string& s) { return ParseInt(s); });
}

bool KeyValueReader::Bool(std::string_view section, std::string_view key,
                          bool fallback) {
  const std::optional<std::string> raw = Take(section, key);
  if (!raw.has_value()) return fallback;
  return Typed(section, key, *raw,
               [](const std::string& s) { return ParseBool(s); });
}

std::vector<double> KeyValueReader::DoubleList(
    std::string_view section, std::string_view key,
    const std::vector<double>& fallback) {
  const std::optional<std::string> raw = Take(section, key);
  if (!raw.has_value()) return fallback;
  return Typed(section, key, *raw,
               [](const std::string& s) { return ParseDoubleList(s); });
}

void KeyValueReader::Finish() const {
  for (const auto& section : document_.sections()) {
    if (!used_sections_.count(section.name)) {
      throw ConfigError("unknown section [" + section.name + "]");
    }
    for (const auto& entry : section.entries) {
      if (!used_.count({section.name, entry.first})) {
        throw ConfigError("unknown key " + Where(section.name, entry.first));
      }
    }
  }
}

}  // namespace forgetlab
