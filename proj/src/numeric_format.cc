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

#include "forgetlab/numeric_format.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "forgetlab/errors.h"

namespace forgetlab {

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string FormatVector(const Eigen::VectorXd& values) {
  std::string out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i > 0) out += ' ';
    out += FormatDouble(values(i));
  }
  return out;
}

double ParseDouble(std::string_view text) {
  const std::string token(text);
  if (token == "nan") return std::nan("");
  if (token == "inf") return HUGE_VAL;
  if (token == "-inf") return -HUGE_VAL;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      token.empty()) {
    throw ConfigError("not a real number: '" + token + "'");
  }
  return value;
}

int64_t ParseInt(std::string_view text) {
  int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

bool ParseBool(std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("not a boolean: '" + std::string(text) + "'");
}

std::vector<double> ParseDoubleList(std::string_view text) {
  std::vector<double> values;
  std::istringstream stream{std::string(text)};
  std::string token;
  while (stream >> token) {
    if (!token.empty() && token.back() == ',') token.pop_back();
    if (token.empty()) continue;
    values.push_back(ParseDouble(token));
  }
  return values;
}

Eigen::VectorXd ParseVector(std::string_view text) {
  const std::vector<double> values = ParseDoubleList(text);
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (size_t i = 0; i < values.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = values[i];
  }
  return out;
}

std::string HashHex(std::string_view bytes) {
  uint64_t hash = 14695981039346656037ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace forgetlab
