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

#ifndef FORGETLAB_NUMERIC_FORMAT_H_
#define FORGETLAB_NUMERIC_FORMAT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace forgetlab {

// Decimal rendering with 17 significant digits, enough to round-trip any
// IEEE double exactly. Non-finite values render as "nan", "inf", "-inf".
std::string FormatDouble(double value);

// Space-separated FormatDouble of every entry.
std::string FormatVector(const Eigen::VectorXd& values);

// Strict parsers: the whole token must be consumed. Throw ConfigError.
double ParseDouble(std::string_view text);
int64_t ParseInt(std::string_view text);
bool ParseBool(std::string_view text);
Eigen::VectorXd ParseVector(std::string_view text);
std::vector<double> ParseDoubleList(std::string_view text);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string HashHex(std::string_view bytes);

}  // namespace forgetlab

#endif  // FORGETLAB_NUMERIC_FORMAT_H_
