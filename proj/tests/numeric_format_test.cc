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

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "forgetlab/errors.h"

namespace forgetlab {
namespace {

TEST(FormatDoubleTest, RoundTripsRandomDoublesBitwise) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<uint64_t> bits;
  int checked = 0;
  while (checked < 10000) {
    const uint64_t raw = bits(rng);
    double value;
    std::memcpy(&value, &raw, sizeof(value));
    if (!std::isfinite(value)) continue;
    const double back = ParseDouble(FormatDouble(value));
    EXPECT_EQ(std::memcmp(&value, &back, sizeof(value)), 0)
        << FormatDouble(value);
    ++checked;
  }
}

TEST(FormatDoubleTest, NonFiniteSpellings) {
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(FormatDouble(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_TRUE(std::isnan(ParseDouble("nan")));
  EXPECT_EQ(ParseDouble("-inf"), -std::numeric_limits<double>::infinity());
}

TEST(FormatDoubleTest, SeventeenSignificantDigits) {
  EXPECT_EQ(FormatDouble(0.1), "0.10000000000000001");
  EXPECT_EQ(FormatDouble(0.5), "0.5");
}

TEST(ParseTest, RejectsTrailingGarbage) {
  EXPECT_THROW(ParseDouble("1.5x"), ConfigError);
  EXPECT_THROW(ParseDouble(""), ConfigError);
  EXPECT_THROW(ParseInt("12.0"), ConfigError);
  EXPECT_THROW(ParseInt(""), ConfigError);
  EXPECT_THROW(ParseBool("yes"), ConfigError);
  EXPECT_EQ(ParseInt("-7"), -7);
  EXPECT_TRUE(ParseBool("true"));
  EXPECT_FALSE(ParseBool("0"));
}

TEST(ParseTest, ListsAcceptSpacesAndCommas) {
  const std::vector<double> values = ParseDoubleList("0.5, 1  2e-3");
  ASSERT_EQ(values.size(), 3u);
  EXPECT_EQ(values[2], 2e-3);
  EXPECT_TRUE(ParseDoubleList("   ").empty());
  const Eigen::VectorXd v = ParseVector("1 2 3");
  EXPECT_EQ(FormatVector(v), "1 2 3");
}

TEST(HashHexTest, MatchesPublishedFnv1aVectors) {
  EXPECT_EQ(HashHex(""), "cbf29ce484222325");
  EXPECT_EQ(HashHex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(HashHex("foobar"), "85944171f73967e8");
}

}  // namespace
}  // namespace forgetlab
