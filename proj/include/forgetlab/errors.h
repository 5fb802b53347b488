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

#ifndef FORGETLAB_ERRORS_H_
#define FORGETLAB_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace forgetlab {

// Malformed or inconsistent user input: config files, spectra, plans.
// The CLI maps this to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A theorem check was requested with parameters outside the range where
// the stated bound is meaningful.
class PreconditionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Training produced a non-finite parameter. The CLI maps this to exit
// status 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int64_t step)
      : std::runtime_error(what), step_(step) {}

  // Step counter of the state that first contained a non-finite entry.
  int64_t step() const { return step_; }

 private:
  int64_t step_;
};

}  // namespace forgetlab

#endif  // FORGETLAB_ERRORS_H_
