// Copyright 2026 The speakaug Authors
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

#ifndef SPEAKAUG_COMMON_ERROR_H_
#define SPEAKAUG_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace speakaug {

// Bad caller input: out-of-range factor, malformed one-hot, shape mismatch.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file or data set failed validation. `offenders` lists every problem found
// (with line numbers where the input is line-addressable).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> offenders)
      : std::runtime_error(Join(offenders)), offenders_(std::move(offenders)) {}

  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  static std::string Join(const std::vector<std::string>& items) {
    std::string out = "validation failed:";
    for (const auto& s : items) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> offenders_;
};

// NaN/Inf produced or consumed by a numeric routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace speakaug

#endif  // SPEAKAUG_COMMON_ERROR_H_
