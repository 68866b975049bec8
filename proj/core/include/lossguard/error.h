// Copyright 2026 The lossguard Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LOSSGUARD_ERROR_H_
#define LOSSGUARD_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lossguard {

// Raised when a caller breaks an operation's documented precondition
// (shape mismatch, out-of-range label, bad fraction, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised while reading IDX files. Carries the file and byte offset at which
// the problem was detected.
class IngestError : public std::runtime_error {
 public:
  enum class Kind { kOpen, kBadMagic, kTruncated, kCountMismatch };

  IngestError(Kind kind, std::string path, std::uint64_t offset,
              const std::string& what);

  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }
  std::uint64_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::string path_;
  std::uint64_t offset_;
};

// Raised by the experiment config parser. `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// Throws ContractViolation with `message` unless `condition` holds.
inline void Require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace lossguard

#endif  // LOSSGUARD_ERROR_H_
