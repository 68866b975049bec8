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

#include "lossguard/error.h"

#include <utility>

namespace lossguard {

IngestError::IngestError(Kind kind, std::string path, std::uint64_t offset,
                         const std::string& what)
    : std::runtime_error(path + " @" + std::to_string(offset) + ": " + what),
      kind_(kind),
      path_(std::move(path)),
      offset_(offset) {}

ConfigError::ConfigError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                  : what),
      line_(line) {}

}  // namespace lossguard
