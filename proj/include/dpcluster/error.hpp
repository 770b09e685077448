// Copyright 2026 The Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace dpcluster {

/// Invalid argument or violated precondition.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or inconsistent input file. The message names the offending
/// record.
class IngestError : public InputError {
 public:
  explicit IngestError(const std::string& what) : InputError(what) {}
};

/// The request is well formed but exceeds a configured guard (brute-force
/// enumeration size, audit outcome space).
class RefusalError : public std::runtime_error {
 public:
  explicit RefusalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& message) {
  if (!cond) throw InputError(message);
}

}  // namespace detail
}  // namespace dpcluster
