// Copyright 2026 The tollane Authors
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

namespace tollane {

enum class ErrorCode {
  InvalidArgument,
  CflViolation,
  StateCorruption,
  InvalidTargets,
  InconsistentObservation,
  Parse,
  Validation,
  Io,
};

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A link whose normalized free-flow or congestion speed exceeds one link per step.
class CflViolation : public Error {
 public:
  CflViolation(int link, double speed, double max_timestep_hours);
  int link() const noexcept { return link_; }
  double speed() const noexcept { return speed_; }
  double max_timestep_hours() const noexcept { return max_timestep_hours_; }

 private:
  int link_;
  double speed_;
  double max_timestep_hours_;
};

}  // namespace tollane
