// Copyright 2026 The qpecal Authors
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

// Command-line front end: config resolution and subcommand dispatch.

#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qpecal::cli {

enum class Subcommand { Sweep, Scaling, Estimate, Posterior, RamseySchedule };

std::string_view to_string(Subcommand subcommand);

/// Bad invocation or configuration. Exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot be processed. Exit status 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

struct CliConfig {
  Subcommand subcommand = Subcommand::Sweep;
  /// Every key the subcommand knows, with defaults applied and validated.
  nlohmann::json settings;
  /// Set when the invocation only asked for help; `help_text` holds it.
  bool help_only = false;
  std::string help_text;

  /// {"subcommand": ..., plus every setting}. Feeding this back through
  /// --config reproduces the same CliConfig.
  nlohmann::json echo() const;
  friend bool operator==(const CliConfig& a, const CliConfig& b) {
    return a.subcommand == b.subcommand && a.settings == b.settings;
  }
};

/// args excludes the program name: {subcommand, flags...}. Precedence is
/// flags, then the --config file, then QPECAL_SEED (seed only), then
/// defaults. Throws UsageError naming the offending field.
CliConfig parse_config(std::span<const std::string> args);

/// Same, with the config document supplied directly instead of via --config.
CliConfig parse_config(std::span<const std::string> args, const nlohmann::json& file);

/// Runs the subcommand. Output files are written atomically; `out` gets the
/// human-readable summary and `err` any diagnostics. Returns the exit status.
int dispatch(const CliConfig& config, std::ostream& out, std::ostream& err);

/// parse_config + dispatch with exit-status mapping.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace qpecal::cli
