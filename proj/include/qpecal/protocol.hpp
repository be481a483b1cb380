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

// Experiment schedules, backends that turn them into counts, and replay of
// recorded counts.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpecal/random_source.hpp"
#include "qpecal/signal_model.hpp"

namespace qpecal {

enum class ScheduleKind { Gate, Ramsey };

struct Schedule {
  ScheduleKind kind = ScheduleKind::Gate;
  int max_round = 0;
  /// M_k, one entry per round 0..max_round.
  std::vector<std::uint64_t> shots;
  /// Circuit wait times tau_k in seconds (RAMSEY only). tau_k = 2^k / delta_max.
  std::vector<double> wait_times;
  /// rad/s (RAMSEY only).
  double delta_max = 0.0;

  int round_count() const { return max_round + 1; }
  /// Shots consumed by executing the schedule once: sum_k 2 M_k.
  std::uint64_t total_shots() const;
  /// Conventional Ramsey wait time t_k = 2^(k-1) / delta_max, half of tau_k.
  double ramsey_wait(int round) const;
  /// A model matching this schedule's wait times (RAMSEY only).
  SignalModel ramsey_model(double artificial_offset = 0.0) const;
};

Schedule build_gate_schedule(int max_round, std::uint64_t shots);
Schedule build_gate_schedule(int max_round, std::span<const std::uint64_t> shots_per_round);
/// K = floor(log2(2 delta_max beta)). Throws std::invalid_argument when
/// 2 delta_max beta < 1.
Schedule build_ramsey_schedule(double delta_max, double beta, std::uint64_t shots);

struct RoundRecord {
  int round = 0;
  Sequence sequence = Sequence::A;
  std::uint64_t shots = 0;
  std::uint64_t ones = 0;

  double fraction() const { return shots == 0 ? 0.0 : static_cast<double>(ones) / static_cast<double>(shots); }
  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// Something that runs one sequence for a number of shots and reports how
/// many came out as |1>.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual bool supports(ScheduleKind kind) const = 0;
  /// The model whose SequenceSpec convention the backend expects.
  virtual const SignalModel& model() const = 0;
  virtual std::uint64_t run(const SequenceSpec& spec, std::uint64_t shots, RandomSource& rng) const = 0;
};

/// Density-matrix simulator. Born probabilities are computed once per
/// (round, sequence) and cached, so run() is pure and safe to share across
/// threads once constructed.
class SimulatorBackend final : public Backend {
 public:
  /// `true_parameter` is the gate angle Theta (gate families) or the detuning
  /// delta in rad/s (RAMSEY). Probabilities are cached for rounds 0..max_round.
  SimulatorBackend(SignalModel model, double true_parameter, NoiseConfig noise, int max_round);

  bool supports(ScheduleKind kind) const override;
  const SignalModel& model() const override { return model_; }
  std::uint64_t run(const SequenceSpec& spec, std::uint64_t shots, RandomSource& rng) const override;

  double probability(int round, Sequence sequence) const;

 private:
  SignalModel model_;
  NoiseConfig noise_;
  std::vector<double> p_a_;
  std::vector<double> p_b_;
};

/// Runs both sequences of every round. Record order is (k, A), (k, B) for
/// k = 0..K; each sequence draws from rng.derive(2k + s).
std::vector<RoundRecord> execute(const Schedule& schedule, const Backend& backend, const RandomSource& rng);

/// Counts with ones = round(M * p) from the model's closed form. Used for
/// exact-data checks.
std::vector<RoundRecord> analytic_records(const Schedule& schedule, const SignalModel& model, double true_parameter);

class ReplayError : public std::runtime_error {
 public:
  ReplayError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Parses `k,sequence,shots,ones` CSV. Rows are validated and returned sorted
/// by (k, sequence); every round 0..K must carry both sequences exactly once.
std::vector<RoundRecord> parse_replay(std::istream& in, const std::string& source = "<stream>");
std::vector<RoundRecord> load_replay(const std::filesystem::path& path);
/// Canonical form: header plus one row per record in (k, sequence) order.
void write_replay(std::ostream& out, std::span<const RoundRecord> records);

/// Highest round index, after checking every round 0..K has A and B.
/// Throws std::invalid_argument naming the first missing piece.
int check_complete_rounds(std::span<const RoundRecord> records);

}  // namespace qpecal
