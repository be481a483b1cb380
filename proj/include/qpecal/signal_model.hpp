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

// Closed-form outcome probabilities and the explicit circuits they are
// derived from.
//
// All probabilities are P(measure |1>). With Theta the applied gate angle and
// N = 2^k repetitions:
//
//   IDEAL   A: (1 - cos(N Theta)) / 2          B: (1 + sin(N Theta)) / 2
//   CSPAM   A: (1 - cos(N Theta)) / 2          B: sin^2((N + pi/(2 theta)) Theta / 2)
//   RAMSEY  A: cos^2(delta tau / 2)            B: (1 + sin(delta tau)) / 2
//
// For CSPAM with the usual theta = pi/2 the B form is sin^2((N + 1) Theta / 2).

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace qpecal {

inline constexpr double kPi = 3.14159265358979323846;

enum class ModelFamily { Ideal, Cspam, Ramsey };
enum class Sequence { A, B };

std::string_view to_string(ModelFamily family);
std::string_view to_string(Sequence sequence);
/// Accepts "ideal", "cspam", "ramsey" (case-insensitive).
ModelFamily parse_model_family(std::string_view text);
/// Accepts "a"/"b" (case-insensitive).
Sequence parse_sequence(std::string_view text);

/// Number of gate applications in round k.
long long repetitions(int round);

struct SignalModel {
  ModelFamily family = ModelFamily::Ideal;
  /// Nominal target angle theta (gate families).
  double nominal_angle = kPi / 2;
  /// Offset added to every candidate, and physically applied by the circuit.
  double artificial_offset = 0.0;
  /// Wait time of round 0 in seconds (RAMSEY); round k waits base_wait * 2^k.
  double base_wait = 0.0;

  static SignalModel ideal(double theta = kPi / 2, double offset = 0.0);
  static SignalModel cspam(double theta = kPi / 2, double offset = 0.0);
  static SignalModel ramsey(double base_wait, double offset = 0.0);

  bool is_gate_family() const { return family != ModelFamily::Ramsey; }
  /// Throws std::invalid_argument when a family constraint is broken.
  void validate() const;
};

struct SequenceSpec {
  int round = 0;
  Sequence sequence = Sequence::A;
  /// Present iff the model family is RAMSEY.
  std::optional<double> wait_time;
};

/// The sequence spec the model expects for (round, sequence).
SequenceSpec sequence_spec(const SignalModel& model, int round, Sequence sequence);

/// Closed-form P(1) at a candidate parameter (angle, or detuning in rad/s).
/// Throws std::invalid_argument on a family/spec mismatch.
double outcome_probability(const SignalModel& model, double candidate, const SequenceSpec& spec);

/// Where the depolarizing channel acts in a gate sequence: after every
/// application of U, or once after the whole U^N block.
enum class DepolarizingPlacement { PerGate, PerSequence };

std::string_view to_string(DepolarizingPlacement placement);
DepolarizingPlacement parse_depolarizing_placement(std::string_view text);

struct NoiseConfig {
  double depolarizing = 0.0;
  /// Binary-symmetric readout crossover; applied at sampling, not here.
  double readout_flip = 0.0;
  DepolarizingPlacement placement = DepolarizingPlacement::PerGate;

  void validate() const;
  bool is_noiseless() const { return depolarizing == 0.0 && readout_flip == 0.0; }
};

/// P(1) from building the circuit on a density matrix. Without depolarizing
/// noise this agrees with outcome_probability to round-off.
double circuit_probability(const SignalModel& model, double true_parameter, const SequenceSpec& spec,
                           const NoiseConfig& noise = {});

}  // namespace qpecal
