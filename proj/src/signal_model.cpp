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

#include "qpecal/signal_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qpecal/qubit.hpp"

namespace qpecal {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void check_spec(const SignalModel& model, const SequenceSpec& spec) {
  if (spec.round < 0 || spec.round > 62) throw std::invalid_argument("round index out of range");
  if (model.family == ModelFamily::Ramsey) {
    if (!spec.wait_time) throw std::invalid_argument("RAMSEY model requires a wait time");
    if (!std::isfinite(*spec.wait_time) || *spec.wait_time < 0.0) {
      throw std::invalid_argument("wait time must be finite and non-negative");
    }
  } else if (spec.wait_time) {
    throw std::invalid_argument("gate-family model does not take a wait time");
  }
}

}  // namespace

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Ideal:
      return "ideal";
    case ModelFamily::Cspam:
      return "cspam";
    case ModelFamily::Ramsey:
      return "ramsey";
  }
  return "?";
}

std::string_view to_string(Sequence sequence) { return sequence == Sequence::A ? "a" : "b"; }

ModelFamily parse_model_family(std::string_view text) {
  const std::string t = lower(text);
  if (t == "ideal") return ModelFamily::Ideal;
  if (t == "cspam") return ModelFamily::Cspam;
  if (t == "ramsey") return ModelFamily::Ramsey;
  throw std::invalid_argument("unknown model family '" + std::string(text) + "' (expected ideal, cspam or ramsey)");
}

Sequence parse_sequence(std::string_view text) {
  const std::string t = lower(text);
  if (t == "a") return Sequence::A;
  if (t == "b") return Sequence::B;
  throw std::invalid_argument("unknown sequence '" + std::string(text) + "' (expected a or b)");
}

long long repetitions(int round) {
  if (round < 0 || round > 62) throw std::invalid_argument("round index out of range");
  return 1LL << round;
}

SignalModel SignalModel::ideal(double theta, double offset) {
  return {ModelFamily::Ideal, theta, offset, 0.0};
}

SignalModel SignalModel::cspam(double theta, double offset) {
  return {ModelFamily::Cspam, theta, offset, 0.0};
}

SignalModel SignalModel::ramsey(double base_wait, double offset) {
  return {ModelFamily::Ramsey, 0.0, offset, base_wait};
}

void SignalModel::validate() const {
  if (!std::isfinite(artificial_offset)) throw std::invalid_argument("artificial offset must be finite");
  if (family == ModelFamily::Ramsey) {
    if (!(base_wait > 0.0) || !std::isfinite(base_wait)) {
      throw std::invalid_argument("RAMSEY model needs a positive base wait time");
    }
    return;
  }
  if (!std::isfinite(nominal_angle)) throw std::invalid_argument("nominal angle must be finite");
  if (family == ModelFamily::Cspam && !(nominal_angle > 0.0)) {
    throw std::invalid_argument("CSPAM model needs a positive nominal angle");
  }
}

SequenceSpec sequence_spec(const SignalModel& model, int round, Sequence sequence) {
  SequenceSpec spec{round, sequence, std::nullopt};
  if (model.family == ModelFamily::Ramsey) spec.wait_time = std::ldexp(model.base_wait, round);
  return spec;
}

double outcome_probability(const SignalModel& model, double candidate, const SequenceSpec& spec) {
  check_spec(model, spec);
  const double x = candidate + model.artificial_offset;
  double p = 0.0;
  if (model.family == ModelFamily::Ramsey) {
    const double phase = x * *spec.wait_time;
    if (spec.sequence == Sequence::A) {
      const double c = std::cos(phase / 2.0);
      p = c * c;
    } else {
      p = 0.5 * (1.0 + std::sin(phase));
    }
  } else {
    const double n = static_cast<double>(repetitions(spec.round));
    if (spec.sequence == Sequence::A) {
      p = 0.5 * (1.0 - std::cos(n * x));
    } else if (model.family == ModelFamily::Ideal) {
      p = 0.5 * (1.0 + std::sin(n * x));
    } else {
      // Preparation pulse pi/2 scaled by the same Rabi-rate error as the gate.
      const double s = std::sin(0.5 * (n * x + 0.5 * kPi * x / model.nominal_angle));
      p = s * s;
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

std::string_view to_string(DepolarizingPlacement placement) {
  return placement == DepolarizingPlacement::PerGate ? "per_gate" : "per_sequence";
}

DepolarizingPlacement parse_depolarizing_placement(std::string_view text) {
  if (text == "per_gate") return DepolarizingPlacement::PerGate;
  if (text == "per_sequence") return DepolarizingPlacement::PerSequence;
  throw std::invalid_argument("unknown depolarizing placement '" + std::string(text) +
                              "' (expected per_gate or per_sequence)");
}

void NoiseConfig::validate() const {
  if (!(depolarizing >= 0.0 && depolarizing <= 1.0)) throw std::invalid_argument("depolarizing p must lie in [0, 1]");
  if (!(readout_flip >= 0.0 && readout_flip <= 1.0)) throw std::invalid_argument("readout flip p must lie in [0, 1]");
}

double circuit_probability(const SignalModel& model, double true_parameter, const SequenceSpec& spec,
                           const NoiseConfig& noise) {
  check_spec(model, spec);
  noise.validate();
  const double x = true_parameter + model.artificial_offset;
  DensityMatrix rho = DensityMatrix::ground();

  if (model.family == ModelFamily::Ramsey) {
    rho = evolve(rho, rotation_unitary(Axis::X, kPi / 2));
    rho = evolve(rho, rotation_unitary(Axis::Z, x * *spec.wait_time));
    // One depolarizing step stands in for decoherence over the wait.
    rho = depolarize(rho, noise.depolarizing);
    const Axis second = spec.sequence == Sequence::A ? Axis::X : Axis::Y;
    rho = evolve(rho, rotation_unitary(second, kPi / 2));
    return probability_one(rho);
  }

  if (spec.sequence == Sequence::B) {
    const double scale = model.family == ModelFamily::Cspam ? x / model.nominal_angle : 1.0;
    rho = evolve(rho, rotation_unitary(Axis::X, 0.5 * kPi * scale));
  }
  const Mat2 gate = rotation_unitary(Axis::X, x);
  const long long n = repetitions(spec.round);
  const bool per_gate = noise.placement == DepolarizingPlacement::PerGate;
  for (long long i = 0; i < n; ++i) {
    rho = evolve(rho, gate);
    if (per_gate) rho = depolarize(rho, noise.depolarizing);
  }
  if (!per_gate) rho = depolarize(rho, noise.depolarizing);
  return probability_one(rho);
}

}  // namespace qpecal
