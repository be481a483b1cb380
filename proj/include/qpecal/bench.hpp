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

// Monte Carlo accuracy sweeps and shot-count scaling studies.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpecal/estimators.hpp"
#include "qpecal/protocol.hpp"
#include "qpecal/signal_model.hpp"

namespace qpecal {

enum class Protocol { Rpe, Brpe, Both };

std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view text);

struct SweepConfig {
  Protocol protocol = Protocol::Both;
  /// Physics being simulated.
  ModelFamily family = ModelFamily::Ideal;
  /// Likelihood family BRPE assumes (gate families only; RAMSEY always uses
  /// the RAMSEY likelihood).
  ModelFamily likelihood = ModelFamily::Ideal;
  NoiseConfig noise;
  /// Nominal target angle.
  double theta = kPi / 2;
  /// Offsets Delta_j = pi j / d for j = 0..d (gate families).
  int d = 40;
  int trials = 1000;
  int max_round = 11;
  /// M_k: one value for every round, or K+1 values.
  std::vector<std::uint64_t> shots = {8};
  double eps_th = 0.02;
  std::uint64_t base_seed = 1;
  double artificial_offset = 0.0;
  /// RAMSEY only: schedule parameters and the half-width of the swept
  /// detunings, delta_j = -span + 2 span j / d.
  double delta_max = 0.0;
  double beta = 0.0;
  double ramsey_span = 0.0;
  BrpeConfig brpe;
  /// Worker threads; 0 picks the hardware concurrency.
  int threads = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  Schedule schedule() const;
  std::vector<double> offsets() const;
  /// The parameter value simulated at offset Delta: theta + Delta, or Delta
  /// itself for RAMSEY.
  double truth(double offset) const;
  /// The estimate's offset from nominal: estimate - theta, or the estimate
  /// itself for RAMSEY.
  double deviation(double estimate) const;
  SignalModel simulation_model() const;
  SignalModel brpe_model() const;
  /// Estimator settings used by the sweep. Gate families default the grid to
  /// the swept range [theta, theta + pi], shifted down by the artificial
  /// offset; RAMSEY keeps the estimator's own default.
  BrpeConfig brpe_config() const;
  SignalModel rpe_model() const;
};

struct SweepRow {
  double delta = 0.0;
  int n_trials = 0;
  /// Mean of |estimated offset - offset| over successful trials.
  double mean_abs_err = 0.0;
  double std_err = 0.0;
  int failures = 0;
};

struct SweepResult {
  Protocol protocol = Protocol::Rpe;
  std::vector<SweepRow> rows;
  /// Mean of the per-offset means.
  double mean_abs_err = 0.0;
  std::uint64_t total_shots = 0;
  int failures = 0;
};

/// One result per protocol (RPE first). Both protocols see the same counts
/// in every trial; trial i at offset j draws from base_seed -> j -> i.
std::vector<SweepResult> run_sweep(const SweepConfig& config);

/// Largest offset whose mean error is below eps_th; nullopt if none.
/// Throws std::invalid_argument on an empty result.
std::optional<double> delta_threshold(const SweepResult& result, double eps_th);

struct ScalingConfig {
  /// Physics, estimator, rounds, seed and threads; d and trials are unused.
  SweepConfig base;
  double offset = 0.201;
  std::vector<std::uint64_t> shot_counts = {6, 7, 8, 9};
  int trials = 1000;
  int replicates = 5;

  void validate() const;
};

struct ScalingRow {
  Protocol protocol = Protocol::Rpe;
  std::uint64_t m_k = 0;
  /// sqrt(sum_r sigma_r^2) over replicate batches.
  double sigma_bar = 0.0;
  /// Standard error of the batch sigmas.
  double std_err = 0.0;
  std::vector<double> batch_sigmas;
  int failures = 0;
};

std::vector<ScalingRow> scaling_study(const ScalingConfig& config);

double aggregate_sigma(std::span<const double> batch_sigmas);

/// Approximate gate infidelity of an angle error: eps^2 / 8.
double fidelity_error(double eps);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Least-squares line through (log M_k, log sigma_bar) for one protocol's rows
/// with M_k >= min_shots. Diagnostic only.
LogLogFit fit_log_log(std::span<const ScalingRow> rows, Protocol protocol, std::uint64_t min_shots);

void write_sweep_csv(std::ostream& out, std::span<const SweepResult> results);
void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows);

}  // namespace qpecal
