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

// Post-processing of round counts: the trigonometric RPE estimator and the
// grid-posterior BRPE engine.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpecal/protocol.hpp"
#include "qpecal/signal_model.hpp"

namespace qpecal {

/// Raised when every grid point is ruled out by the data.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Log-weights on the uniform grid x_i = lo + i (hi - lo) / (n - 1),
/// normalized so that sum_i exp(w_i) = 1. Individual weights may be -inf.
class PosteriorGrid {
 public:
  /// Log-weight differences below this are ties; ties go to the lowest index.
  static constexpr double kTieTolerance = 1e-8;

  static PosteriorGrid uniform(double lo, double hi, std::size_t n_points);
  /// Takes unnormalized log-weights and normalizes them. Throws
  /// EstimationError when no weight is finite.
  PosteriorGrid(double lo, double hi, std::vector<double> log_weights);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t size() const { return log_weights_.size(); }
  double spacing() const { return (hi_ - lo_) / static_cast<double>(size() - 1); }
  double point(std::size_t i) const { return lo_ + static_cast<double>(i) * spacing(); }
  std::span<const double> log_weights() const { return log_weights_; }

  std::vector<double> probabilities() const;
  std::size_t argmax() const;
  double entropy() const;

 private:
  double lo_;
  double hi_;
  std::vector<double> log_weights_;
};

PosteriorGrid init_prior(double lo, double hi, std::size_t n_points);

/// Folds one round (both sequences) into the posterior:
///   w += a log L_A + (M - a) log(1 - L_A) + b log L_B + (M - b) log(1 - L_B)
/// followed by renormalization. Zero counts contribute nothing, so a zero
/// likelihood only excludes a point when the matching count is positive.
PosteriorGrid brpe_round_update(const PosteriorGrid& posterior, const RoundRecord& round_a, const RoundRecord& round_b,
                                const SignalModel& model);

/// The same update as four successive normalized posteriors: after the ones
/// of A, the zeros of A, the ones of B, and the zeros of B. The last entry
/// equals brpe_round_update's result.
std::array<PosteriorGrid, 4> brpe_round_update_steps(const PosteriorGrid& posterior, const RoundRecord& round_a,
                                                     const RoundRecord& round_b, const SignalModel& model);

struct EstimateReport {
  std::string protocol;
  double estimate = 0.0;
  double confidence = 1.0;
  /// Posterior mass near the MAP point.
  double concentration = 1.0;
  /// Unweighted standard deviation of peak locations.
  double peak_spread = 0.0;
  std::vector<double> peaks;
  /// RPE: selected estimate per round. BRPE: posterior entropy (nats) per round.
  std::vector<double> per_round;
  std::uint64_t shots_used = 0;
};

/// Trigonometric estimator. Gate families estimate the rotation angle; a
/// RAMSEY model estimates the detuning in rad/s. A model's artificial offset
/// is subtracted from the result.
EstimateReport rpe_estimate(std::span<const RoundRecord> rounds, const SignalModel& model = SignalModel::ideal());

/// Principal angle of round k: atan2(2 P_b - 1, 1 - 2 P_a) in [0, 2 pi).
/// With exact IDEAL probabilities this is 2^k Theta mod 2 pi.
double rpe_round_angle(double p_a, double p_b);

struct BrpeConfig {
  /// Grid bounds; default [0, 2 pi] for gate families and
  /// [-delta_max, delta_max] (delta_max = 1 / base_wait) for RAMSEY.
  std::optional<double> lo;
  std::optional<double> hi;
  /// Default max(4096, 2^(K+4)).
  std::optional<std::size_t> n_points;
  /// Default 5x the final-round likelihood period.
  std::optional<double> sigma_max;
  /// Default one final-round likelihood period.
  std::optional<double> window;
  double peak_rel_height = 0.1;
  /// Record the per-round entropy trace (costs one normalization per round).
  bool record_trace = true;
};

struct ResolvedBrpeConfig {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_points = 0;
  double sigma_max = 0.0;
  double window = 0.0;
  double peak_rel_height = 0.1;
  bool record_trace = true;
};

/// Period, in parameter units, of the round-K likelihood.
double final_round_period(const SignalModel& model, int max_round);

ResolvedBrpeConfig resolve_brpe_config(const BrpeConfig& config, const SignalModel& model, int max_round);

/// Precomputes log-likelihood tables for rounds 0..K on the grid, so each
/// estimate costs four multiply-adds per grid point per round. Immutable
/// after construction and safe to share across threads.
class BrpeEngine {
 public:
  BrpeEngine(const SignalModel& model, int max_round, const BrpeConfig& config = {});

  const ResolvedBrpeConfig& config() const { return config_; }
  const SignalModel& model() const { return model_; }
  int max_round() const { return max_round_; }

  PosteriorGrid posterior(std::span<const RoundRecord> rounds) const;
  EstimateReport estimate(std::span<const RoundRecord> rounds) const;
  /// MAP estimate and diagnostics for an already computed posterior.
  EstimateReport summarize(const PosteriorGrid& posterior) const;

 private:
  struct RoundTable {
    std::vector<double> log_a1, log_a0, log_b1, log_b0;
  };
  void accumulate(std::vector<double>& log_weights, const RoundRecord& a, const RoundRecord& b) const;

  SignalModel model_;
  int max_round_;
  ResolvedBrpeConfig config_;
  std::vector<RoundTable> tables_;
};

struct BrpeResult {
  EstimateReport report;
  PosteriorGrid posterior;
};

EstimateReport brpe_estimate(std::span<const RoundRecord> rounds, const SignalModel& model,
                             const BrpeConfig& config = {});
BrpeResult brpe_run(std::span<const RoundRecord> rounds, const SignalModel& model, const BrpeConfig& config = {});

/// Strict local maxima (plateaus count once, at their center) whose mass is at
/// least rel_height times the global maximum, in ascending order. The global
/// maximum is always present; a grid that is one flat plateau yields only it.
std::vector<double> detect_peaks(const PosteriorGrid& posterior, double rel_height);

/// Mass within a window of the given width around the MAP point. Near a grid
/// edge the window slides inward so it keeps its full width.
double concentration_D(const PosteriorGrid& posterior, double window);

double peak_spread(std::span<const double> peaks);

/// Logistic confidence heuristic:
///   f = 3D/2 + (1/4) / (1 + exp((sigma - sigma_max) / 4) / 10)
///   C = 1 / (1 + exp(-5 (f - 3/4)))
double confidence_score(double concentration, double sigma, double sigma_max);

}  // namespace qpecal
