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

#include "qpecal/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qpecal {

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum exp(w)); -inf when every weight is -inf.
double log_sum_exp(std::span<const double> w) {
  const double m = *std::max_element(w.begin(), w.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : w) s += std::exp(x - m);
  return m + std::log(s);
}

double entropy_of(std::span<const double> w) {
  const double z = log_sum_exp(w);
  double h = 0.0;
  for (double x : w) {
    if (x == kNegInf) continue;
    const double lp = x - z;
    h -= std::exp(lp) * lp;
  }
  return h;
}

void add_scaled(std::vector<double>& w, std::span<const double> table, std::uint64_t count) {
  if (count == 0) return;
  const double c = static_cast<double>(count);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += c * table[i];
}

// The count-weighted log-likelihood of one sequence at one point.
double sequence_log_likelihood(double p1, std::uint64_t ones, std::uint64_t shots) {
  double out = 0.0;
  if (ones > 0) out += static_cast<double>(ones) * std::log(p1);
  if (shots > ones) out += static_cast<double>(shots - ones) * std::log1p(-p1);
  return out;
}

void check_round_pair(const RoundRecord& a, const RoundRecord& b) {
  if (a.round != b.round) throw std::invalid_argument("round pair has mismatched round indices");
  if (a.sequence != Sequence::A || b.sequence != Sequence::B) {
    throw std::invalid_argument("round pair must be (sequence a, sequence b)");
  }
  if (a.ones > a.shots || b.ones > b.shots) throw std::invalid_argument("ones exceeds shots");
}

// Index of round k's A and B records in an arbitrary-order list.
std::vector<std::array<const RoundRecord*, 2>> index_rounds(std::span<const RoundRecord> rounds) {
  const int max_round = check_complete_rounds(rounds);
  std::vector<std::array<const RoundRecord*, 2>> out(static_cast<std::size_t>(max_round) + 1, {nullptr, nullptr});
  for (const auto& r : rounds) out[r.round][r.sequence == Sequence::A ? 0 : 1] = &r;
  return out;
}

std::uint64_t shots_in(std::span<const RoundRecord> rounds) {
  std::uint64_t total = 0;
  for (const auto& r : rounds) total += r.shots;
  return total;
}

}  // namespace

PosteriorGrid PosteriorGrid::uniform(double lo, double hi, std::size_t n_points) {
  return PosteriorGrid(lo, hi, std::vector<double>(n_points, 0.0));
}

PosteriorGrid::PosteriorGrid(double lo, double hi, std::vector<double> log_weights)
    : lo_(lo), hi_(hi), log_weights_(std::move(log_weights)) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw std::invalid_argument("posterior grid needs finite bounds with hi > lo");
  }
  if (log_weights_.size() < 2) throw std::invalid_argument("posterior grid needs at least 2 points");
  for (double w : log_weights_) {
    if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("posterior log-weights must be finite or -inf");
    }
  }
  const double z = log_sum_exp(log_weights_);
  if (z == kNegInf) throw EstimationError("inconsistent data/model: every grid point has zero likelihood");
  for (double& w : log_weights_) w -= z;
}

std::vector<double> PosteriorGrid::probabilities() const {
  std::vector<double> p(size());
  std::transform(log_weights_.begin(), log_weights_.end(), p.begin(), [](double w) { return std::exp(w); });
  return p;
}

std::size_t PosteriorGrid::argmax() const {
  const double m = *std::max_element(log_weights_.begin(), log_weights_.end());
  for (std::size_t i = 0; i < size(); ++i) {
    if (log_weights_[i] >= m - kTieTolerance) return i;
  }
  return 0;
}

double PosteriorGrid::entropy() const { return entropy_of(log_weights_); }

PosteriorGrid init_prior(double lo, double hi, std::size_t n_points) { return PosteriorGrid::uniform(lo, hi, n_points); }

PosteriorGrid brpe_round_update(const PosteriorGrid& posterior, const RoundRecord& round_a, const RoundRecord& round_b,
                                const SignalModel& model) {
  check_round_pair(round_a, round_b);
  model.validate();
  const auto spec_a = sequence_spec(model, round_a.round, Sequence::A);
  const auto spec_b = sequence_spec(model, round_b.round, Sequence::B);
  std::vector<double> w(posterior.log_weights().begin(), posterior.log_weights().end());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == kNegInf) continue;
    const double x = posterior.point(i);
    w[i] += sequence_log_likelihood(outcome_probability(model, x, spec_a), round_a.ones, round_a.shots) +
            sequence_log_likelihood(outcome_probability(model, x, spec_b), round_b.ones, round_b.shots);
  }
  return PosteriorGrid(posterior.lo(), posterior.hi(), std::move(w));
}

std::array<PosteriorGrid, 4> brpe_round_update_steps(const PosteriorGrid& posterior, const RoundRecord& round_a,
                                                     const RoundRecord& round_b, const SignalModel& model) {
  check_round_pair(round_a, round_b);
  model.validate();
  const auto spec_a = sequence_spec(model, round_a.round, Sequence::A);
  const auto spec_b = sequence_spec(model, round_b.round, Sequence::B);

  // Each step multiplies in one factor L(x)^count and renormalizes.
  auto step = [&](const PosteriorGrid& prior, const SequenceSpec& spec, bool outcome_one, std::uint64_t count) {
    std::vector<double> w(prior.log_weights().begin(), prior.log_weights().end());
    if (count > 0) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == kNegInf) continue;
        const double p1 = outcome_probability(model, prior.point(i), spec);
        w[i] += static_cast<double>(count) * (outcome_one ? std::log(p1) : std::log1p(-p1));
      }
    }
    return PosteriorGrid(prior.lo(), prior.hi(), std::move(w));
  };
  PosteriorGrid a1 = step(posterior, spec_a, true, round_a.ones);
  PosteriorGrid a0 = step(a1, spec_a, false, round_a.shots - round_a.ones);
  PosteriorGrid b1 = step(a0, spec_b, true, round_b.ones);
  PosteriorGrid b0 = step(b1, spec_b, false, round_b.shots - round_b.ones);
  return {std::move(a1), std::move(a0), std::move(b1), std::move(b0)};
}

double rpe_round_angle(double p_a, double p_b) {
  double phi = std::atan2(2.0 * p_b - 1.0, 1.0 - 2.0 * p_a);
  if (phi < 0.0) phi += kTwoPi;
  if (phi >= kTwoPi) phi -= kTwoPi;
  return phi;
}

EstimateReport rpe_estimate(std::span<const RoundRecord> rounds, const SignalModel& model) {
  model.validate();
  const auto by_round = index_rounds(rounds);
  EstimateReport report;
  report.protocol = "rpe";
  double previous = 0.0;
  for (std::size_t k = 0; k < by_round.size(); ++k) {
    const RoundRecord& a = *by_round[k][0];
    const RoundRecord& b = *by_round[k][1];
    if (a.shots == 0 || b.shots == 0) {
      throw std::invalid_argument("RPE needs shots > 0 in every round (round " + std::to_string(k) + ")");
    }
    const double pa = a.fraction();
    const double pb = b.fraction();
    double selected = 0.0;
    if (model.family == ModelFamily::Ramsey) {
      // Circuit phase delta*tau_k: 2P_a - 1 = cos, 2P_b - 1 = sin.
      const double tau = std::ldexp(model.base_wait, static_cast<int>(k));
      const double phi = std::atan2(2.0 * pb - 1.0, 2.0 * pa - 1.0);
      if (k == 0) {
        selected = phi / tau;
      } else {
        const double n = std::round((previous * tau - phi) / kTwoPi);
        selected = (phi + kTwoPi * n) / tau;
      }
    } else {
      const double reps = static_cast<double>(repetitions(static_cast<int>(k)));
      const double base = rpe_round_angle(pa, pb) / reps;
      if (k == 0) {
        selected = base;
      } else {
        // Candidates are spaced 2 pi / N apart, so the nearest one on the
        // line is also the nearest on the circle.
        const double n = std::round((previous - base) * reps / kTwoPi);
        selected = std::fmod(base + kTwoPi * n / reps, kTwoPi);
        if (selected < 0.0) selected += kTwoPi;
      }
    }
    previous = selected;
    report.per_round.push_back(selected - model.artificial_offset);
  }
  report.estimate = previous - model.artificial_offset;
  report.peaks = {report.estimate};
  report.shots_used = shots_in(rounds);
  return report;
}

double final_round_period(const SignalModel& model, int max_round) {
  if (model.family == ModelFamily::Ramsey) return kTwoPi / std::ldexp(model.base_wait, max_round);
  return kTwoPi / std::ldexp(1.0, max_round);
}

ResolvedBrpeConfig resolve_brpe_config(const BrpeConfig& config, const SignalModel& model, int max_round) {
  model.validate();
  if (max_round < 0) throw std::invalid_argument("max round must be non-negative");
  ResolvedBrpeConfig r;
  if (model.family == ModelFamily::Ramsey) {
    const double delta_max = 1.0 / model.base_wait;
    r.lo = config.lo.value_or(-delta_max);
    r.hi = config.hi.value_or(delta_max);
  } else {
    r.lo = config.lo.value_or(0.0);
    r.hi = config.hi.value_or(kTwoPi);
  }
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.hi > r.lo)) {
    throw std::invalid_argument("grid bounds need hi > lo");
  }
  const std::size_t fine = max_round + 4 < 40 ? (std::size_t{1} << (max_round + 4)) : (std::size_t{1} << 40);
  r.n_points = config.n_points.value_or(std::max<std::size_t>(4096, fine));
  if (r.n_points < 2) throw std::invalid_argument("grid needs at least 2 points");
  const double period = final_round_period(model, max_round);
  r.sigma_max = config.sigma_max.value_or(5.0 * period);
  r.window = config.window.value_or(period);
  if (!(r.sigma_max >= 0.0)) throw std::invalid_argument("sigma_max must be non-negative");
  if (!(r.window > 0.0)) throw std::invalid_argument("concentration window must be positive");
  r.peak_rel_height = config.peak_rel_height;
  if (!(r.peak_rel_height > 0.0 && r.peak_rel_height <= 1.0)) {
    throw std::invalid_argument("peak relative height must lie in (0, 1]");
  }
  r.record_trace = config.record_trace;
  return r;
}

BrpeEngine::BrpeEngine(const SignalModel& model, int max_round, const BrpeConfig& config)
    : model_(model), max_round_(max_round), config_(resolve_brpe_config(config, model, max_round)) {
  const PosteriorGrid grid = PosteriorGrid::uniform(config_.lo, config_.hi, config_.n_points);
  tables_.resize(static_cast<std::size_t>(max_round) + 1);
  for (int k = 0; k <= max_round; ++k) {
    RoundTable& t = tables_[k];
    const auto spec_a = sequence_spec(model_, k, Sequence::A);
    const auto spec_b = sequence_spec(model_, k, Sequence::B);
    for (auto* v : {&t.log_a1, &t.log_a0, &t.log_b1, &t.log_b0}) v->resize(config_.n_points);
    for (std::size_t i = 0; i < config_.n_points; ++i) {
      const double x = grid.point(i);
      const double pa = outcome_probability(model_, x, spec_a);
      const double pb = outcome_probability(model_, x, spec_b);
      t.log_a1[i] = std::log(pa);
      t.log_a0[i] = std::log1p(-pa);
      t.log_b1[i] = std::log(pb);
      t.log_b0[i] = std::log1p(-pb);
    }
  }
}

void BrpeEngine::accumulate(std::vector<double>& w, const RoundRecord& a, const RoundRecord& b) const {
  const RoundTable& t = tables_.at(a.round);
  add_scaled(w, t.log_a1, a.ones);
  add_scaled(w, t.log_a0, a.shots - a.ones);
  add_scaled(w, t.log_b1, b.ones);
  add_scaled(w, t.log_b0, b.shots - b.ones);
}

PosteriorGrid BrpeEngine::posterior(std::span<const RoundRecord> rounds) const {
  const auto by_round = index_rounds(rounds);
  if (by_round.size() > tables_.size()) throw std::invalid_argument("records extend past the engine's last round");
  std::vector<double> w(config_.n_points, 0.0);
  for (const auto& pair : by_round) accumulate(w, *pair[0], *pair[1]);
  return PosteriorGrid(config_.lo, config_.hi, std::move(w));
}

EstimateReport BrpeEngine::estimate(std::span<const RoundRecord> rounds) const {
  const auto by_round = index_rounds(rounds);
  if (by_round.size() > tables_.size()) throw std::invalid_argument("records extend past the engine's last round");
  std::vector<double> w(config_.n_points, 0.0);
  std::vector<double> trace;
  for (const auto& pair : by_round) {
    accumulate(w, *pair[0], *pair[1]);
    if (config_.record_trace) trace.push_back(entropy_of(w));
  }
  EstimateReport report = summarize(PosteriorGrid(config_.lo, config_.hi, std::move(w)));
  report.per_round = std::move(trace);
  report.shots_used = shots_in(rounds);
  return report;
}

EstimateReport BrpeEngine::summarize(const PosteriorGrid& posterior) const {
  EstimateReport report;
  report.protocol = "brpe";
  // The model already shifts every candidate by the artificial offset, so the
  // grid argmax is the estimate of the un-offset parameter.
  report.estimate = posterior.point(posterior.argmax());
  report.peaks = detect_peaks(posterior, config_.peak_rel_height);
  report.peak_spread = peak_spread(report.peaks);
  report.concentration = concentration_D(posterior, config_.window);
  report.confidence = confidence_score(report.concentration, report.peak_spread, config_.sigma_max);
  return report;
}

EstimateReport brpe_estimate(std::span<const RoundRecord> rounds, const SignalModel& model, const BrpeConfig& config) {
  return brpe_run(rounds, model, config).report;
}

BrpeResult brpe_run(std::span<const RoundRecord> rounds, const SignalModel& model, const BrpeConfig& config) {
  const int max_round = check_complete_rounds(rounds);
  BrpeEngine engine(model, max_round, config);
  EstimateReport report = engine.estimate(rounds);
  return {std::move(report), engine.posterior(rounds)};
}

std::vector<double> detect_peaks(const PosteriorGrid& posterior, double rel_height) {
  if (!(rel_height > 0.0 && rel_height <= 1.0)) throw std::invalid_argument("rel_height must lie in (0, 1]");
  const auto w = posterior.log_weights();
  const std::size_t n = w.size();
  const std::size_t g = posterior.argmax();
  const double floor = w[g] + std::log(rel_height);

  std::vector<std::size_t> found;
  bool have_global = false;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && w[j + 1] == w[i]) ++j;
    const bool whole_grid = i == 0 && j == n - 1;
    const bool left_lower = i == 0 || w[i - 1] < w[i];
    const bool right_lower = j == n - 1 || w[j + 1] < w[j];
    if (!whole_grid && left_lower && right_lower && w[i] >= floor && w[i] != kNegInf) {
      if (g >= i && g <= j) {
        found.push_back(g);
        have_global = true;
      } else {
        found.push_back(i + (j - i) / 2);
      }
    }
    i = j + 1;
  }
  if (!have_global) found.push_back(g);
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  std::vector<double> out;
  out.reserve(found.size());
  for (auto idx : found) out.push_back(posterior.point(idx));
  return out;
}

double concentration_D(const PosteriorGrid& posterior, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
  const double center = posterior.point(posterior.argmax());
  double left = center - 0.5 * window;
  double right = center + 0.5 * window;
  if (left < posterior.lo()) {
    right = std::min(posterior.hi(), right + (posterior.lo() - left));
    left = posterior.lo();
  } else if (right > posterior.hi()) {
    left = std::max(posterior.lo(), left - (right - posterior.hi()));
    right = posterior.hi();
  }
  // Slack for round-off in the grid coordinates.
  const double slack = 1e-9 * posterior.spacing();
  double mass = 0.0;
  const auto w = posterior.log_weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = posterior.point(i);
    if (x >= left - slack && x <= right + slack) mass += std::exp(w[i]);
  }
  return std::clamp(mass, 0.0, 1.0);
}

double peak_spread(std::span<const double> peaks) {
  if (peaks.size() < 2) return 0.0;
  const double mean = std::accumulate(peaks.begin(), peaks.end(), 0.0) / static_cast<double>(peaks.size());
  double ss = 0.0;
  for (double p : peaks) ss += (p - mean) * (p - mean);
  return std::sqrt(ss / static_cast<double>(peaks.size()));
}

double confidence_score(double concentration, double sigma, double sigma_max) {
  // exp overflow saturates to +inf, which drives each logistic to its limit.
  const double spread_term = 0.25 / (1.0 + 0.1 * std::exp((sigma - sigma_max) / 4.0));
  const double f = 1.5 * concentration + spread_term;
  return std::clamp(1.0 / (1.0 + std::exp(-5.0 * (f - 0.75))), 0.0, 1.0);
}

}  // namespace qpecal
