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

#include "qpecal/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "qpecal/format.hpp"

namespace qpecal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any call is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
  int failures = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n > 0 ? sum / n : kNaN; }
  double sample_std() const {
    if (n < 2) return 0.0;
    const double m = sum / n;
    return std::sqrt(std::max(0.0, (sum_sq - n * m * m) / (n - 1)));
  }
};

bool wants(Protocol configured, Protocol p) { return configured == Protocol::Both || configured == p; }

std::vector<Protocol> protocols_of(Protocol p) {
  if (p == Protocol::Both) return {Protocol::Rpe, Protocol::Brpe};
  return {p};
}

// Both estimators applied to one set of counts. Failures come back empty.
struct TrialEstimates {
  std::optional<double> rpe;
  std::optional<double> brpe;
};

TrialEstimates estimate_trial(const SweepConfig& config, const BrpeEngine* engine, const SignalModel& rpe_model,
                              std::span<const RoundRecord> records) {
  TrialEstimates out;
  if (wants(config.protocol, Protocol::Rpe)) {
    try {
      out.rpe = rpe_estimate(records, rpe_model).estimate;
    } catch (const std::exception&) {
    }
  }
  if (wants(config.protocol, Protocol::Brpe)) {
    try {
      out.brpe = engine->estimate(records).estimate;
    } catch (const std::exception&) {
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::Rpe:
      return "rpe";
    case Protocol::Brpe:
      return "brpe";
    case Protocol::Both:
      return "both";
  }
  return "?";
}

Protocol parse_protocol(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "rpe") return Protocol::Rpe;
  if (t == "brpe") return Protocol::Brpe;
  if (t == "both") return Protocol::Both;
  throw std::invalid_argument("unknown protocol '" + std::string(text) + "' (expected rpe, brpe or both)");
}

void SweepConfig::validate() const {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (max_round < 0 || max_round > 30) throw std::invalid_argument("rounds must lie in [0, 30]");
  if (shots.size() != 1 && shots.size() != static_cast<std::size_t>(max_round) + 1) {
    throw std::invalid_argument("shots must hold one value or K+1 values");
  }
  if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
  if (!std::isfinite(eps_th) || eps_th < 0.0) throw std::invalid_argument("eps_th must be non-negative");
  if (!std::isfinite(artificial_offset)) throw std::invalid_argument("artificial_offset must be finite");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  noise.validate();
  if (family == ModelFamily::Ramsey) {
    if (likelihood != ModelFamily::Ramsey) throw std::invalid_argument("RAMSEY sweeps need the ramsey likelihood");
    if (!(ramsey_span >= 0.0) || !std::isfinite(ramsey_span)) throw std::invalid_argument("ramsey_span must be >= 0");
    schedule();
  } else if (likelihood == ModelFamily::Ramsey) {
    throw std::invalid_argument("gate sweeps cannot use the ramsey likelihood");
  }
  simulation_model().validate();
  brpe_model().validate();
}

Schedule SweepConfig::schedule() const {
  if (family == ModelFamily::Ramsey) {
    Schedule s = build_ramsey_schedule(delta_max, beta, shots.at(0));
    if (s.max_round != max_round) {
      throw std::invalid_argument("rounds (" + std::to_string(max_round) + ") disagrees with the Ramsey schedule's K=" +
                                  std::to_string(s.max_round));
    }
    if (shots.size() > 1) s.shots = shots;
    return s;
  }
  if (shots.size() == 1) return build_gate_schedule(max_round, shots[0]);
  return build_gate_schedule(max_round, std::span<const std::uint64_t>(shots));
}

std::vector<double> SweepConfig::offsets() const {
  std::vector<double> out;
  for (int j = 0; j <= d; ++j) {
    if (family == ModelFamily::Ramsey) {
      out.push_back(-ramsey_span + 2.0 * ramsey_span * j / d);
    } else {
      out.push_back(kPi * j / d);
    }
  }
  return out;
}

double SweepConfig::truth(double offset) const { return family == ModelFamily::Ramsey ? offset : theta + offset; }

double SweepConfig::deviation(double estimate) const {
  return family == ModelFamily::Ramsey ? estimate : estimate - theta;
}

SignalModel SweepConfig::simulation_model() const {
  if (family == ModelFamily::Ramsey) return SignalModel::ramsey(1.0 / delta_max, artificial_offset);
  return {family, theta, artificial_offset, 0.0};
}

SignalModel SweepConfig::brpe_model() const {
  if (family == ModelFamily::Ramsey) return SignalModel::ramsey(1.0 / delta_max, artificial_offset);
  return {likelihood, theta, artificial_offset, 0.0};
}

BrpeConfig SweepConfig::brpe_config() const {
  BrpeConfig c = brpe;
  c.record_trace = false;
  if (family != ModelFamily::Ramsey) {
    // Prior over the swept overrotations, shifted by the artificial offset
    // so that the applied rotation stays inside it.
    if (!c.lo) c.lo = theta - artificial_offset;
    if (!c.hi) c.hi = theta + kPi - artificial_offset;
  }
  return c;
}

SignalModel SweepConfig::rpe_model() const {
  if (family == ModelFamily::Ramsey) return SignalModel::ramsey(1.0 / delta_max, artificial_offset);
  return SignalModel::ideal(theta, artificial_offset);
}

std::vector<SweepResult> run_sweep(const SweepConfig& config) {
  config.validate();
  const Schedule schedule = config.schedule();
  const std::vector<double> offsets = config.offsets();
  const SignalModel sim_model = config.simulation_model();
  const SignalModel rpe_model = config.rpe_model();
  std::optional<BrpeEngine> engine;
  if (wants(config.protocol, Protocol::Brpe)) {
    engine.emplace(config.brpe_model(), schedule.max_round, config.brpe_config());
  }
  const RandomSource base(config.base_seed);

  std::vector<Moments> rpe_cells(offsets.size());
  std::vector<Moments> brpe_cells(offsets.size());
  parallel_for(offsets.size(), config.threads, [&](std::size_t j) {
    const double offset = offsets[j];
    const SimulatorBackend backend(sim_model, config.truth(offset), config.noise, schedule.max_round);
    const RandomSource cell = base.derive(static_cast<std::uint64_t>(j));
    for (int i = 0; i < config.trials; ++i) {
      const auto records = execute(schedule, backend, cell.derive(static_cast<std::uint64_t>(i)));
      const TrialEstimates est = estimate_trial(config, engine ? &*engine : nullptr, rpe_model, records);
      if (wants(config.protocol, Protocol::Rpe)) {
        if (est.rpe) {
          rpe_cells[j].add(std::abs(config.deviation(*est.rpe) - offset));
        } else {
          ++rpe_cells[j].failures;
        }
      }
      if (wants(config.protocol, Protocol::Brpe)) {
        if (est.brpe) {
          brpe_cells[j].add(std::abs(config.deviation(*est.brpe) - offset));
        } else {
          ++brpe_cells[j].failures;
        }
      }
    }
  });

  std::vector<SweepResult> results;
  for (Protocol p : protocols_of(config.protocol)) {
    const auto& cells = p == Protocol::Rpe ? rpe_cells : brpe_cells;
    SweepResult r;
    r.protocol = p;
    double sum = 0.0;
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      const Moments& m = cells[j];
      SweepRow row;
      row.delta = offsets[j];
      row.n_trials = config.trials;
      row.mean_abs_err = m.mean();
      row.std_err = m.n > 0 ? m.sample_std() / std::sqrt(static_cast<double>(m.n)) : kNaN;
      row.failures = m.failures;
      r.failures += m.failures;
      sum += row.mean_abs_err;
      r.rows.push_back(row);
    }
    r.mean_abs_err = sum / static_cast<double>(offsets.size());
    r.total_shots = static_cast<std::uint64_t>(offsets.size()) * static_cast<std::uint64_t>(config.trials) *
                    schedule.total_shots();
    results.push_back(std::move(r));
  }
  return results;
}

std::optional<double> delta_threshold(const SweepResult& result, double eps_th) {
  if (result.rows.empty()) throw std::invalid_argument("delta_threshold: empty sweep result");
  std::optional<double> best;
  for (const auto& row : result.rows) {
    if (row.mean_abs_err < eps_th && (!best || row.delta > *best)) best = row.delta;
  }
  return best;
}

void ScalingConfig::validate() const {
  if (trials < 2) throw std::invalid_argument("scaling trials must be >= 2");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (shot_counts.empty()) throw std::invalid_argument("shot_counts must not be empty");
  if (!std::isfinite(offset)) throw std::invalid_argument("offset must be finite");
  SweepConfig probe = base;
  probe.shots = {1};
  probe.validate();
}

std::vector<ScalingRow> scaling_study(const ScalingConfig& config) {
  config.validate();
  const SweepConfig& base_config = config.base;
  const SignalModel sim_model = base_config.simulation_model();
  const SignalModel rpe_model = base_config.rpe_model();
  const int max_round = base_config.max_round;
  std::optional<BrpeEngine> engine;
  if (wants(base_config.protocol, Protocol::Brpe)) {
    engine.emplace(base_config.brpe_model(), max_round, base_config.brpe_config());
  }
  const SimulatorBackend backend(sim_model, base_config.truth(config.offset), base_config.noise, max_round);
  const RandomSource base = RandomSource(base_config.base_seed).derive("scaling");

  const std::size_t n_m = config.shot_counts.size();
  const std::size_t n_r = static_cast<std::size_t>(config.replicates);
  // Per (M_k, replicate) batch: moments of the estimated offsets.
  std::vector<Moments> rpe_batches(n_m * n_r);
  std::vector<Moments> brpe_batches(n_m * n_r);
  parallel_for(n_m * n_r, base_config.threads, [&](std::size_t cell) {
    const std::size_t mi = cell / n_r;
    const std::size_t r = cell % n_r;
    SweepConfig c = base_config;
    c.shots = {config.shot_counts[mi]};
    const Schedule schedule = c.schedule();
    const RandomSource batch = base.derive(config.shot_counts[mi]).derive(static_cast<std::uint64_t>(r));
    for (int i = 0; i < config.trials; ++i) {
      const auto records = execute(schedule, backend, batch.derive(static_cast<std::uint64_t>(i)));
      const TrialEstimates est = estimate_trial(c, engine ? &*engine : nullptr, rpe_model, records);
      if (wants(c.protocol, Protocol::Rpe)) {
        if (est.rpe) {
          rpe_batches[cell].add(c.deviation(*est.rpe));
        } else {
          ++rpe_batches[cell].failures;
        }
      }
      if (wants(c.protocol, Protocol::Brpe)) {
        if (est.brpe) {
          brpe_batches[cell].add(c.deviation(*est.brpe));
        } else {
          ++brpe_batches[cell].failures;
        }
      }
    }
  });

  std::vector<ScalingRow> rows;
  for (Protocol p : protocols_of(base_config.protocol)) {
    const auto& batches = p == Protocol::Rpe ? rpe_batches : brpe_batches;
    for (std::size_t mi = 0; mi < n_m; ++mi) {
      ScalingRow row;
      row.protocol = p;
      row.m_k = config.shot_counts[mi];
      Moments spread;
      for (std::size_t r = 0; r < n_r; ++r) {
        const Moments& m = batches[mi * n_r + r];
        row.batch_sigmas.push_back(m.sample_std());
        row.failures += m.failures;
        spread.add(m.sample_std());
      }
      row.sigma_bar = aggregate_sigma(row.batch_sigmas);
      row.std_err = spread.sample_std() / std::sqrt(static_cast<double>(n_r));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

double aggregate_sigma(std::span<const double> batch_sigmas) {
  double ss = 0.0;
  for (double s : batch_sigmas) ss += s * s;
  return std::sqrt(ss);
}

double fidelity_error(double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("fidelity_error: eps must be non-negative");
  return eps * eps / 8.0;
}

LogLogFit fit_log_log(std::span<const ScalingRow> rows, Protocol protocol, std::uint64_t min_shots) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& row : rows) {
    if (row.protocol != protocol || row.m_k < min_shots || row.m_k == 0 || !(row.sigma_bar > 0.0)) continue;
    const double x = std::log(static_cast<double>(row.m_k));
    const double y = std::log(row.sigma_bar);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  LogLogFit fit;
  fit.points = n;
  const double denom = n * sxx - sx * sx;
  if (n < 2 || denom == 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepResult> results) {
  out << "protocol,delta,n_trials,mean_abs_err,std_err,failures\n";
  for (const auto& r : results) {
    for (const auto& row : r.rows) {
      out << to_string(r.protocol) << ',' << format_double(row.delta) << ',' << row.n_trials << ','
          << format_double(row.mean_abs_err) << ',' << format_double(row.std_err) << ',' << row.failures << '\n';
    }
  }
}

void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows) {
  out << "protocol,m_k,sigma_bar,std_err\n";
  for (const auto& row : rows) {
    out << to_string(row.protocol) << ',' << row.m_k << ',' << format_double(row.sigma_bar) << ','
        << format_double(row.std_err) << '\n';
  }
}

}  // namespace qpecal
