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


// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Every stochastic check uses a fixed
// seed, so the output is reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qpecal/bench.hpp"
#include "qpecal/cli.hpp"
#include "qpecal/estimators.hpp"
#include "qpecal/protocol.hpp"
#include "qpecal/signal_model.hpp"

namespace {

using namespace qpecal;

constexpr double kTwoPi = 2 * kPi;
constexpr int kTrials = 300;
constexpr int kOffsets = 40;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : std::string("none"); }

SweepConfig gate_sweep(ModelFamily family, ModelFamily likelihood, std::uint64_t shots, double depolarizing = 0.0) {
  SweepConfig c;
  c.family = family;
  c.likelihood = likelihood;
  c.shots = {shots};
  c.noise.depolarizing = depolarizing;
  c.d = kOffsets;
  c.trials = kTrials;
  c.base_seed = 1;
  c.threads = 0;
  return c;
}

const SweepResult& of(const std::vector<SweepResult>& results, Protocol p) {
  return *std::find_if(results.begin(), results.end(), [p](const SweepResult& r) { return r.protocol == p; });
}

// Mass of each grid point under a product of per-round likelihoods, computed
// directly in linear space.
std::vector<double> linear_posterior(const std::vector<RoundRecord>& rounds, const SignalModel& model, double lo,
                                     double hi, std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(n - 1);
    double prod = 1.0;
    for (const auto& r : rounds) {
      const double p = outcome_probability(model, x, sequence_spec(model, r.round, r.sequence));
      prod *= std::pow(p, static_cast<double>(r.ones)) * std::pow(1 - p, static_cast<double>(r.shots - r.ones));
    }
    w[i] = prod;
  }
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= z;
  return w;
}

std::vector<RoundRecord> random_rounds(std::mt19937_64& gen, int max_round, std::uint64_t max_shots) {
  std::vector<RoundRecord> out;
  for (int k = 0; k <= max_round; ++k) {
    for (Sequence s : {Sequence::A, Sequence::B}) {
      const std::uint64_t m = std::uniform_int_distribution<std::uint64_t>(0, max_shots)(gen);
      out.push_back({k, s, m, std::uniform_int_distribution<std::uint64_t>(0, m)(gen)});
    }
  }
  return out;
}

Outcome oracle_equivalence() {
  std::mt19937_64 gen(2026);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int f = static_cast<int>(unit(gen) * 3);
    const int k = static_cast<int>(unit(gen) * 12);
    const Sequence seq = unit(gen) < 0.5 ? Sequence::A : Sequence::B;
    SignalModel model;
    double parameter;
    if (f == 2) {
      model = SignalModel::ramsey(1e-3);
      parameter = -1000 + 2000 * unit(gen);
    } else {
      model = f == 0 ? SignalModel::ideal() : SignalModel::cspam();
      parameter = kTwoPi * unit(gen);
    }
    const SequenceSpec spec = sequence_spec(model, k, seq);
    worst = std::max(worst, std::abs(outcome_probability(model, parameter, spec) -
                                     circuit_probability(model, parameter, spec)));
  }
  return {worst <= 1e-12, "max |closed form - circuit| = " + num(worst) + " over 1000 tuples (<= 1e-12)"};
}

Outcome exact_data_limits() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> offset(0.0, kPi);
  const Schedule s = build_gate_schedule(11, 10000);
  const SignalModel model = SignalModel::ideal();
  const BrpeEngine engine(model, 11);
  double worst_rpe = 0.0;
  double worst_brpe_cells = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double truth = kPi / 2 + offset(gen);
    const auto rounds = analytic_records(s, model, truth);
    worst_rpe = std::max(worst_rpe, std::abs(rpe_estimate(rounds, model).estimate - truth));
    const PosteriorGrid post = engine.posterior(rounds);
    worst_brpe_cells = std::max(worst_brpe_cells, std::abs(post.point(post.argmax()) - truth) / post.spacing());
  }
  const bool pass = worst_rpe <= kPi / 2048 && worst_brpe_cells <= 2.0;
  return {pass, "RPE max err " + num(worst_rpe) + " (<= " + num(kPi / 2048) + "), BRPE max err " +
                    num(worst_brpe_cells) + " grid spacings (<= 2)"};
}

Outcome error_free_comparison() {
  const auto r = run_sweep(gate_sweep(ModelFamily::Ideal, ModelFamily::Ideal, 4));
  const double rpe = of(r, Protocol::Rpe).mean_abs_err;
  const double brpe = of(r, Protocol::Brpe).mean_abs_err;
  const double reduction = 1 - brpe / rpe;
  const bool pass = brpe <= 5e-3 && rpe >= 1.5e-2 && reduction >= 0.80;
  return {pass, "BRPE " + num(brpe) + " (<= 5e-3), RPE " + num(rpe) + " (>= 1.5e-2), reduction " +
                    num(100 * reduction) + "% (>= 80%)"};
}

Outcome half_the_shots() {
  SweepConfig b = gate_sweep(ModelFamily::Ideal, ModelFamily::Ideal, 8);
  b.protocol = Protocol::Brpe;
  SweepConfig r = gate_sweep(ModelFamily::Ideal, ModelFamily::Ideal, 16);
  r.protocol = Protocol::Rpe;
  const SweepResult brpe = run_sweep(b)[0];
  const SweepResult rpe = run_sweep(r)[0];
  return {brpe.mean_abs_err <= rpe.mean_abs_err, "BRPE@M=8 " + num(brpe.mean_abs_err) + " (" +
                                                     std::to_string(brpe.total_shots) + " shots) vs RPE@M=16 " +
                                                     num(rpe.mean_abs_err) + " (" + std::to_string(rpe.total_shots) +
                                                     " shots); need BRPE <= RPE"};
}

Outcome depolarizing_reduction() {
  const auto r = run_sweep(gate_sweep(ModelFamily::Ideal, ModelFamily::Ideal, 8, 0.01));
  const double rpe = of(r, Protocol::Rpe).mean_abs_err;
  const double brpe = of(r, Protocol::Brpe).mean_abs_err;
  const double reduction = 1 - brpe / rpe;
  return {reduction >= 0.25, "p=0.01 M=8: RPE " + num(rpe) + ", BRPE " + num(brpe) + ", reduction " +
                                 num(100 * reduction) + "% (>= 25%)"};
}

Outcome depolarizing_threshold() {
  const double eps_th = 0.02;
  SweepConfig b = gate_sweep(ModelFamily::Ideal, ModelFamily::Ideal, 8, 0.03);
  b.protocol = Protocol::Brpe;
  const double brpe = run_sweep(b)[0].mean_abs_err;
  bool pass = brpe < eps_th;
  std::string detail = "p=0.03: BRPE@8 " + num(brpe) + " (< 0.02); RPE";
  for (std::uint64_t m : {8u, 16u, 32u, 48u, 63u}) {
    SweepConfig r = gate_sweep(ModelFamily::Ideal, ModelFamily::Ideal, m, 0.03);
    r.protocol = Protocol::Rpe;
    const double rpe = run_sweep(r)[0].mean_abs_err;
    pass = pass && rpe > eps_th;
    detail += " @" + std::to_string(m) + " " + num(rpe);
  }
  return {pass, detail + " (all > 0.02)"};
}

// Largest offset of the leading run of offsets that stay under the threshold.
std::optional<double> contiguous_threshold(const SweepResult& r, double eps_th) {
  std::optional<double> best;
  for (const auto& row : r.rows) {
    if (!(row.mean_abs_err < eps_th)) break;
    best = row.delta;
  }
  return best;
}

Outcome cspam_default_likelihood() {
  const auto r = run_sweep(gate_sweep(ModelFamily::Cspam, ModelFamily::Ideal, 16));
  const auto brpe = delta_threshold(of(r, Protocol::Brpe), 0.02);
  const auto rpe = delta_threshold(of(r, Protocol::Rpe), 0.02);
  const bool pass = brpe && *brpe >= 0.70 && (!rpe || *rpe <= 0.70);
  return {pass, "M=16: BRPE delta_th " + opt_num(brpe) + " (>= 0.70), RPE delta_th " + opt_num(rpe) +
                    " (<= 0.70); leading under-threshold run ends at BRPE " +
                    opt_num(contiguous_threshold(of(r, Protocol::Brpe), 0.02)) + ", RPE " +
                    opt_num(contiguous_threshold(of(r, Protocol::Rpe), 0.02))};
}

Outcome cspam_adapted_likelihood() {
  SweepConfig c = gate_sweep(ModelFamily::Cspam, ModelFamily::Cspam, 32);
  c.protocol = Protocol::Brpe;
  const SweepResult r = run_sweep(c)[0];
  const auto th = delta_threshold(r, 0.02);
  return {th && *th >= 1.45, "M=32: BRPE delta_th " + opt_num(th) + " (>= 1.45), mean err " + num(r.mean_abs_err)};
}

Outcome scaling() {
  ScalingConfig s;
  s.base = gate_sweep(ModelFamily::Ideal, ModelFamily::Ideal, 8);
  s.offset = 0.201;
  s.trials = kTrials;
  s.replicates = 5;
  s.shot_counts = {6, 7, 8, 9};
  const auto rows = scaling_study(s);
  bool pass = true;
  std::string detail;
  for (std::uint64_t m : s.shot_counts) {
    double rpe = 0, brpe = 0;
    for (const auto& row : rows) {
      if (row.m_k != m) continue;
      (row.protocol == Protocol::Rpe ? rpe : brpe) = row.sigma_bar;
    }
    pass = pass && brpe <= 0.1 * rpe;
    detail += "M=" + std::to_string(m) + " BRPE/RPE " + num(brpe) + "/" + num(rpe) + " = " + num(brpe / rpe) + "; ";
  }
  return {pass, detail + "need every ratio <= 0.1"};
}

Outcome ramsey() {
  const Schedule s = build_ramsey_schedule(1000.0, 1.024, 9);
  bool ladder = s.max_round == 11 && s.ramsey_wait(0) == 5e-4 && s.ramsey_wait(11) == 1.024;
  for (int k = 1; k <= s.max_round; ++k) ladder = ladder && s.ramsey_wait(k) == 2 * s.ramsey_wait(k - 1);
  const SignalModel model = s.ramsey_model();
  const BrpeEngine engine(model, s.max_round);
  const double resolution = kPi / s.wait_times.back();
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> detuning(-600.0, 600.0);
  const RandomSource base(11);
  double worst = 0.0;
  int missed = 0;
  for (int i = 0; i < 20; ++i) {
    const double delta = detuning(gen);
    const SimulatorBackend backend(model, delta, {}, s.max_round);
    const auto records = execute(s, backend, base.derive(static_cast<std::uint64_t>(i)));
    const double err = std::abs(engine.estimate(records).estimate - delta);
    worst = std::max(worst, err);
    if (err > resolution) ++missed;
  }
  const bool pass = ladder && missed == 0;
  return {pass, std::string("schedule K=") + std::to_string(s.max_round) + " t_0=" + num(s.ramsey_wait(0)) +
                    " t_K=" + num(s.ramsey_wait(s.max_round)) + (ladder ? " exact" : " WRONG") +
                    "; BRPE max |err| " + num(worst) + " rad/s over 20 detunings in +-600 (<= " +
                    num(resolution) + "), misses " + std::to_string(missed)};
}

Outcome invariants() {
  std::mt19937_64 gen(99);
  const SignalModel model = SignalModel::ideal();
  double norm_dev = 0.0, order_dev = 0.0, linear_dev = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto rounds = random_rounds(gen, 8, 30);
    PosteriorGrid post = init_prior(0, kTwoPi, 2048);
    for (int k = 0; k <= 8; ++k) {
      post = brpe_round_update(post, rounds[2 * k], rounds[2 * k + 1], model);
      const auto p = post.probabilities();
      norm_dev = std::max(norm_dev, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    }
    std::vector<int> order(9);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    PosteriorGrid shuffled = init_prior(0, kTwoPi, 2048);
    for (int k : order) shuffled = brpe_round_update(shuffled, rounds[2 * k], rounds[2 * k + 1], model);
    const auto p = post.probabilities();
    const auto q = shuffled.probabilities();
    for (std::size_t i = 0; i < p.size(); ++i) order_dev = std::max(order_dev, std::abs(p[i] - q[i]));
  }
  for (int t = 0; t < 50; ++t) {
    const auto rounds = random_rounds(gen, 3, 5);
    const std::size_t n = 129;
    const auto lin = linear_posterior(rounds, model, 0, kTwoPi, n);
    const auto log = brpe_run(rounds, model, BrpeConfig{0.0, kTwoPi, n}).posterior.probabilities();
    for (std::size_t i = 0; i < n; ++i) {
      if (lin[i] > 1e-300) linear_dev = std::max(linear_dev, std::abs(log[i] / lin[i] - 1));
    }
  }
  bool monotone = true;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double d = i / 49.0, s = 60.0 * j / 49.0;
      const double c = confidence_score(d, s, 10.0);
      if (i > 0 && c < confidence_score((i - 1) / 49.0, s, 10.0)) monotone = false;
      if (j > 0 && c > confidence_score(d, 60.0 * (j - 1) / 49.0, 10.0)) monotone = false;
    }
  }

  // Reproduce a sweep from the configuration it echoed.
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "qpecal_acceptance";
  fs::create_directories(dir);
  const std::string csv1 = (dir / "a.csv").string(), csv2 = (dir / "b.csv").string(),
                    summary = (dir / "a.json").string();
  std::ostringstream sink;
  bool reproduced =
      cli::run(std::vector<std::string>{"sweep", "--d", "8", "--N", "40", "--M", "6", "--family", "cspam",
                                        "--depolarizing", "0.01", "--seed", "4242", "--csv", csv1, "--out", summary},
               sink, sink) == 0;
  if (reproduced) {
    std::ifstream in(summary);
    nlohmann::json echoed = nlohmann::json::parse(in).at("config");
    echoed["csv"] = csv2;
    echoed.erase("out");
    const cli::CliConfig again = cli::parse_config(std::vector<std::string>{"sweep"}, echoed);
    reproduced = cli::dispatch(again, sink, sink) == 0;
    const auto slurp = [](const std::string& path) {
      std::ifstream f(path, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(f), {});
    };
    reproduced = reproduced && slurp(csv1) == slurp(csv2) && !slurp(csv1).empty();
  }
  fs::remove_all(dir);

  const bool pass = norm_dev <= 1e-9 && order_dev <= 1e-10 && linear_dev <= 1e-10 && monotone && reproduced;
  return {pass, "normalization dev " + num(norm_dev) + " (<= 1e-9), order dev " + num(order_dev) +
                    " (<= 1e-10), log/linear rel dev " + num(linear_dev) + " (<= 1e-10), confidence monotone " +
                    (monotone ? "yes" : "no") + ", sweep reproduced from echo " + (reproduced ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"exact-data limits", exact_data_limits},
      {"error-free comparison, M=4", error_free_comparison},
      {"BRPE at half the shots", half_the_shots},
      {"depolarizing p=0.01 reduction", depolarizing_reduction},
      {"depolarizing p=0.03 threshold", depolarizing_threshold},
      {"C-SPAM, default likelihoods", cspam_default_likelihood},
      {"C-SPAM, adapted likelihood", cspam_adapted_likelihood},
      {"scaling at offset 0.201", scaling},
      {"Ramsey schedule and recovery", ramsey},
      {"invariant suite", invariants},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %2zu %s  %s: %s [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
