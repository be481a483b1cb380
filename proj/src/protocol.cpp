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

#include "qpecal/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "qpecal/qubit.hpp"

namespace qpecal {

std::uint64_t Schedule::total_shots() const {
  std::uint64_t total = 0;
  for (auto m : shots) total += 2 * m;
  return total;
}

double Schedule::ramsey_wait(int round) const {
  if (kind != ScheduleKind::Ramsey) throw std::invalid_argument("not a RAMSEY schedule");
  return std::ldexp(1.0, round - 1) / delta_max;
}

SignalModel Schedule::ramsey_model(double artificial_offset) const {
  if (kind != ScheduleKind::Ramsey) throw std::invalid_argument("not a RAMSEY schedule");
  return SignalModel::ramsey(wait_times.at(0), artificial_offset);
}

Schedule build_gate_schedule(int max_round, std::uint64_t shots) {
  if (max_round < 0) throw std::invalid_argument("max round K must be non-negative");
  if (max_round > 40) throw std::invalid_argument("max round K too large");
  Schedule s;
  s.kind = ScheduleKind::Gate;
  s.max_round = max_round;
  s.shots.assign(static_cast<std::size_t>(max_round) + 1, shots);
  return s;
}

Schedule build_gate_schedule(int max_round, std::span<const std::uint64_t> shots_per_round) {
  if (max_round < 0) throw std::invalid_argument("max round K must be non-negative");
  if (shots_per_round.size() != static_cast<std::size_t>(max_round) + 1) {
    throw std::invalid_argument("need exactly K+1 per-round shot counts");
  }
  Schedule s = build_gate_schedule(max_round, std::uint64_t{0});
  s.shots.assign(shots_per_round.begin(), shots_per_round.end());
  return s;
}

Schedule build_ramsey_schedule(double delta_max, double beta, std::uint64_t shots) {
  if (!(delta_max > 0.0) || !std::isfinite(delta_max)) throw std::invalid_argument("delta_max must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
  const double span = 2.0 * delta_max * beta;
  if (span < 1.0) throw std::invalid_argument("2 * delta_max * beta < 1: no Ramsey round fits under beta");
  // Largest K with 2^K <= 2 delta_max beta, i.e. t_K = 2^(K-1)/delta_max <= beta.
  int k = 0;
  while (k < 62 && std::ldexp(1.0, k + 1) <= span) ++k;
  Schedule s;
  s.kind = ScheduleKind::Ramsey;
  s.max_round = k;
  s.delta_max = delta_max;
  s.shots.assign(static_cast<std::size_t>(k) + 1, shots);
  for (int i = 0; i <= k; ++i) s.wait_times.push_back(std::ldexp(1.0, i) / delta_max);
  return s;
}

SimulatorBackend::SimulatorBackend(SignalModel model, double true_parameter, NoiseConfig noise, int max_round)
    : model_(model), noise_(noise) {
  model_.validate();
  noise_.validate();
  if (max_round < 0) throw std::invalid_argument("max round must be non-negative");
  for (int k = 0; k <= max_round; ++k) {
    p_a_.push_back(circuit_probability(model_, true_parameter, sequence_spec(model_, k, Sequence::A), noise_));
    p_b_.push_back(circuit_probability(model_, true_parameter, sequence_spec(model_, k, Sequence::B), noise_));
  }
}

bool SimulatorBackend::supports(ScheduleKind kind) const {
  return (kind == ScheduleKind::Ramsey) == (model_.family == ModelFamily::Ramsey);
}

double SimulatorBackend::probability(int round, Sequence sequence) const {
  if (round < 0 || static_cast<std::size_t>(round) >= p_a_.size()) {
    throw std::out_of_range("round " + std::to_string(round) + " beyond simulated range");
  }
  return sequence == Sequence::A ? p_a_[round] : p_b_[round];
}

std::uint64_t SimulatorBackend::run(const SequenceSpec& spec, std::uint64_t shots, RandomSource& rng) const {
  if (spec.wait_time.has_value() != (model_.family == ModelFamily::Ramsey)) {
    throw std::invalid_argument("sequence spec does not match simulator model family");
  }
  if (spec.wait_time) {
    const double expected = std::ldexp(model_.base_wait, spec.round);
    if (std::abs(*spec.wait_time - expected) > 1e-12 * expected) {
      throw std::invalid_argument("wait time differs from the simulator's schedule");
    }
  }
  return sample_counts(probability(spec.round, spec.sequence), shots, noise_.readout_flip, rng);
}

std::vector<RoundRecord> execute(const Schedule& schedule, const Backend& backend, const RandomSource& rng) {
  if (!backend.supports(schedule.kind)) throw std::invalid_argument("backend does not support this schedule kind");
  if (schedule.kind == ScheduleKind::Ramsey) {
    const double expected = schedule.wait_times.at(0);
    if (std::abs(backend.model().base_wait - expected) > 1e-12 * expected) {
      throw std::invalid_argument("backend model wait times do not match the schedule");
    }
  }
  std::vector<RoundRecord> records;
  records.reserve(2 * schedule.shots.size());
  for (int k = 0; k <= schedule.max_round; ++k) {
    for (Sequence seq : {Sequence::A, Sequence::B}) {
      RandomSource stream = rng.derive(static_cast<std::uint64_t>(2 * k + (seq == Sequence::B ? 1 : 0)));
      const std::uint64_t m = schedule.shots[k];
      std::uint64_t ones = 0;
      try {
        ones = backend.run(sequence_spec(backend.model(), k, seq), m, stream);
      } catch (const std::exception& e) {
        throw std::runtime_error("round " + std::to_string(k) + " sequence " + std::string(to_string(seq)) + ": " +
                                 e.what());
      }
      records.push_back({k, seq, m, ones});
    }
  }
  return records;
}

std::vector<RoundRecord> analytic_records(const Schedule& schedule, const SignalModel& model, double true_parameter) {
  std::vector<RoundRecord> records;
  for (int k = 0; k <= schedule.max_round; ++k) {
    for (Sequence seq : {Sequence::A, Sequence::B}) {
      const double p = outcome_probability(model, true_parameter, sequence_spec(model, k, seq));
      const std::uint64_t m = schedule.shots[k];
      const auto ones = static_cast<std::uint64_t>(std::llround(p * static_cast<double>(m)));
      records.push_back({k, seq, m, std::min(ones, m)});
    }
  }
  return records;
}

ReplayError::ReplayError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_uint(const std::string& text, std::uint64_t& out) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<RoundRecord> parse_replay(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::map<std::pair<int, int>, std::pair<RoundRecord, int>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (line_no == 1 && t.rfind("\xEF\xBB\xBF", 0) == 0) t = trim(t.substr(3));
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_fields(t);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"k", "sequence", "shots", "ones"}) {
        throw ReplayError(source, line_no, "expected header 'k,sequence,shots,ones'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) throw ReplayError(source, line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    std::uint64_t k = 0, shots = 0, ones = 0;
    if (!parse_uint(fields[0], k) || k > 62) throw ReplayError(source, line_no, "bad round index '" + fields[0] + "'");
    Sequence seq;
    try {
      seq = parse_sequence(fields[1]);
    } catch (const std::invalid_argument& e) {
      throw ReplayError(source, line_no, e.what());
    }
    if (!parse_uint(fields[2], shots)) throw ReplayError(source, line_no, "bad shot count '" + fields[2] + "'");
    if (!parse_uint(fields[3], ones)) throw ReplayError(source, line_no, "bad ones count '" + fields[3] + "'");
    if (ones > shots) throw ReplayError(source, line_no, "ones exceeds shots");
    const auto key = std::make_pair(static_cast<int>(k), seq == Sequence::A ? 0 : 1);
    RoundRecord rec{static_cast<int>(k), seq, shots, ones};
    auto [it, inserted] = rows.emplace(key, std::make_pair(rec, line_no));
    if (!inserted) {
      throw ReplayError(source, line_no,
                        "duplicate row for k=" + fields[0] + " sequence " + fields[1] + " (first on line " +
                            std::to_string(it->second.second) + ")");
    }
  }
  if (!header_seen) throw ReplayError(source, line_no, "missing header");
  if (rows.empty()) throw ReplayError(source, line_no, "no rounds");

  std::vector<RoundRecord> records;
  for (const auto& [key, value] : rows) records.push_back(value.first);
  try {
    check_complete_rounds(records);
  } catch (const std::invalid_argument& e) {
    throw ReplayError(source, line_no, e.what());
  }
  return records;
}

std::vector<RoundRecord> load_replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReplayError(path.string(), 0, "cannot open file");
  return parse_replay(in, path.string());
}

void write_replay(std::ostream& out, std::span<const RoundRecord> records) {
  std::vector<RoundRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const RoundRecord& a, const RoundRecord& b) {
    return std::make_pair(a.round, a.sequence) < std::make_pair(b.round, b.sequence);
  });
  out << "k,sequence,shots,ones\n";
  for (const auto& r : sorted) out << r.round << ',' << to_string(r.sequence) << ',' << r.shots << ',' << r.ones << '\n';
}

int check_complete_rounds(std::span<const RoundRecord> records) {
  if (records.empty()) throw std::invalid_argument("no rounds");
  int max_round = -1;
  for (const auto& r : records) {
    if (r.round < 0) throw std::invalid_argument("negative round index");
    if (r.ones > r.shots) throw std::invalid_argument("round " + std::to_string(r.round) + ": ones exceeds shots");
    max_round = std::max(max_round, r.round);
  }
  std::vector<int> seen(2 * (static_cast<std::size_t>(max_round) + 1), 0);
  for (const auto& r : records) ++seen[2 * r.round + (r.sequence == Sequence::B ? 1 : 0)];
  for (int k = 0; k <= max_round; ++k) {
    for (int s = 0; s < 2; ++s) {
      const int n = seen[2 * k + s];
      const std::string what = "round " + std::to_string(k) + " sequence " + (s == 0 ? "a" : "b");
      if (n == 0) throw std::invalid_argument("missing " + what);
      if (n > 1) throw std::invalid_argument("duplicate " + what);
    }
  }
  return max_round;
}

}  // namespace qpecal
