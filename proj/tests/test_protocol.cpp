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


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qpecal/protocol.hpp"
#include "qpecal/random_source.hpp"

namespace qpecal {
namespace {

TEST(GateSchedule, UniformShots) {
  const Schedule s = build_gate_schedule(11, 4);
  EXPECT_EQ(s.kind, ScheduleKind::Gate);
  EXPECT_EQ(s.round_count(), 12);
  for (auto m : s.shots) EXPECT_EQ(m, 4u);
  EXPECT_EQ(s.total_shots(), 96u);
  EXPECT_EQ(build_gate_schedule(11, 8).total_shots(), 192u);
  EXPECT_EQ(build_gate_schedule(10, 4).total_shots(), 88u);
  EXPECT_EQ(build_gate_schedule(10, 8).total_shots(), 176u);
}

TEST(GateSchedule, SingleRoundAndPerRoundList) {
  EXPECT_EQ(build_gate_schedule(0, 1).round_count(), 1);
  const std::vector<std::uint64_t> shots = {8, 16, 32};
  const Schedule s = build_gate_schedule(2, shots);
  EXPECT_EQ(s.shots, shots);
  EXPECT_EQ(s.total_shots(), 112u);
  const std::vector<std::uint64_t> wrong = {8, 16};
  EXPECT_THROW(build_gate_schedule(2, wrong), std::invalid_argument);
  EXPECT_THROW(build_gate_schedule(-1, 4), std::invalid_argument);
}

TEST(RamseySchedule, PaperLadderIsExact) {
  const Schedule s = build_ramsey_schedule(1000.0, 1.024, 9);
  EXPECT_EQ(s.kind, ScheduleKind::Ramsey);
  EXPECT_EQ(s.max_round, 11);
  EXPECT_EQ(s.ramsey_wait(0), 5e-4);
  EXPECT_EQ(s.ramsey_wait(11), 1.024);
  for (int k = 0; k < s.max_round; ++k) {
    EXPECT_EQ(s.wait_times[k + 1], 2.0 * s.wait_times[k]);
    EXPECT_EQ(s.wait_times[k], 2.0 * s.ramsey_wait(k));
  }
  EXPECT_LE(s.ramsey_wait(s.max_round), 1.024);
}

TEST(RamseySchedule, BoundaryAndNonPowerCases) {
  const Schedule edge = build_ramsey_schedule(0.5, 1.0, 9);
  EXPECT_EQ(edge.max_round, 0);
  EXPECT_EQ(edge.ramsey_wait(0), 1.0);
  EXPECT_EQ(build_ramsey_schedule(1000.0, 1.0, 9).max_round, 10);
  EXPECT_THROW(build_ramsey_schedule(0.4, 1.0, 9), std::invalid_argument);
  EXPECT_THROW(build_ramsey_schedule(-1.0, 1.0, 9), std::invalid_argument);
  // floor(log2(x)) must not be fooled by round-off just below a power of two.
  for (int k = 1; k < 30; ++k) {
    const double two_k = std::ldexp(1.0, k);
    EXPECT_EQ(build_ramsey_schedule(two_k / 2, 1.0, 1).max_round, k);
    EXPECT_EQ(build_ramsey_schedule(two_k / 2 * (1 - 1e-12), 1.0, 1).max_round, k - 1) << k;
  }
}

TEST(Execute, DeterministicSequenceBPopulation) {
  const Schedule s = build_gate_schedule(0, 100);
  const SimulatorBackend backend(SignalModel::ideal(), kPi / 2, {}, 0);
  const auto records = execute(s, backend, RandomSource(1));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[1].sequence, Sequence::B);
  EXPECT_EQ(records[1].ones, 100u);
}

TEST(Execute, ZeroShotsAndShotAccounting) {
  const Schedule s = build_gate_schedule(5, 0);
  const SimulatorBackend backend(SignalModel::ideal(), 1.9, {}, 5);
  const auto records = execute(s, backend, RandomSource(2));
  ASSERT_EQ(records.size(), 12u);
  for (const auto& r : records) {
    EXPECT_EQ(r.shots, 0u);
    EXPECT_EQ(r.ones, 0u);
  }
  const Schedule full = build_gate_schedule(11, 4);
  const SimulatorBackend b2(SignalModel::ideal(), 1.9, {}, 11);
  std::uint64_t used = 0;
  for (const auto& r : execute(full, b2, RandomSource(3))) used += r.shots;
  EXPECT_EQ(used, full.total_shots());
}

TEST(Execute, SameSeedSameRecords) {
  const Schedule s = build_gate_schedule(11, 8);
  const SimulatorBackend backend(SignalModel::ideal(), 2.1, NoiseConfig{0.01, 0.02}, 11);
  const auto a = execute(s, backend, RandomSource(42));
  const auto b = execute(s, backend, RandomSource(42));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, execute(s, backend, RandomSource(43)));
}

TEST(Execute, RamseyBackendMustMatchSchedule) {
  const Schedule s = build_ramsey_schedule(1000.0, 1.024, 9);
  const SimulatorBackend ok(s.ramsey_model(), 12.5, {}, s.max_round);
  EXPECT_EQ(execute(s, ok, RandomSource(1)).size(), 24u);
  const SimulatorBackend gate(SignalModel::ideal(), 1.0, {}, s.max_round);
  EXPECT_THROW(execute(s, gate, RandomSource(1)), std::invalid_argument);
}

TEST(AnalyticRecords, RoundedExpectedCounts) {
  const Schedule s = build_gate_schedule(1, 10000);
  const auto r = analytic_records(s, SignalModel::ideal(), kPi / 2);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].ones, 5000u);
  EXPECT_EQ(r[1].ones, 10000u);
  EXPECT_EQ(r[2].ones, 10000u);
  EXPECT_EQ(r[3].ones, 5000u);
}

std::vector<RoundRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_replay(in, "mem");
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ReplayError& e) {
    return e.line();
  }
  return -1;
}

TEST(Replay, ParsesMinimalFile) {
  const auto r = parse("k,sequence,shots,ones\n0,a,9,4\n0,b,9,9\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (RoundRecord{0, Sequence::A, 9, 4}));
  EXPECT_EQ(r[1], (RoundRecord{0, Sequence::B, 9, 9}));
}

TEST(Replay, CommentsBlankLinesAndOrder) {
  const auto r = parse("# session 3\nk,sequence,shots,ones\n\n1,b,9,1\n0,B,9,9\n# mid\n1,a,9,2\n0,a,9,4\n");
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].round, 0);
  EXPECT_EQ(r[0].sequence, Sequence::A);
  EXPECT_EQ(r[3], (RoundRecord{1, Sequence::B, 9, 1}));
}

TEST(Replay, ErrorsNameTheLine) {
  EXPECT_EQ(error_line("k,sequence,shots,ones\n0,a,9,12\n0,b,9,9\n"), 2);
  EXPECT_EQ(error_line("k,sequence,shots,ones\n0,a,9,4\n0,b,9,9\n0,a,9,3\n"), 4);
  EXPECT_EQ(error_line("k,sequence,shots,ones\n0,a,9\n"), 2);
  EXPECT_EQ(error_line("k,sequence,shots,ones\n0,c,9,1\n"), 2);
  EXPECT_EQ(error_line("k,sequence,shots,ones\n-1,a,9,1\n"), 2);
  EXPECT_EQ(error_line("k,seq,shots,ones\n0,a,9,1\n"), 1);
  EXPECT_GE(error_line(""), 0);
  EXPECT_GE(error_line("k,sequence,shots,ones\n"), 0);
  // Round 1 present without round 0, and a round missing its B row.
  EXPECT_GE(error_line("k,sequence,shots,ones\n1,a,9,1\n1,b,9,1\n"), 0);
  EXPECT_GE(error_line("k,sequence,shots,ones\n0,a,9,1\n0,b,9,1\n1,a,9,3\n"), 0);
}

TEST(Replay, RoundTripIsCanonical) {
  const std::string messy = "\xEF\xBB\xBFk,sequence,shots,ones\n# note\n1,B,9,3\n0,a,9,4\n 0 , b , 9 , 9 \n1,a,9,0\n";
  const auto records = parse(messy);
  std::ostringstream canonical;
  write_replay(canonical, records);
  EXPECT_EQ(canonical.str(), "k,sequence,shots,ones\n0,a,9,4\n0,b,9,9\n1,a,9,0\n1,b,9,3\n");
  std::ostringstream again;
  write_replay(again, parse(canonical.str()));
  EXPECT_EQ(again.str(), canonical.str());
}

TEST(Replay, LoadFromDisk) {
  const auto path = std::filesystem::temp_directory_path() / "qpecal_replay_test.csv";
  {
    std::ofstream f(path);
    f << "k,sequence,shots,ones\n0,a,9,4\n0,b,9,9\n";
  }
  EXPECT_EQ(load_replay(path).size(), 2u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_replay(path), ReplayError);
}

}  // namespace
}  // namespace qpecal
