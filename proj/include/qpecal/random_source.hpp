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

#pragma once

#include <cstdint>
#include <string_view>

namespace qpecal {

/// Counter-based deterministic generator.
///
/// Output i is a fixed 64-bit mixing function of (key, i), so a stream is
/// reproducible bit-for-bit on every platform and substreams can be derived
/// from (key, label) without touching the parent's position. Not
/// thread-safe; give each concurrent task its own derived instance.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// True with probability p. p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p);

  RandomSource derive(std::uint64_t label) const;
  RandomSource derive(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return counter_; }

 private:
  RandomSource(std::uint64_t seed, std::uint64_t key);

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

}  // namespace qpecal
