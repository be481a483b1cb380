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

#include "qpecal/random_source.hpp"

namespace qpecal {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kLabelSalt = 0xD1B54A32D192ED03ULL;

// FNV-1a, then mixed; only used to turn string labels into 64-bit labels.
std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), key_(mix64(seed ^ kLabelSalt)) {}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

std::uint64_t RandomSource::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGoldenGamma);
}

double RandomSource::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool RandomSource::bernoulli(double p) {
  if (p <= 0.0) {
    next_u64();
    return false;
  }
  return uniform() < p;
}

RandomSource RandomSource::derive(std::uint64_t label) const {
  // Two rounds of mixing so that nearby (key, label) pairs land far apart.
  std::uint64_t k = mix64(key_ ^ mix64(label + kLabelSalt));
  return RandomSource(seed_, mix64(k + kGoldenGamma));
}

RandomSource RandomSource::derive(std::string_view label) const { return derive(hash_label(label)); }

}  // namespace qpecal
