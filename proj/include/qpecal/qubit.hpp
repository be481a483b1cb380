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

// Exact single-qubit density-matrix simulation.

#pragma once

#include <array>
#include <complex>
#include <cstdint>

#include "qpecal/random_source.hpp"

namespace qpecal {

using Complex = std::complex<double>;

/// Row-major 2x2 complex matrix.
struct Mat2 {
  std::array<Complex, 4> m{};

  static Mat2 identity() { return {{1.0, 0.0, 0.0, 1.0}}; }
  static Mat2 pauli_x() { return {{0.0, 1.0, 1.0, 0.0}}; }
  static Mat2 pauli_y() { return {{0.0, Complex(0, -1), Complex(0, 1), 0.0}}; }
  static Mat2 pauli_z() { return {{1.0, 0.0, 0.0, -1.0}}; }

  Complex& operator()(int row, int col) { return m[2 * row + col]; }
  const Complex& operator()(int row, int col) const { return m[2 * row + col]; }

  Mat2 adjoint() const;
  Complex trace() const { return m[0] + m[3]; }

  friend Mat2 operator*(const Mat2& a, const Mat2& b);
  friend Mat2 operator+(const Mat2& a, const Mat2& b);
  friend Mat2 operator*(Complex s, const Mat2& a);
};

/// Largest elementwise magnitude of a - b.
double max_abs_diff(const Mat2& a, const Mat2& b);

enum class Axis { X, Y, Z };

/// cos(angle/2) I - i sin(angle/2) sigma_axis. Throws std::invalid_argument
/// on a non-finite angle.
Mat2 rotation_unitary(Axis axis, double angle);

/// Hermitian, unit-trace, positive semidefinite 2x2 operator.
class DensityMatrix {
 public:
  static DensityMatrix ground();
  static DensityMatrix excited();
  static DensityMatrix maximally_mixed();
  /// Validates the invariants to `tol`; throws std::invalid_argument.
  static DensityMatrix from_matrix(const Mat2& elements, double tol = 1e-12);

  const Mat2& elements() const { return rho_; }
  double min_eigenvalue() const;
  bool is_valid(double tol = 1e-12) const;

 private:
  explicit DensityMatrix(const Mat2& rho) : rho_(rho) {}
  friend DensityMatrix evolve(const DensityMatrix& state, const Mat2& u);
  friend DensityMatrix depolarize(const DensityMatrix& state, double p);

  Mat2 rho_;
};

/// U rho U^dagger. Throws std::invalid_argument if u is not unitary to 1e-10.
DensityMatrix evolve(const DensityMatrix& state, const Mat2& u);

/// (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z), 0 <= p <= 1.
DensityMatrix depolarize(const DensityMatrix& state, double p);

/// <1|rho|1>, clamped to [0,1]. Round-off beyond 1e-9 outside [0,1] is a
/// logic error and throws std::logic_error.
double probability_one(const DensityMatrix& state);

/// Draws `shots` Bernoulli(p1) outcomes, flips each with probability
/// `readout_flip`, and returns the number of ones.
std::uint64_t sample_counts(double p1, std::uint64_t shots, double readout_flip, RandomSource& rng);

}  // namespace qpecal
