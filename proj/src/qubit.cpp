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

#include "qpecal/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qpecal {

Mat2 Mat2::adjoint() const { return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}}; }

Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {{a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
           a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]}};
}

Mat2 operator+(const Mat2& a, const Mat2& b) {
  return {{a.m[0] + b.m[0], a.m[1] + b.m[1], a.m[2] + b.m[2], a.m[3] + b.m[3]}};
}

Mat2 operator*(Complex s, const Mat2& a) { return {{s * a.m[0], s * a.m[1], s * a.m[2], s * a.m[3]}}; }

double max_abs_diff(const Mat2& a, const Mat2& b) {
  double out = 0.0;
  for (int i = 0; i < 4; ++i) out = std::max(out, std::abs(a.m[i] - b.m[i]));
  return out;
}

Mat2 rotation_unitary(Axis axis, double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("rotation angle must be finite");
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  const Complex mi(0.0, -1.0);
  switch (axis) {
    case Axis::X:
      return {{c, mi * s, mi * s, c}};
    case Axis::Y:
      return {{c, -s, s, c}};
    case Axis::Z:
      return {{Complex(c, -s), 0.0, 0.0, Complex(c, s)}};
  }
  throw std::invalid_argument("unknown rotation axis");
}

DensityMatrix DensityMatrix::ground() { return DensityMatrix(Mat2{{1.0, 0.0, 0.0, 0.0}}); }
DensityMatrix DensityMatrix::excited() { return DensityMatrix(Mat2{{0.0, 0.0, 0.0, 1.0}}); }
DensityMatrix DensityMatrix::maximally_mixed() { return DensityMatrix(Mat2{{0.5, 0.0, 0.0, 0.5}}); }

DensityMatrix DensityMatrix::from_matrix(const Mat2& elements, double tol) {
  DensityMatrix out(elements);
  if (!out.is_valid(tol)) throw std::invalid_argument("matrix is not a valid density matrix");
  return out;
}

double DensityMatrix::min_eigenvalue() const {
  // Hermitian 2x2: eigenvalues are t/2 +- sqrt((a-d)^2/4 + |b|^2).
  const double a = rho_.m[0].real();
  const double d = rho_.m[3].real();
  const double half_gap = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(rho_.m[1]));
  return 0.5 * (a + d) - half_gap;
}

bool DensityMatrix::is_valid(double tol) const {
  for (const auto& z : rho_.m) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  if (std::abs(rho_.m[0].imag()) > tol || std::abs(rho_.m[3].imag()) > tol) return false;
  if (std::abs(rho_.m[1] - std::conj(rho_.m[2])) > tol) return false;
  if (std::abs(rho_.trace() - 1.0) > tol) return false;
  return min_eigenvalue() >= -tol;
}

namespace {

// Restores exact Hermiticity after a product; keeps round-off from
// accumulating over long gate sequences.
Mat2 hermitize(const Mat2& a) {
  const Complex off = 0.5 * (a.m[1] + std::conj(a.m[2]));
  return {{a.m[0].real(), off, std::conj(off), a.m[3].real()}};
}

}  // namespace

DensityMatrix evolve(const DensityMatrix& state, const Mat2& u) {
  if (max_abs_diff(u * u.adjoint(), Mat2::identity()) > 1e-10) {
    throw std::invalid_argument("evolve: operator is not unitary");
  }
  return DensityMatrix(hermitize(u * state.rho_ * u.adjoint()));
}

DensityMatrix depolarize(const DensityMatrix& state, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("depolarize: p must lie in [0, 1]");
  if (p == 0.0) return state;
  const Mat2& rho = state.rho_;
  const Mat2 x = Mat2::pauli_x();
  const Mat2 y = Mat2::pauli_y();
  const Mat2 z = Mat2::pauli_z();
  const Mat2 paulis = x * rho * x + y * rho * y + z * rho * z;
  return DensityMatrix(hermitize(Complex(1.0 - p) * rho + Complex(p / 3.0) * paulis));
}

double probability_one(const DensityMatrix& state) {
  const double p = state.elements()(1, 1).real();
  if (p < -1e-9 || p > 1.0 + 1e-9) {
    throw std::logic_error("probability_one: Born probability " + std::to_string(p) + " outside [0, 1]");
  }
  return std::clamp(p, 0.0, 1.0);
}

std::uint64_t sample_counts(double p1, std::uint64_t shots, double readout_flip, RandomSource& rng) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw std::invalid_argument("sample_counts: p1 must lie in [0, 1]");
  if (!(readout_flip >= 0.0 && readout_flip <= 1.0)) {
    throw std::invalid_argument("sample_counts: readout_flip must lie in [0, 1]");
  }
  std::uint64_t ones = 0;
  for (std::uint64_t i = 0; i < shots; ++i) {
    bool outcome = rng.bernoulli(p1);
    if (readout_flip > 0.0 && rng.bernoulli(readout_flip)) outcome = !outcome;
    ones += outcome ? 1 : 0;
  }
  return ones;
}

}  // namespace qpecal
