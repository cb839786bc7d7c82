// SPDX-License-Identifier: Apache-2.0
// Test-only reference: circuits and observables as explicit Kronecker
// products. Shares no code with the gate kernels it checks.
#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "scramble/sim_core.hpp"

namespace scramble::oracle {

using Mat = Eigen::MatrixXcd;
using Cplx = std::complex<double>;

inline Mat pauli(sim::PauliAxis a) {
  Mat m(2, 2);
  switch (a) {
    case sim::PauliAxis::X: m << 0, 1, 1, 0; break;
    case sim::PauliAxis::Y: m << 0, Cplx(0, -1), Cplx(0, 1), 0; break;
    case sim::PauliAxis::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Operator acting with `ops[site]` on each listed site; qubit q is bit q of
/// the basis index, so the leftmost Kronecker factor is qubit n-1.
inline Mat embed(const std::vector<std::pair<int, Mat>>& ops, int n) {
  Mat out = Mat::Identity(1, 1);
  for (int q = n - 1; q >= 0; --q) {
    Mat factor = Mat::Identity(2, 2);
    for (const auto& [site, m] : ops) {
      if (site == q) factor = m;
    }
    out = kron(out, factor);
  }
  return out;
}

inline Mat pauli_on(sim::PauliAxis a, int site, int n) { return embed({{site, pauli(a)}}, n); }

/// exp(-i angle P) for an involutory P.
inline Mat exp_involution(const Mat& p, double angle) {
  const Mat id = Mat::Identity(p.rows(), p.cols());
  return std::cos(angle) * id - Cplx(0, std::sin(angle)) * p;
}

inline Mat two_body_layer(int n, sim::Variant v) {
  const auto axis = v == sim::Variant::CircuitI ? sim::PauliAxis::Z : sim::PauliAxis::X;
  const Eigen::Index dim = Eigen::Index{1} << n;
  Mat layer = Mat::Identity(dim, dim);
  for (int i = 0; i < n; ++i) {
    const Mat pp = embed({{i, pauli(axis)}}, n) * embed({{(i + 1) % n, pauli(axis)}}, n);
    layer = exp_involution(pp, std::numbers::pi / 4) * layer;
  }
  return layer;
}

inline Mat module_unitary(const sim::CircuitSpec& spec, int p) {
  const int n = spec.n_qubits;
  const Eigen::Index dim = Eigen::Index{1} << n;
  Mat rot = Mat::Identity(dim, dim);
  Mat phase = Mat::Identity(dim, dim);
  for (int i = 0; i < n; ++i) {
    rot = exp_involution(pauli_on(sim::PauliAxis::X, i, n), spec.angle(p, i)) * rot;
    phase = exp_involution(pauli_on(sim::PauliAxis::Z, i, n), std::numbers::pi / 4) * phase;
  }
  const Mat two = two_body_layer(n, spec.variant);
  if (spec.order == sim::LayerOrder::TwoBodyFirst) return phase * rot * two;
  return two * phase * rot;
}

inline Mat circuit_unitary(const sim::CircuitSpec& spec, int p) {
  const Eigen::Index dim = Eigen::Index{1} << spec.n_qubits;
  Mat u = Mat::Identity(dim, dim);
  for (int m = 1; m <= p; ++m) u = module_unitary(spec, m) * u;
  return u;
}

inline Eigen::VectorXcd to_vector(const sim::StateVector& s) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(s.dim()));
  for (std::size_t k = 0; k < s.dim(); ++k) v[static_cast<Eigen::Index>(k)] = s[k];
  return v;
}

inline double dense_expectation(const Eigen::VectorXcd& psi, const Mat& op) {
  return (psi.adjoint() * op * psi)(0, 0).real();
}

}  // namespace scramble::oracle
