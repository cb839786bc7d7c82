// SPDX-License-Identifier: Apache-2.0
#include "scramble/sim_core.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "scramble/error.hpp"

namespace scramble::sim {

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4;

std::uint64_t rotate_ring(std::uint64_t k, int n) {
  const std::uint64_t mask = (n >= 64) ? ~0ULL : ((1ULL << n) - 1);
  return ((k >> 1) | (k << (n - 1))) & mask;
}

void check_qubit(std::span<const Amplitude> psi, int q) {
  if (q < 0 || (1ULL << q) >= psi.size()) {
    throw ValidationError("qubit index " + std::to_string(q) + " out of range");
  }
}

}  // namespace

char axis_char(PauliAxis a) {
  switch (a) {
    case PauliAxis::X: return 'x';
    case PauliAxis::Y: return 'y';
    case PauliAxis::Z: return 'z';
  }
  return '?';
}

PauliAxis parse_axis(std::string_view s) {
  if (s == "x" || s == "X") return PauliAxis::X;
  if (s == "y" || s == "Y") return PauliAxis::Y;
  if (s == "z" || s == "Z") return PauliAxis::Z;
  throw ValidationError("unknown Pauli axis '" + std::string(s) + "'");
}

std::string_view variant_name(Variant v) {
  return v == Variant::CircuitI ? "I" : "II";
}

Variant parse_variant(std::string_view s) {
  if (s == "I" || s == "1") return Variant::CircuitI;
  if (s == "II" || s == "2") return Variant::CircuitII;
  throw ValidationError("variant must be I or II, got '" + std::string(s) + "'");
}

bool CircuitSpec::is_homogeneous() const {
  for (int p = 1; p <= depth; ++p) {
    for (int i = 1; i < n_qubits; ++i) {
      if (angle(p, i) != angle(p, 0)) return false;
    }
  }
  return true;
}

void CircuitSpec::validate() const {
  if (n_qubits < 2) {
    throw ValidationError("n_qubits must be >= 2, got " + std::to_string(n_qubits));
  }
  if (depth < 1) {
    throw ValidationError("depth must be >= 1, got " + std::to_string(depth));
  }
  if (angles.size() != static_cast<std::size_t>(depth) * n_qubits) {
    throw ValidationError("angle grid has " + std::to_string(angles.size()) +
                          " entries, expected depth*n_qubits = " +
                          std::to_string(static_cast<std::size_t>(depth) * n_qubits));
  }
  for (double a : angles) {
    if (!(a >= 0.0 && a <= std::numbers::pi)) {
      throw ValidationError("angle " + std::to_string(a) + " outside [0, pi]");
    }
  }
}

CircuitSpec CircuitSpec::homogeneous(int n_qubits, Variant variant,
                                     std::span<const double> theta_per_module) {
  CircuitSpec spec;
  spec.n_qubits = n_qubits;
  spec.depth = static_cast<int>(theta_per_module.size());
  spec.variant = variant;
  spec.angles.reserve(theta_per_module.size() * n_qubits);
  for (double t : theta_per_module) {
    for (int i = 0; i < n_qubits; ++i) spec.angles.push_back(t);
  }
  return spec;
}

StateVector::StateVector(int n_qubits) : StateVector(n_qubits, 0) {}

StateVector::StateVector(int n_qubits, std::uint64_t index) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > 40) {
    throw ValidationError("n_qubits out of range: " + std::to_string(n_qubits));
  }
  amps_.assign(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
  if (index >= amps_.size()) throw ValidationError("basis index out of range");
  amps_[index] = 1.0;
}

StateVector::StateVector(int n_qubits, std::vector<Amplitude> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  if (amps_.size() != (std::size_t{1} << n_qubits)) {
    throw ValidationError("amplitude count does not match 2^n_qubits");
  }
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

StateVector initial_state(int n_qubits, const SimLimits& limits) {
  if (n_qubits < 1) throw ValidationError("n_qubits must be >= 1");
  if (n_qubits > limits.max_statevector_qubits) {
    throw CapacityError("statevector with " + std::to_string(n_qubits) +
                        " qubits exceeds the limit of " +
                        std::to_string(limits.max_statevector_qubits));
  }
  return StateVector(n_qubits);
}

namespace kernels {

void rx(std::span<Amplitude> psi, int q, double theta) {
  check_qubit(psi, q);
  const double c = std::cos(theta);
  const Amplitude ms{0.0, -std::sin(theta)};
  const std::size_t stride = std::size_t{1} << q;
  const std::size_t dim = psi.size();
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t k = base; k < base + stride; ++k) {
      const Amplitude a0 = psi[k];
      const Amplitude a1 = psi[k + stride];
      psi[k] = c * a0 + ms * a1;
      psi[k + stride] = ms * a0 + c * a1;
    }
  }
}

void rz(std::span<Amplitude> psi, int q, double theta) {
  check_qubit(psi, q);
  const Amplitude up = std::polar(1.0, -theta);
  const Amplitude down = std::polar(1.0, theta);
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= (k & bit) ? down : up;
}

void xx(std::span<Amplitude> psi, int q1, int q2, double angle) {
  check_qubit(psi, q1);
  check_qubit(psi, q2);
  if (q1 == q2) {
    // X_q X_q = I
    const Amplitude ph = std::polar(1.0, -angle);
    for (auto& a : psi) a *= ph;
    return;
  }
  const double c = std::cos(angle);
  const Amplitude ms{0.0, -std::sin(angle)};
  const std::size_t flip = (std::size_t{1} << q1) | (std::size_t{1} << q2);
  const std::size_t low = std::size_t{1} << std::min(q1, q2);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    // Visit each pair once, from the member with the lower qubit's bit clear.
    if (k & low) continue;
    const std::size_t j = k ^ flip;
    const Amplitude a = psi[k];
    const Amplitude b = psi[j];
    psi[k] = c * a + ms * b;
    psi[j] = ms * a + c * b;
  }
}

void zz(std::span<Amplitude> psi, int q1, int q2, double angle) {
  check_qubit(psi, q1);
  check_qubit(psi, q2);
  const Amplitude same = std::polar(1.0, -angle);
  const Amplitude diff = std::polar(1.0, angle);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const bool b1 = (k >> q1) & 1U;
    const bool b2 = (k >> q2) & 1U;
    psi[k] *= (b1 == b2) ? same : diff;
  }
}

void zz_ring(std::span<Amplitude> psi, int n, double angle) {
  // sum_i z_i z_{i+1} = n - 2 * (number of domain walls on the ring)
  std::vector<Amplitude> phase(static_cast<std::size_t>(n) + 1);
  for (int w = 0; w <= n; ++w) phase[w] = std::polar(1.0, -angle * (n - 2 * w));
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const int walls = std::popcount(static_cast<std::uint64_t>(k) ^ rotate_ring(k, n));
    psi[k] *= phase[walls];
  }
}

void rz_all(std::span<Amplitude> psi, int n, double angle) {
  std::vector<Amplitude> phase(static_cast<std::size_t>(n) + 1);
  for (int d = 0; d <= n; ++d) phase[d] = std::polar(1.0, -angle * (n - 2 * d));
  for (std::size_t k = 0; k < psi.size(); ++k) {
    psi[k] *= phase[std::popcount(static_cast<std::uint64_t>(k))];
  }
}

}  // namespace kernels

void apply_two_body_layer(std::span<Amplitude> psi, int n, Variant variant) {
  if (variant == Variant::CircuitI) {
    kernels::zz_ring(psi, n, kQuarterPi);
    return;
  }
  for (int i = 0; i < n; ++i) kernels::xx(psi, i, (i + 1) % n, kQuarterPi);
}

void apply_module(std::span<Amplitude> psi, const CircuitSpec& spec, int p) {
  if (p < 1 || p > spec.depth) {
    throw ValidationError("module index " + std::to_string(p) + " outside [1, " +
                          std::to_string(spec.depth) + "]");
  }
  if (psi.size() != (std::size_t{1} << spec.n_qubits)) {
    throw ValidationError("state dimension does not match circuit qubit count");
  }
  const int n = spec.n_qubits;
  auto rotations = [&] {
    for (int i = 0; i < n; ++i) kernels::rx(psi, i, spec.angle(p, i));
  };
  if (spec.order == LayerOrder::TwoBodyFirst) {
    apply_two_body_layer(psi, n, spec.variant);
    rotations();
    kernels::rz_all(psi, n, kQuarterPi);
  } else {
    rotations();
    kernels::rz_all(psi, n, kQuarterPi);
    apply_two_body_layer(psi, n, spec.variant);
  }
}

void apply_module(StateVector& state, const CircuitSpec& spec, int p) {
  apply_module(state.amplitudes(), spec, p);
}

StateVector run_circuit(const CircuitSpec& spec, const DepthObserver& observer,
                        const SimLimits& limits) {
  spec.validate();
  return run_circuit(spec, initial_state(spec.n_qubits, limits), observer);
}

StateVector run_circuit(const CircuitSpec& spec, StateVector state,
                        const DepthObserver& observer) {
  spec.validate();
  if (state.n_qubits() != spec.n_qubits) {
    throw ValidationError("initial state qubit count does not match circuit");
  }
  if (observer) observer(0, state);
  for (int p = 1; p <= spec.depth; ++p) {
    apply_module(state, spec, p);
    if (observer) observer(p, state);
  }
  return state;
}

void apply_module_columns(Eigen::MatrixXcd& columns, const CircuitSpec& spec, int p) {
  const auto rows = static_cast<std::size_t>(columns.rows());
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    apply_module(std::span<Amplitude>(columns.col(c).data(), rows), spec, p);
  }
}

DenseUnitary build_unitary(const CircuitSpec& spec, int p, const SimLimits& limits) {
  spec.validate();
  if (spec.n_qubits > limits.max_dense_qubits) {
    throw CapacityError("dense unitary with " + std::to_string(spec.n_qubits) +
                        " qubits exceeds the limit of " +
                        std::to_string(limits.max_dense_qubits));
  }
  if (p < 0 || p > spec.depth) {
    throw ValidationError("module index " + std::to_string(p) + " outside [0, " +
                          std::to_string(spec.depth) + "]");
  }
  const Eigen::Index dim = Eigen::Index{1} << spec.n_qubits;
  DenseUnitary u{Eigen::MatrixXcd::Identity(dim, dim), spec.n_qubits};
  for (int m = 1; m <= p; ++m) apply_module_columns(u.matrix, spec, m);
  return u;
}

}  // namespace scramble::sim
