// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace scramble::sim {

using Amplitude = std::complex<double>;

enum class PauliAxis { X, Y, Z };

/// CircuitI couples neighbours with exp(-i pi/4 Z Z), CircuitII with
/// exp(-i pi/4 X X).
enum class Variant { CircuitI, CircuitII };

/// Order of the three layers inside one module. TwoBodyFirst applies the
/// two-body layer, then exp(-i theta X), then exp(-i pi/4 Z). OperatorString
/// applies the same factors right-to-left as written in the product formula:
/// exp(-i theta X), then exp(-i pi/4 Z), then the two-body layer.
enum class LayerOrder { TwoBodyFirst, OperatorString };

char axis_char(PauliAxis a);
PauliAxis parse_axis(std::string_view s);
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

struct SimLimits {
  int max_statevector_qubits = 26;
  int max_dense_qubits = 10;
};

/// One circuit realization: n_qubits on a ring, depth modules, and a
/// depth x n_qubits grid of rotation angles (row p-1 holds module p).
struct CircuitSpec {
  int n_qubits = 2;
  int depth = 1;
  Variant variant = Variant::CircuitI;
  LayerOrder order = LayerOrder::TwoBodyFirst;
  std::vector<double> angles;

  /// p is 1-based, site 0-based.
  double angle(int p, int site) const {
    return angles[static_cast<std::size_t>(p - 1) * n_qubits + site];
  }
  bool is_homogeneous() const;
  void validate() const;

  static CircuitSpec homogeneous(int n_qubits, Variant variant,
                                 std::span<const double> theta_per_module);
};

class StateVector {
 public:
  /// |00...0>, every qubit in the +1 eigenstate of sigma^z.
  explicit StateVector(int n_qubits);
  /// Basis state |index>.
  StateVector(int n_qubits, std::uint64_t index);
  StateVector(int n_qubits, std::vector<Amplitude> amplitudes);

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  std::span<Amplitude> amplitudes() noexcept { return amps_; }
  std::span<const Amplitude> amplitudes() const noexcept { return amps_; }
  const Amplitude& operator[](std::size_t k) const { return amps_[k]; }

  double norm() const;

 private:
  int n_qubits_;
  std::vector<Amplitude> amps_;
};

StateVector initial_state(int n_qubits, const SimLimits& limits = {});

/// Gate kernels acting in place on a 2^n amplitude array. Qubit q is bit q
/// of the basis index.
namespace kernels {
void rx(std::span<Amplitude> psi, int q, double theta);  // exp(-i theta X)
void rz(std::span<Amplitude> psi, int q, double theta);  // exp(-i theta Z)
void xx(std::span<Amplitude> psi, int q1, int q2, double angle);
void zz(std::span<Amplitude> psi, int q1, int q2, double angle);
/// exp(-i angle sum_i Z_i Z_{i+1}) on a ring of n qubits as one phase mask.
void zz_ring(std::span<Amplitude> psi, int n, double angle);
/// exp(-i angle sum_i Z_i) as one phase mask.
void rz_all(std::span<Amplitude> psi, int n, double angle);
}  // namespace kernels

void apply_two_body_layer(std::span<Amplitude> psi, int n, Variant variant);

/// Applies module p (1-based) of spec to an amplitude array.
void apply_module(std::span<Amplitude> psi, const CircuitSpec& spec, int p);
void apply_module(StateVector& state, const CircuitSpec& spec, int p);

using DepthObserver = std::function<void(int p, const StateVector& state)>;

/// Runs modules 1..depth from the initial state. The observer, when set, is
/// called once with p = 0 before any module and after every module.
StateVector run_circuit(const CircuitSpec& spec, const DepthObserver& observer = {},
                        const SimLimits& limits = {});
StateVector run_circuit(const CircuitSpec& spec, StateVector state,
                        const DepthObserver& observer = {});

struct DenseUnitary {
  Eigen::MatrixXcd matrix;
  int n_qubits = 0;
};

/// Product U_p ... U_1 as an explicit matrix; p = 0 gives the identity.
DenseUnitary build_unitary(const CircuitSpec& spec, int p, const SimLimits& limits = {});

/// Left-multiplies every column of `columns` by module p.
void apply_module_columns(Eigen::MatrixXcd& columns, const CircuitSpec& spec, int p);

}  // namespace scramble::sim
