// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "scramble/sim_core.hpp"

namespace scramble::obs {

using sim::PauliAxis;
using sim::StateVector;

/// Sites are 0-based throughout this header; labels and CSV output use
/// 1-based sites.
struct PauliTerm {
  int site;
  PauliAxis axis;
};

/// <psi| prod_k sigma_{site_k}^{axis_k} |psi>. Sites must be distinct.
/// Throws NumericalError if the imaginary residue exceeds 1e-10.
double expectation(const StateVector& state, std::span<const PauliTerm> terms);

constexpr std::array<PauliAxis, 3> kAxes = {PauliAxis::X, PauliAxis::Y, PauliAxis::Z};

/// N x 3 matrix, column order x, y, z.
Eigen::MatrixX3d first_moments(const StateVector& state);

/// <sigma_i^a sigma_{i+l}^b> for every site i, offset 1 <= l <= max_offset and
/// the nine axis pairs; site i+l wraps around the ring.
class SecondMoments {
 public:
  SecondMoments(int n_qubits, int max_offset);

  int n_qubits() const { return n_; }
  int max_offset() const { return max_offset_; }
  double& at(int site, int offset, PauliAxis a, PauliAxis b);
  double at(int site, int offset, PauliAxis a, PauliAxis b) const;

 private:
  std::size_t index(int site, int offset, PauliAxis a, PauliAxis b) const;

  int n_;
  int max_offset_;
  std::vector<double> values_;
};

/// max_offset must lie in [1, floor((N-1)/2)].
SecondMoments second_moments(const StateVector& state, int max_offset);

/// |<s^gamma_{i+l} s^beta_i> - <s^gamma_{i+l}><s^beta_i>|^2 with periodic wrap.
double connected_correlator(const StateVector& state, PauliAxis gamma, PauliAxis beta,
                            int site, int offset);

/// (1/N) sum_i <sigma_i^z>
double magnetization(const StateVector& state);

/// Reduced density matrix of the first `length` qubits.
Eigen::MatrixXcd reduced_density_matrix(const StateVector& state, int length);

/// Entanglement entropy (nats) of the first floor(N/2) qubits.
double von_neumann_half(const StateVector& state);
double von_neumann_entropy(const Eigen::MatrixXcd& rho);

/// Shannon entropy (nats) of the computational-basis distribution.
double basis_entropy(const StateVector& state);

/// Porter-Thomas reference entropy N ln 2 - 1 - gamma.
double pt_entropy(int n_qubits);

/// Mean Shannon entropy of 2^N exponentially distributed probabilities,
/// N ln 2 - 1 + gamma. Differs from pt_entropy by 2 gamma.
double porter_thomas_mean_entropy(int n_qubits);

struct EntropyReport {
  double von_neumann = 0.0;
  double basis = 0.0;
  double pt_reference = 0.0;
  int partition_length = 0;

  /// S_v / (L ln 2); 1 for a maximally entangled half chain.
  double volume_coefficient() const;
};

EntropyReport entropy_report(const StateVector& state);

/// Normalised Frobenius norms ||[sigma_src^axis, U(p) sigma_j^axis U(p)^dag]||_F / 2^{N/2}
/// for p = 0..depth and every site j. Row p holds depth p.
struct OtocField {
  PauliAxis axis = PauliAxis::Z;
  int source_site = 0;
  int n_qubits = 0;
  int depth = 0;
  Eigen::MatrixXd values;      // (depth+1) x N, normalised
  Eigen::MatrixXd raw_values;  // (depth+1) x N, unnormalised norms

  double at(int p, int site) const { return values(p, site); }
};

OtocField otoc(const sim::CircuitSpec& spec, PauliAxis axis, int source_site,
               const sim::SimLimits& limits = {});

/// Entrywise mean of normalised (and raw) fields of equal shape.
OtocField average(std::span<const OtocField> fields);

}  // namespace scramble::obs
