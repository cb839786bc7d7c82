// SPDX-License-Identifier: Apache-2.0
#include "scramble/observables.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "scramble/error.hpp"

namespace scramble::obs {

namespace {

constexpr double kImagTolerance = 1e-10;
constexpr double kEulerGamma = 0.57721566490153286060;

int axis_index(PauliAxis a) { return static_cast<int>(a); }

void check_site(int site, int n) {
  if (site < 0 || site >= n) {
    throw ValidationError("site " + std::to_string(site) + " outside [0, " +
                          std::to_string(n - 1) + "]");
  }
}

/// A Pauli string P acts on basis states as P|k> = i^ny (-1)^{|k & z|} |k ^ x>.
struct PauliMasks {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  int ny = 0;
};

PauliMasks masks_for(std::span<const PauliTerm> terms, int n) {
  PauliMasks m;
  for (const auto& t : terms) {
    check_site(t.site, n);
    const std::uint64_t bit = 1ULL << t.site;
    if ((m.x | m.z) & bit) throw ValidationError("repeated site in Pauli product");
    switch (t.axis) {
      case PauliAxis::X: m.x |= bit; break;
      case PauliAxis::Z: m.z |= bit; break;
      case PauliAxis::Y:
        m.x |= bit;
        m.z |= bit;
        ++m.ny;
        break;
    }
  }
  return m;
}

std::complex<double> i_power(int k) {
  switch (k & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

/// Matrix element S_{k^x, k} of a single-site Pauli.
std::complex<double> single_site_phase(PauliAxis axis, std::uint64_t k, int site) {
  const bool one = (k >> site) & 1ULL;
  switch (axis) {
    case PauliAxis::X: return {1.0, 0.0};
    case PauliAxis::Z: return {one ? -1.0 : 1.0, 0.0};
    case PauliAxis::Y: return {0.0, one ? -1.0 : 1.0};
  }
  return {};
}

}  // namespace

double expectation(const StateVector& state, std::span<const PauliTerm> terms) {
  const auto m = masks_for(terms, state.n_qubits());
  const auto psi = state.amplitudes();
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const auto term = std::conj(psi[k ^ m.x]) * psi[k];
    if (std::popcount(k & m.z) & 1) {
      sum -= term;
    } else {
      sum += term;
    }
  }
  sum *= i_power(m.ny);
  if (std::abs(sum.imag()) > kImagTolerance) {
    throw NumericalError("expectation value has imaginary residue " +
                         std::to_string(sum.imag()));
  }
  return sum.real();
}

Eigen::MatrixX3d first_moments(const StateVector& state) {
  const int n = state.n_qubits();
  Eigen::MatrixX3d out(n, 3);
  for (int i = 0; i < n; ++i) {
    for (auto a : kAxes) {
      const PauliTerm t{i, a};
      out(i, axis_index(a)) = expectation(state, {&t, 1});
    }
  }
  return out;
}

SecondMoments::SecondMoments(int n_qubits, int max_offset)
    : n_(n_qubits),
      max_offset_(max_offset),
      values_(static_cast<std::size_t>(n_qubits) * max_offset * 9, 0.0) {}

std::size_t SecondMoments::index(int site, int offset, PauliAxis a, PauliAxis b) const {
  if (site < 0 || site >= n_ || offset < 1 || offset > max_offset_) {
    throw ValidationError("second-moment index out of range");
  }
  return (static_cast<std::size_t>(site) * max_offset_ + (offset - 1)) * 9 +
         axis_index(a) * 3 + axis_index(b);
}

double& SecondMoments::at(int site, int offset, PauliAxis a, PauliAxis b) {
  return values_[index(site, offset, a, b)];
}

double SecondMoments::at(int site, int offset, PauliAxis a, PauliAxis b) const {
  return values_[index(site, offset, a, b)];
}

SecondMoments second_moments(const StateVector& state, int max_offset) {
  const int n = state.n_qubits();
  if (max_offset < 1 || max_offset > (n - 1) / 2) {
    throw ValidationError("max_offset " + std::to_string(max_offset) +
                          " outside [1, floor((N-1)/2)] for N = " + std::to_string(n));
  }
  SecondMoments out(n, max_offset);
  for (int i = 0; i < n; ++i) {
    for (int l = 1; l <= max_offset; ++l) {
      const int j = (i + l) % n;
      for (auto a : kAxes) {
        for (auto b : kAxes) {
          const PauliTerm terms[2] = {{i, a}, {j, b}};
          out.at(i, l, a, b) = expectation(state, terms);
        }
      }
    }
  }
  return out;
}

double connected_correlator(const StateVector& state, PauliAxis gamma, PauliAxis beta,
                            int site, int offset) {
  const int n = state.n_qubits();
  check_site(site, n);
  const int other = ((site + offset) % n + n) % n;
  if (other == site) throw ValidationError("correlator offset maps a site onto itself");
  const PauliTerm pair[2] = {{other, gamma}, {site, beta}};
  const PauliTerm g{other, gamma};
  const PauliTerm b{site, beta};
  const double c = expectation(state, pair) -
                   expectation(state, {&g, 1}) * expectation(state, {&b, 1});
  return c * c;
}

double magnetization(const StateVector& state) {
  const int n = state.n_qubits();
  const auto psi = state.amplitudes();
  // sum_i <z_i> = sum_k |psi_k|^2 (n - 2 popcount(k))
  double s = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    s += std::norm(psi[k]) * (n - 2 * std::popcount(static_cast<std::uint64_t>(k)));
  }
  return s / n;
}

Eigen::MatrixXcd reduced_density_matrix(const StateVector& state, int length) {
  const int n = state.n_qubits();
  if (length < 0 || length > n) throw ValidationError("partition length out of range");
  const Eigen::Index rows = Eigen::Index{1} << length;
  const Eigen::Index cols = Eigen::Index{1} << (n - length);
  // psi[a + 2^L b] with a on the kept qubits: column-major rows x cols.
  const Eigen::Map<const Eigen::MatrixXcd> m(state.amplitudes().data(), rows, cols);
  return m * m.adjoint();
}

double von_neumann_entropy(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("reduced density matrix eigendecomposition failed");
  }
  double s = 0.0;
  for (double lambda : solver.eigenvalues()) {
    if (lambda >= 1e-14) s -= lambda * std::log(lambda);
  }
  return std::max(0.0, s);
}

double von_neumann_half(const StateVector& state) {
  if (state.n_qubits() < 2) throw ValidationError("half-chain entropy needs N >= 2");
  return von_neumann_entropy(reduced_density_matrix(state, state.n_qubits() / 2));
}

double basis_entropy(const StateVector& state) {
  double s = 0.0;
  for (const auto& a : state.amplitudes()) {
    const double prob = std::norm(a);
    if (prob >= 1e-16) s -= prob * std::log(prob);
  }
  return std::max(0.0, s);
}

double pt_entropy(int n_qubits) {
  if (n_qubits < 1) throw ValidationError("pt_entropy needs N >= 1");
  return n_qubits * std::numbers::ln2 - 1.0 - kEulerGamma;
}

double porter_thomas_mean_entropy(int n_qubits) {
  if (n_qubits < 1) throw ValidationError("porter_thomas_mean_entropy needs N >= 1");
  return n_qubits * std::numbers::ln2 - 1.0 + kEulerGamma;
}

double EntropyReport::volume_coefficient() const {
  return partition_length > 0 ? von_neumann / (partition_length * std::numbers::ln2) : 0.0;
}

EntropyReport entropy_report(const StateVector& state) {
  EntropyReport r;
  r.partition_length = state.n_qubits() / 2;
  r.von_neumann = von_neumann_half(state);
  r.basis = basis_entropy(state);
  r.pt_reference = pt_entropy(state.n_qubits());
  return r;
}

OtocField otoc(const sim::CircuitSpec& spec, PauliAxis axis, int source_site,
               const sim::SimLimits& limits) {
  spec.validate();
  const int n = spec.n_qubits;
  check_site(source_site, n);
  if (n > limits.max_dense_qubits) {
    throw CapacityError("OTOC needs a dense unitary; " + std::to_string(n) +
                        " qubits exceeds the limit of " +
                        std::to_string(limits.max_dense_qubits));
  }
  const Eigen::Index dim = Eigen::Index{1} << n;
  OtocField field;
  field.axis = axis;
  field.source_site = source_site;
  field.n_qubits = n;
  field.depth = spec.depth;
  field.values = Eigen::MatrixXd::Zero(spec.depth + 1, n);
  field.raw_values = Eigen::MatrixXd::Zero(spec.depth + 1, n);

  // ||[A, U B U^dag]||_F = ||[U^dag A U, B]||_F, so only the source operator is
  // evolved: W = U^dag (A U) with A a signed row permutation.
  const std::uint64_t src_flip = (axis == PauliAxis::Z) ? 0ULL : (1ULL << source_site);
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
  Eigen::MatrixXcd au(dim, dim);
  Eigen::MatrixXcd w(dim, dim);
  const double norm_scale = std::sqrt(static_cast<double>(dim));

  for (int p = 0; p <= spec.depth; ++p) {
    if (p > 0) sim::apply_module_columns(u, spec, p);
    for (Eigen::Index k = 0; k < dim; ++k) {
      const auto uk = static_cast<std::uint64_t>(k);
      au.row(static_cast<Eigen::Index>(uk ^ src_flip)) =
          single_site_phase(axis, uk, source_site) * u.row(k);
    }
    w.noalias() = u.adjoint() * au;

    for (int j = 0; j < n; ++j) {
      const std::uint64_t flip = (axis == PauliAxis::Z) ? 0ULL : (1ULL << j);
      std::vector<std::complex<double>> phase(static_cast<std::size_t>(dim));
      for (Eigen::Index k = 0; k < dim; ++k) {
        phase[k] = single_site_phase(axis, static_cast<std::uint64_t>(k), j);
      }
      double sum = 0.0;
      for (Eigen::Index b = 0; b < dim; ++b) {
        const auto bf = static_cast<Eigen::Index>(static_cast<std::uint64_t>(b) ^ flip);
        for (Eigen::Index a = 0; a < dim; ++a) {
          const auto af = static_cast<Eigen::Index>(static_cast<std::uint64_t>(a) ^ flip);
          // (W S)_{ab} - (S W)_{ab}
          const auto c = w(a, bf) * phase[b] - phase[af] * w(af, b);
          sum += std::norm(c);
        }
      }
      field.raw_values(p, j) = std::sqrt(sum);
      field.values(p, j) = field.raw_values(p, j) / norm_scale;
    }
  }
  return field;
}

OtocField average(std::span<const OtocField> fields) {
  if (fields.empty()) throw ValidationError("cannot average an empty set of OTOC fields");
  OtocField out = fields.front();
  for (std::size_t k = 1; k < fields.size(); ++k) {
    if (fields[k].values.rows() != out.values.rows() ||
        fields[k].values.cols() != out.values.cols()) {
      throw ValidationError("OTOC fields of different shape cannot be averaged");
    }
    out.values += fields[k].values;
    out.raw_values += fields[k].raw_values;
  }
  out.values /= static_cast<double>(fields.size());
  out.raw_values /= static_cast<double>(fields.size());
  return out;
}

}  // namespace scramble::obs
