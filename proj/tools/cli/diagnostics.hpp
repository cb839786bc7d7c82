// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "run_config.hpp"
#include "scramble/observables.hpp"

namespace scramble::cli {

/// Realization-averaged diagnostics; row p of every matrix holds depth p = 0..P.
struct DiagResult {
  int n_qubits = 0;
  int depth = 0;
  int realizations = 0;
  double pt_reference = 0.0;
  double pt_mean = 0.0;
  int partition_length = 0;

  Eigen::VectorXd magnetization;
  Eigen::VectorXd magnetization_std;
  Eigen::VectorXd von_neumann;
  Eigen::VectorXd basis_entropy;
  /// Column (l-1)*9 + 3*gamma + beta holds C_{gamma beta}(site, l).
  Eigen::MatrixXd correlators;
  int correlator_site = 1;
  int max_offset = 0;
  bool has_otoc = false;
  obs::OtocField otoc;

  bool has(const std::string& name) const;
  std::vector<std::string> selection;
};

/// Circuit realization r as used by the diagnostics.
sim::CircuitSpec diag_spec(const RunConfig& c, int r);

DiagResult run_diagnostics(const RunConfig& c);

/// One CSV per selected diagnostic plus optional SVG renders. Returns the
/// files written.
std::vector<std::filesystem::path> write_diagnostics(const DiagResult& r, const std::filesystem::path& dir,
                                                     bool svg);

}  // namespace scramble::cli
