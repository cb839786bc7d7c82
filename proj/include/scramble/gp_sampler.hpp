// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace scramble::gp {

/// Gaussian random process with kernel c0 * exp(-(n-m)^2 / (2 sigma^2)) over
/// module indices 0..length-1.
struct GpConfig {
  int length = 1;
  double amplitude = (std::numbers::pi / 12) * (std::numbers::pi / 12);
  double correlation_length = 3.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Angles in radians, each in [0, pi].
struct AngleTrajectory {
  std::vector<double> values;
};

Eigen::MatrixXd build_kernel(const GpConfig& cfg);

/// Eigendecomposition C = Q diag(lambda) Q^T with eigenvalues clamped at zero.
/// The factor Q sqrt(lambda) is what the sampler multiplies with.
struct KernelFactor {
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd eigenvalues;  // clamped, ascending
  Eigen::MatrixXd sqrt_factor;  // Q sqrt(Lambda)
};

KernelFactor factor_kernel(const Eigen::MatrixXd& kernel);

/// Q sqrt(Lambda) x with x drawn from a generator seeded by cfg.seed.
std::vector<double> raw_trajectory(const GpConfig& cfg);

/// Same draw with a pre-computed factor; lets callers amortise the
/// eigendecomposition across many seeds of one kernel.
std::vector<double> raw_trajectory(const KernelFactor& factor,
                                   std::uint64_t seed);

/// theta_p = clamp(raw_p + pi/2, 0, pi).
AngleTrajectory map_to_angles(std::span<const double> raw);

AngleTrajectory sample_angles(const GpConfig& cfg);

/// Seed for the trajectory of qubit `site` (0-based) in an inhomogeneous grid.
constexpr std::uint64_t site_seed(std::uint64_t seed, int site) {
  return seed ^ static_cast<std::uint64_t>(site);
}

}  // namespace scramble::gp
