// SPDX-License-Identifier: Apache-2.0
#include "scramble/gp_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "scramble/error.hpp"

namespace scramble::gp {

namespace {
constexpr double kEigenClampTolerance = 1e-12;
}

void GpConfig::validate() const {
  if (length < 1) {
    throw ValidationError("gp.length must be >= 1, got " + std::to_string(length));
  }
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw ValidationError("gp.amplitude must be finite and >= 0");
  }
  if (!(correlation_length > 0.0) || !std::isfinite(correlation_length)) {
    throw ValidationError("gp.correlation_length must be finite and > 0");
  }
}

Eigen::MatrixXd build_kernel(const GpConfig& cfg) {
  cfg.validate();
  const int n = cfg.length;
  const double inv = 1.0 / (2.0 * cfg.correlation_length * cfg.correlation_length);
  Eigen::MatrixXd kernel(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = static_cast<double>(i - j);
      kernel(i, j) = cfg.amplitude * std::exp(-d * d * inv);
    }
  }
  return kernel;
}

KernelFactor factor_kernel(const Eigen::MatrixXd& kernel) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("kernel eigendecomposition did not converge");
  }
  KernelFactor f;
  f.eigenvectors = solver.eigenvectors();
  f.eigenvalues = solver.eigenvalues();
  const double scale = std::max(1.0, kernel.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < f.eigenvalues.size(); ++k) {
    double& lambda = f.eigenvalues[k];
    if (lambda < 0.0) {
      if (lambda < -kEigenClampTolerance * scale) {
        throw NumericalError("kernel is not positive semidefinite: eigenvalue " +
                             std::to_string(lambda));
      }
      lambda = 0.0;
    }
  }
  f.sqrt_factor = f.eigenvectors * f.eigenvalues.cwiseSqrt().asDiagonal();
  return f;
}

std::vector<double> raw_trajectory(const KernelFactor& factor, std::uint64_t seed) {
  const Eigen::Index n = factor.sqrt_factor.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (Eigen::Index k = 0; k < n; ++k) x[k] = normal(rng);
  const Eigen::VectorXd y = factor.sqrt_factor * x;
  return {y.data(), y.data() + n};
}

std::vector<double> raw_trajectory(const GpConfig& cfg) {
  return raw_trajectory(factor_kernel(build_kernel(cfg)), cfg.seed);
}

AngleTrajectory map_to_angles(std::span<const double> raw) {
  AngleTrajectory out;
  out.values.reserve(raw.size());
  for (double r : raw) {
    out.values.push_back(std::clamp(r + std::numbers::pi / 2, 0.0, std::numbers::pi));
  }
  return out;
}

AngleTrajectory sample_angles(const GpConfig& cfg) {
  const auto raw = raw_trajectory(cfg);
  return map_to_angles(raw);
}

}  // namespace scramble::gp
