// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace scramble::nn {

/// Row-major storage used for every activation and parameter: rows index
/// batch (and time/site) entries, columns index features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Shaped, row-major array used at API boundaries (datasets, model files).
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::int64_t> shape, std::vector<double> data);
  explicit Tensor(std::vector<std::int64_t> shape);

  std::int64_t size() const;
  static std::int64_t element_count(const std::vector<std::int64_t>& shape);
  std::string shape_string() const;
};

std::string shape_string(const std::vector<std::int64_t>& shape);

}  // namespace scramble::nn
