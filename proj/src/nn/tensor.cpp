// SPDX-License-Identifier: Apache-2.0
#include "scramble/nn/tensor.hpp"

#include "scramble/error.hpp"

namespace scramble::nn {

std::int64_t Tensor::element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw ValidationError("tensor dimensions must be positive, got " + nn::shape_string(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<std::int64_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (static_cast<std::int64_t>(data.size()) != element_count(shape)) {
    throw ValidationError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + nn::shape_string(shape));
  }
}

Tensor::Tensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
  data.assign(static_cast<std::size_t>(element_count(shape)), 0.0);
}

std::int64_t Tensor::size() const { return static_cast<std::int64_t>(data.size()); }

std::string Tensor::shape_string() const { return nn::shape_string(shape); }

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace scramble::nn
