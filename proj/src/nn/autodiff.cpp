// SPDX-License-Identifier: Apache-2.0
#include "scramble/nn/autodiff.hpp"

#include <cmath>
#include <string>

#include "scramble/error.hpp"

namespace scramble::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("shape mismatch in " + what);
}

void same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw ValidationError("operands live on different tapes");
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

const Matrix& Var::value() const { return tape->node(id).val(); }

Gradients zeros_like(std::span<const Matrix> values) {
  Gradients g;
  g.reserve(values.size());
  for (const auto& v : values) g.push_back(Matrix::Zero(v.rows(), v.cols()));
  return g;
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const Matrix& value, int slot) {
  Node n;
  n.external = &value;
  n.needs_grad = record_;
  n.slot = slot;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Matrix value, std::vector<Var> parents, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const auto& p : parents) n.needs_grad = n.needs_grad || node(p.id).needs_grad;
    if (n.needs_grad) n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::backward(Var loss, Gradients& grads) {
  if (!record_) throw ValidationError("backward on a tape that does not record");
  if (loss.tape != this) throw ValidationError("loss node belongs to another tape");
  Node& root = node(loss.id);
  if (root.val().rows() != 1 || root.val().cols() != 1) {
    throw ValidationError("backward needs a 1x1 loss, got " + dims(root.val()));
  }
  if (!root.needs_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.back) n.back(*this, id);
    if (n.slot >= 0) {
      auto& g = grads.at(static_cast<std::size_t>(n.slot));
      require(g.rows() == n.grad.rows() && g.cols() == n.grad.cols(), "gradient buffer");
      g += n.grad;
    }
    if (n.slot < 0) n.grad.resize(0, 0);
  }
}

Var matmul(Var a, Var b) {
  same_tape(a, b);
  require(a.cols() == b.rows(), "matmul " + dims(a.value()) + " * " + dims(b.value()));
  Matrix out = a.value() * b.value();
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    if (t.needs_grad(a.id)) t.accumulate(a.id, g * b.value().transpose());
    if (t.needs_grad(b.id)) t.accumulate(b.id, a.value().transpose() * g);
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  return a.tape->push(a.value() + b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.node(self).grad);
    t.accumulate(b.id, t.node(self).grad);
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  return a.tape->push(a.value() - b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.node(self).grad);
    if (t.needs_grad(b.id)) t.accumulate(b.id, -t.node(self).grad);
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    if (t.needs_grad(a.id)) t.accumulate(a.id, g.cwiseProduct(b.value()));
    if (t.needs_grad(b.id)) t.accumulate(b.id, g.cwiseProduct(a.value()));
  });
}

Var add_row(Var a, Var row) {
  same_tape(a, row);
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape->push(std::move(out), {a, row}, [a, row](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    t.accumulate(a.id, g);
    if (t.needs_grad(row.id)) t.accumulate(row.id, g.colwise().sum());
  });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  return a.tape->push(std::move(out), {a}, [a](Tape& t, int self) {
    const auto& y = t.node(self).value.array();
    t.accumulate(a.id, (t.node(self).grad.array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.tape->push(std::move(out), {a}, [a](Tape& t, int self) {
    const auto& y = t.node(self).value.array();
    t.accumulate(a.id, (t.node(self).grad.array() * (1.0 - y.square())).matrix());
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols");
  Matrix out = a.value().middleCols(start, count);
  return a.tape->push(std::move(out), {a}, [a, start, count](Tape& t, int self) {
    Tape::Node& p = t.node(a.id);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(a.rows(), a.cols());
    p.grad.middleCols(start, count) += t.node(self).grad;
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows");
  Matrix out = a.value().middleRows(start, count);
  return a.tape->push(std::move(out), {a}, [a, start, count](Tape& t, int self) {
    Tape::Node& p = t.node(a.id);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(a.rows(), a.cols());
    p.grad.middleRows(start, count) += t.node(self).grad;
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concat_rows of nothing");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const auto& p : parts) {
    same_tape(parts[0], p);
    require(p.cols() == cols, "concat_rows");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return parts[0].tape->push(std::move(out), parents, [parents](Tape& t, int self) {
    Eigen::Index r0 = 0;
    for (const auto& p : parents) {
      const Eigen::Index n = p.rows();
      if (t.needs_grad(p.id)) t.accumulate(p.id, t.node(self).grad.middleRows(r0, n));
      r0 += n;
    }
  });
}

Var unfold(Var a, int sites, int kernel, Padding padding) {
  require(sites >= 1 && a.rows() % sites == 0, "unfold (rows not a multiple of sites)");
  require(kernel >= 1 && kernel % 2 == 1, "unfold (kernel must be odd)");
  const Eigen::Index cols = a.cols();
  const Eigen::Index blocks = a.rows() / sites;
  const int half = kernel / 2;
  const Matrix& x = a.value();
  Matrix out = Matrix::Zero(a.rows(), kernel * cols);
  // source(s, k): spatial index feeding tap k at site s, or -1 for zero pad.
  auto source = [sites, half, padding](int s, int k) {
    int j = s + k - half;
    if (j >= 0 && j < sites) return j;
    if (padding == Padding::Zero) return -1;
    return ((j % sites) + sites) % sites;
  };
  for (Eigen::Index b = 0; b < blocks; ++b) {
    for (int s = 0; s < sites; ++s) {
      for (int k = 0; k < kernel; ++k) {
        const int j = source(s, k);
        if (j >= 0) out.block(b * sites + s, k * cols, 1, cols) = x.row(b * sites + j);
      }
    }
  }
  return a.tape->push(std::move(out), {a}, [a, sites, kernel, blocks, cols, source](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    Matrix dx = Matrix::Zero(a.rows(), cols);
    for (Eigen::Index b = 0; b < blocks; ++b) {
      for (int s = 0; s < sites; ++s) {
        for (int k = 0; k < kernel; ++k) {
          const int j = source(s, k);
          if (j >= 0) dx.row(b * sites + j) += g.block(b * sites + s, k * cols, 1, cols);
        }
      }
    }
    t.accumulate(a.id, dx);
  });
}

Var max_pool_sites(Var a, int sites) {
  require(sites >= 1 && a.rows() % sites == 0, "max_pool_sites (rows not a multiple of sites)");
  const Eigen::Index blocks = a.rows() / sites;
  const Eigen::Index cols = a.cols();
  const Matrix& x = a.value();
  Matrix out(blocks, cols);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(blocks * cols));
  for (Eigen::Index b = 0; b < blocks; ++b) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      Eigen::Index best = b * sites;
      for (int s = 1; s < sites; ++s) {
        if (x(b * sites + s, c) > x(best, c)) best = b * sites + s;
      }
      out(b, c) = x(best, c);
      argmax[static_cast<std::size_t>(b * cols + c)] = best;
    }
  }
  return a.tape->push(std::move(out), {a}, [a, blocks, cols, argmax = std::move(argmax)](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    Matrix dx = Matrix::Zero(a.rows(), cols);
    for (Eigen::Index b = 0; b < blocks; ++b) {
      for (Eigen::Index c = 0; c < cols; ++c) dx(argmax[static_cast<std::size_t>(b * cols + c)], c) += g(b, c);
    }
    t.accumulate(a.id, dx);
  });
}

Var squared_error(Var pred, const Matrix& target, double normalizer) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(),
          "squared_error " + dims(pred.value()) + " vs " + dims(target));
  if (!(normalizer > 0.0)) throw ValidationError("squared_error normalizer must be positive");
  Matrix diff = pred.value() - target;
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / normalizer;
  return pred.tape->push(std::move(out), {pred}, [pred, diff = std::move(diff), normalizer](Tape& t, int self) {
    t.accumulate(pred.id, diff * (2.0 * t.node(self).grad(0, 0) / normalizer));
  });
}

Var mse(Var pred, const Matrix& target) {
  if (target.size() == 0) throw ValidationError("mse over zero entries");
  return squared_error(pred, target, static_cast<double>(target.size()));
}

}  // namespace scramble::nn
