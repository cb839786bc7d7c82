// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "scramble/nn/tensor.hpp"

namespace scramble::nn {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Gradient buffers, one per registered parameter, same shapes as the values.
using Gradients = std::vector<Matrix>;

/// Zero-filled gradient buffers shaped like `values`.
Gradients zeros_like(std::span<const Matrix> values);

/// Spatial padding for the 1-D convolution unfold.
enum class Padding { Zero, Periodic };

/// Records a forward computation and replays it in reverse.
///
/// Parameters are referenced, not copied, so the matrices passed to param()
/// must outlive the tape. A tape built with record = false keeps values only.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}

  Var constant(Matrix value);
  Var param(const Matrix& value, int slot);

  /// Accumulates d(loss)/d(param) into grads[slot]. `loss` must be 1x1.
  void backward(Var loss, Gradients& grads);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    bool needs_grad = false;
    int slot = -1;
    std::function<void(Tape&, int)> back;

    const Matrix& val() const { return external ? *external : value; }
  };
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Var push(Matrix value, std::vector<Var> parents, std::function<void(Tape&, int)> back);
  /// Adds g into the gradient of node `id` (no-op for nodes without grad).
  template <class Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = node(id);
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }
  bool needs_grad(int id) const { return node(id).needs_grad; }

 private:
  bool record_;
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// a + broadcast of the 1 x cols row vector `row` to every row.
Var add_row(Var a, Var row);
Var sigmoid(Var a);
Var tanh(Var a);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var concat_rows(std::span<const Var> parts);

/// Rows are grouped into consecutive blocks of `sites` rows (one spatial line
/// each). Output row r holds, for tap k = 0..kernel-1, the input row at spatial
/// offset k - kernel/2 within its block, giving rows x (kernel * cols).
Var unfold(Var a, int sites, int kernel, Padding padding);

/// Max over each block of `sites` consecutive rows, per column. Ties go to the
/// lowest row; only that row receives gradient.
Var max_pool_sites(Var a, int sites);

/// sum((pred - target)^2) / normalizer as a 1x1 node.
Var squared_error(Var pred, const Matrix& target, double normalizer);
/// Mean squared error over all entries.
Var mse(Var pred, const Matrix& target);

}  // namespace scramble::nn
