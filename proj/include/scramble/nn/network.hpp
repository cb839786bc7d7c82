// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scramble/nn/autodiff.hpp"
#include "scramble/nn/tensor.hpp"

namespace scramble::nn {

enum class Architecture { Lstm, ConvLstm };

std::string architecture_name(Architecture a);
Architecture parse_architecture(const std::string& s);
std::string padding_name(Padding p);
Padding parse_padding(const std::string& s);

struct NetworkConfig {
  Architecture architecture = Architecture::Lstm;
  int input_features = 2;
  /// LSTM: units per recurrent layer, followed by a linear dense layer.
  /// ConvLSTM: filters per hidden layer; a final ConvLSTM layer with
  /// output_width filters and spatial max pooling follow.
  std::vector<int> hidden = {200, 200, 200};
  int output_width = 30;
  int kernel_size = 3;
  Padding padding = Padding::Zero;
  std::uint64_t seed = 0;

  void validate() const;
  bool size_agnostic() const { return architecture == Architecture::ConvLstm; }

  static NetworkConfig lstm(int output_width, std::vector<int> hidden = {200, 200, 200});
  static NetworkConfig convlstm(int output_width, std::vector<int> hidden = {70, 100, 100, 70});
};

/// Named parameter matrices in a fixed registration order.
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Matrix> values;

  int add(std::string name, Matrix value);
  std::size_t size() const { return values.size(); }
  std::size_t scalar_count() const;
  int index(const std::string& name) const;
};

/// A minibatch in time-major order. Row index is (t * batch + b) * sites + s;
/// sites = 1 for the LSTM stack.
struct Batch {
  int batch = 0;
  int steps = 0;
  int sites = 1;
  Matrix inputs;
};

// Single-layer building blocks. Gate column order inside every 4H block is
// input, forget, cell candidate, output.

/// x_all: (steps * B) x F. Returns (steps * B) x H.
Var lstm_sequence(Var x_all, int steps, Var kernel, Var recurrent, Var bias);

/// x_all: (steps * B * sites) x F. kernel: (k F) x 4H, recurrent: (k H) x 4H.
/// Returns (steps * B * sites) x H.
Var convlstm_sequence(Var x_all, int steps, int sites, int kernel_size, Padding padding, Var kernel,
                      Var recurrent, Var bias);

/// x W + b per row.
Var dense(Var x, Var kernel, Var bias);

/// Plain-value conveniences: one sequence of P x F, or P x N x F stored as
/// (P N) x F, returning P x H or (P N) x H.
Matrix lstm_forward(const Matrix& kernel, const Matrix& recurrent, const Matrix& bias,
                    const Matrix& sequence);
Matrix convlstm_forward(const Matrix& kernel, const Matrix& recurrent, const Matrix& bias,
                        const Matrix& sequence, int sites, Padding padding = Padding::Zero);

class Network {
 public:
  /// Fresh, seeded initialization.
  explicit Network(NetworkConfig config);
  /// Adopts existing parameters; names and shapes must match config.
  Network(NetworkConfig config, ParameterSet params);

  const NetworkConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }

  /// (steps * batch) x output_width, time-major.
  Var forward(Tape& tape, const Batch& batch) const;
  Matrix predict(const Batch& batch) const;

  /// Parameter layout config implies, without initializing values.
  static std::vector<std::pair<std::string, std::vector<std::int64_t>>> layout(const NetworkConfig& c);

 private:
  NetworkConfig config_;
  ParameterSet params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;

  static AdamState like(const ParameterSet& params);
};

/// One bias-corrected Adam update. Throws NumericalError, leaving params and
/// state untouched, if any gradient entry is not finite.
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state,
               const AdamConfig& cfg = {});

double global_norm(const Gradients& grads);
/// Rescales grads so their global norm is at most max_norm. Returns the norm
/// before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace scramble::nn
