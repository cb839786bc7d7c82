// SPDX-License-Identifier: Apache-2.0
#include "scramble/nn/network.hpp"

#include <cmath>
#include <random>

#include "scramble/error.hpp"

namespace scramble::nn {

std::string architecture_name(Architecture a) { return a == Architecture::Lstm ? "lstm" : "convlstm"; }

Architecture parse_architecture(const std::string& s) {
  if (s == "lstm") return Architecture::Lstm;
  if (s == "convlstm") return Architecture::ConvLstm;
  throw ValidationError("architecture must be 'lstm' or 'convlstm', got '" + s + "'");
}

std::string padding_name(Padding p) { return p == Padding::Zero ? "zero" : "periodic"; }

Padding parse_padding(const std::string& s) {
  if (s == "zero") return Padding::Zero;
  if (s == "periodic") return Padding::Periodic;
  throw ValidationError("padding must be 'zero' or 'periodic', got '" + s + "'");
}

void NetworkConfig::validate() const {
  if (input_features < 1) throw ValidationError("network.input_features must be >= 1");
  if (output_width < 1) throw ValidationError("network.output_width must be >= 1");
  if (architecture == Architecture::Lstm && hidden.empty()) {
    throw ValidationError("network.hidden needs at least one LSTM layer");
  }
  for (int h : hidden) {
    if (h < 1) throw ValidationError("network.hidden widths must be >= 1");
  }
  if (architecture == Architecture::ConvLstm && (kernel_size < 1 || kernel_size % 2 == 0)) {
    throw ValidationError("network.kernel_size must be a positive odd integer, got " +
                          std::to_string(kernel_size));
  }
}

NetworkConfig NetworkConfig::lstm(int output_width, std::vector<int> hidden) {
  NetworkConfig c;
  c.architecture = Architecture::Lstm;
  c.output_width = output_width;
  c.hidden = std::move(hidden);
  return c;
}

NetworkConfig NetworkConfig::convlstm(int output_width, std::vector<int> hidden) {
  NetworkConfig c;
  c.architecture = Architecture::ConvLstm;
  c.output_width = output_width;
  c.hidden = std::move(hidden);
  return c;
}

int ParameterSet::add(std::string name, Matrix value) {
  names.push_back(std::move(name));
  values.push_back(std::move(value));
  return static_cast<int>(values.size() - 1);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values) n += static_cast<std::size_t>(v.size());
  return n;
}

int ParameterSet::index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw ValidationError("no parameter named '" + name + "'");
}

namespace {

struct GateSlices {
  Var i, f, g, o;
};

GateSlices gates(Var z, Eigen::Index h) {
  return {sigmoid(slice_cols(z, 0, h)), sigmoid(slice_cols(z, h, h)), tanh(slice_cols(z, 2 * h, h)),
          sigmoid(slice_cols(z, 3 * h, h))};
}

void check_recurrent(Var kernel, Var recurrent, Var bias, Eigen::Index in_rows, int taps,
                     const char* who) {
  const Eigen::Index four_h = kernel.cols();
  if (four_h % 4 != 0 || kernel.rows() != in_rows || recurrent.cols() != four_h ||
      recurrent.rows() != taps * (four_h / 4) || bias.rows() != 1 || bias.cols() != four_h) {
    throw ValidationError(std::string("shape mismatch in ") + who + " parameters");
  }
}

}  // namespace

Var lstm_sequence(Var x_all, int steps, Var kernel, Var recurrent, Var bias) {
  if (steps < 1 || x_all.rows() % steps != 0) throw ValidationError("lstm: rows not a multiple of steps");
  check_recurrent(kernel, recurrent, bias, x_all.cols(), 1, "lstm");
  const Eigen::Index b = x_all.rows() / steps;
  const Eigen::Index h = kernel.cols() / 4;
  const Var xw = matmul(x_all, kernel);
  std::vector<Var> hs;
  hs.reserve(static_cast<std::size_t>(steps));
  Var hidden, cell;
  for (int t = 0; t < steps; ++t) {
    Var z = slice_rows(xw, t * b, b);
    if (t > 0) z = add(z, matmul(hidden, recurrent));
    const auto gt = gates(add_row(z, bias), h);
    cell = t == 0 ? mul(gt.i, gt.g) : add(mul(gt.f, cell), mul(gt.i, gt.g));
    hidden = mul(gt.o, tanh(cell));
    hs.push_back(hidden);
  }
  return concat_rows(hs);
}

Var convlstm_sequence(Var x_all, int steps, int sites, int kernel_size, Padding padding, Var kernel,
                      Var recurrent, Var bias) {
  if (steps < 1 || sites < 1 || x_all.rows() % (steps * sites) != 0) {
    throw ValidationError("convlstm: rows not a multiple of steps * sites");
  }
  check_recurrent(kernel, recurrent, bias, kernel_size * x_all.cols(), kernel_size, "convlstm");
  const Eigen::Index rows = x_all.rows() / steps;
  const Eigen::Index h = kernel.cols() / 4;
  const Var xw = matmul(unfold(x_all, sites, kernel_size, padding), kernel);
  std::vector<Var> hs;
  hs.reserve(static_cast<std::size_t>(steps));
  Var hidden, cell;
  for (int t = 0; t < steps; ++t) {
    Var z = slice_rows(xw, t * rows, rows);
    if (t > 0) z = add(z, matmul(unfold(hidden, sites, kernel_size, padding), recurrent));
    const auto gt = gates(add_row(z, bias), h);
    cell = t == 0 ? mul(gt.i, gt.g) : add(mul(gt.f, cell), mul(gt.i, gt.g));
    hidden = mul(gt.o, tanh(cell));
    hs.push_back(hidden);
  }
  return concat_rows(hs);
}

Var dense(Var x, Var kernel, Var bias) { return add_row(matmul(x, kernel), bias); }

Matrix lstm_forward(const Matrix& kernel, const Matrix& recurrent, const Matrix& bias,
                    const Matrix& sequence) {
  Tape t(false);
  return lstm_sequence(t.constant(sequence), static_cast<int>(sequence.rows()), t.constant(kernel),
                       t.constant(recurrent), t.constant(bias))
      .value();
}

Matrix convlstm_forward(const Matrix& kernel, const Matrix& recurrent, const Matrix& bias,
                        const Matrix& sequence, int sites, Padding padding) {
  if (sites < 1 || sequence.rows() % sites != 0) throw ValidationError("convlstm: bad site count");
  Tape t(false);
  const Eigen::Index f = sequence.cols();
  const int taps = f > 0 ? static_cast<int>(kernel.rows() / f) : 0;
  return convlstm_sequence(t.constant(sequence), static_cast<int>(sequence.rows() / sites), sites, taps,
                           padding, t.constant(kernel), t.constant(recurrent), t.constant(bias))
      .value();
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>> Network::layout(const NetworkConfig& c) {
  c.validate();
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
  std::int64_t in = c.input_features;
  if (c.architecture == Architecture::Lstm) {
    for (std::size_t l = 0; l < c.hidden.size(); ++l) {
      const std::int64_t h = c.hidden[l];
      const std::string p = "lstm" + std::to_string(l) + "/";
      out.push_back({p + "kernel", {in, 4 * h}});
      out.push_back({p + "recurrent_kernel", {h, 4 * h}});
      out.push_back({p + "bias", {1, 4 * h}});
      in = h;
    }
    out.push_back({"dense/kernel", {in, c.output_width}});
    out.push_back({"dense/bias", {1, c.output_width}});
    return out;
  }
  std::vector<int> widths = c.hidden;
  widths.push_back(c.output_width);
  const std::int64_t k = c.kernel_size;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::int64_t h = widths[l];
    const std::string p = "convlstm" + std::to_string(l) + "/";
    out.push_back({p + "kernel", {k * in, 4 * h}});
    out.push_back({p + "recurrent_kernel", {k * h, 4 * h}});
    out.push_back({p + "bias", {1, 4 * h}});
    in = h;
  }
  return out;
}

Network::Network(NetworkConfig config) : config_(std::move(config)) {
  std::mt19937_64 rng(config_.seed);
  auto uniform = [&](Eigen::Index r, Eigen::Index c, double limit) {
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  const int taps = config_.architecture == Architecture::ConvLstm ? config_.kernel_size : 1;
  for (const auto& [name, shape] : layout(config_)) {
    const Eigen::Index r = shape[0], c = shape[1];
    const bool is_bias = name.ends_with("/bias");
    if (is_bias && name.rfind("dense", 0) != 0) {
      Matrix b = Matrix::Zero(1, c);
      b.middleCols(c / 4, c / 4).setOnes();
      params_.add(name, std::move(b));
    } else if (is_bias) {
      params_.add(name, Matrix::Zero(1, c));
    } else if (name.ends_with("recurrent_kernel")) {
      params_.add(name, uniform(r, c, 1.0 / std::sqrt(static_cast<double>(r))));
    } else {
      // Glorot uniform with receptive-field fan counts.
      const double fan_in = static_cast<double>(r);
      const double fan_out = static_cast<double>(c) * (name.rfind("dense", 0) == 0 ? 1 : taps);
      params_.add(name, uniform(r, c, std::sqrt(6.0 / (fan_in + fan_out))));
    }
  }
}

Network::Network(NetworkConfig config, ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  const auto expected = layout(config_);
  if (expected.size() != params_.size()) {
    throw ValidationError("shape mismatch: config implies " + std::to_string(expected.size()) +
                          " parameter tensors, got " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& [name, shape] = expected[i];
    const auto& v = params_.values[i];
    if (params_.names[i] != name || v.rows() != shape[0] || v.cols() != shape[1]) {
      throw ValidationError("shape mismatch: parameter '" + params_.names[i] + "' is " +
                            std::to_string(v.rows()) + "x" + std::to_string(v.cols()) + ", config expects '" +
                            name + "' " + shape_string(shape));
    }
  }
}

Var Network::forward(Tape& tape, const Batch& batch) const {
  const auto& c = config_;
  const int sites = c.architecture == Architecture::Lstm ? 1 : batch.sites;
  if (c.architecture == Architecture::Lstm && batch.sites != 1) {
    throw ValidationError("LSTM stack expects site-collapsed inputs (sites = 1)");
  }
  if (batch.batch < 1 || batch.steps < 1 || sites < 1 ||
      batch.inputs.rows() != static_cast<Eigen::Index>(batch.batch) * batch.steps * sites ||
      batch.inputs.cols() != c.input_features) {
    throw ValidationError("shape mismatch: batch inputs are " + std::to_string(batch.inputs.rows()) + "x" +
                          std::to_string(batch.inputs.cols()) + ", network expects " +
                          std::to_string(batch.batch * batch.steps * sites) + "x" +
                          std::to_string(c.input_features));
  }
  auto p = [&](std::size_t i) { return tape.param(params_.values[i], static_cast<int>(i)); };
  Var x = tape.constant(batch.inputs);
  std::size_t slot = 0;
  if (c.architecture == Architecture::Lstm) {
    for (std::size_t l = 0; l < c.hidden.size(); ++l, slot += 3) {
      x = lstm_sequence(x, batch.steps, p(slot), p(slot + 1), p(slot + 2));
    }
    return dense(x, p(slot), p(slot + 1));
  }
  for (std::size_t l = 0; l <= c.hidden.size(); ++l, slot += 3) {
    x = convlstm_sequence(x, batch.steps, sites, c.kernel_size, c.padding, p(slot), p(slot + 1), p(slot + 2));
  }
  return max_pool_sites(x, sites);
}

Matrix Network::predict(const Batch& batch) const {
  Tape tape(false);
  return forward(tape, batch).value();
}

AdamState AdamState::like(const ParameterSet& params) {
  AdamState s;
  s.m = zeros_like(params.values);
  s.v = zeros_like(params.values);
  return s;
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ValidationError("adam: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& p = params.values[i];
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() || state.m[i].rows() != p.rows() ||
        state.m[i].cols() != p.cols() || state.v[i].rows() != p.rows() || state.v[i].cols() != p.cols()) {
      throw ValidationError("adam: shape mismatch for '" + params.names[i] + "'");
    }
    if (!grads[i].allFinite()) {
      throw NumericalError("adam: non-finite gradient for '" + params.names[i] + "', step refused");
    }
  }
  const auto t = static_cast<double>(state.step + 1);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i].array();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    params.values[i].array() -= cfg.learning_rate * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
  }
  ++state.step;
}

double global_norm(const Gradients& grads) {
  double s = 0.0;
  for (const auto& g : grads) s += g.squaredNorm();
  return std::sqrt(s);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace scramble::nn
