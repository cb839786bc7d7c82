// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scramble/dataset.hpp"
#include "scramble/nn/model_io.hpp"
#include "scramble/nn/network.hpp"

namespace scramble::training {

/// Supervised sequences held in memory. inputs: count x steps x sites x
/// features; targets: count x steps x K. sites = 1 for homogeneous data.
struct SequenceData {
  int steps = 0;
  int sites = 1;
  int features = data::DatasetConfig::kFeatures;
  bool homogeneous = true;
  int n_qubits = 0;
  std::vector<std::string> labels;
  std::int64_t count = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  void validate() const;
  std::size_t input_stride() const { return static_cast<std::size_t>(steps) * sites * features; }
  std::size_t target_stride() const { return static_cast<std::size_t>(steps) * labels.size(); }
  int label_count() const { return static_cast<int>(labels.size()); }

  static SequenceData from_reader(const data::DatasetReader& reader);
  static SequenceData load(const std::filesystem::path& dir);

  /// Keeps the named channels in the given order. Missing names raise a
  /// ValidationError that lists them.
  SequenceData restricted(std::span<const std::string> names) const;
  /// First `steps` depths only.
  SequenceData truncated(int steps) const;
  SequenceData subset(std::span<const std::int64_t> indices) const;
};

/// Human-readable diff of two label lists, empty when equal.
std::string label_diff(std::span<const std::string> expected, std::span<const std::string> actual);

/// Minibatch in network layout. The LSTM stack sees every site's features
/// side by side; the ConvLSTM stack keeps the spatial axis.
nn::Batch make_batch(const SequenceData& d, std::span<const std::int64_t> indices, nn::Architecture arch);
/// (steps * B) x K, time-major to match Network::forward.
nn::Matrix batch_targets(const SequenceData& d, std::span<const std::int64_t> indices);

/// Input width the given architecture needs for this data.
int input_features_for(const SequenceData& d, nn::Architecture arch);

struct TrainConfig {
  std::filesystem::path dataset;
  /// output_width = 0 takes the dataset label count; input_features is
  /// always derived from the data.
  nn::NetworkConfig network = nn::NetworkConfig::lstm(0);
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int patience = 20;
  std::uint64_t seed = 0;
  std::array<double, 3> split = {0.9, 0.05, 0.05};
  double clip_norm = 5.0;
  /// Train on depths 1..p_train only; 0 uses every depth.
  int p_train = 0;
  int threads = 1;
  /// Gradient shards per minibatch; fixed so results do not depend on threads.
  int shard_size = 32;
  std::string precision = "float64";

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double best_train_loss = 0.0;
};

struct TrainResult {
  nn::ModelState model;
  std::vector<EpochRecord> history;
  data::SplitIndices split;
  int best_epoch = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam on the mean squared error. Returns the best-validation
/// checkpoint. `resume` continues its optimizer state and epoch count.
TrainResult train(const TrainConfig& cfg, const SequenceData& data,
                  const std::optional<nn::ModelState>& resume = std::nullopt,
                  const EpochCallback& on_epoch = {});

/// count x steps x K predictions.
std::vector<double> predict(const nn::Network& net, const SequenceData& data, int threads = 1);

enum class Region { Interpolated, Extrapolated };
std::string region_name(Region r);

struct EvalReport {
  std::vector<std::string> labels;
  std::vector<double> per_depth;
  std::vector<double> per_observable;
  std::vector<Region> regions;
  double overall = 0.0;
  std::int64_t realizations = 0;
  int p_train = 0;

  /// Mean per-depth MSE over one region, NaN when the region is empty.
  double region_mean(Region r) const;
};

/// Scores stored predictions (count x steps x K) against data.
EvalReport score(const SequenceData& data, std::span<const double> predictions, int p_train);
/// Depths p <= p_train are interpolated, the rest extrapolated. p_train = 0
/// means the whole range was trained.
EvalReport evaluate(const nn::Network& net, const SequenceData& data, int p_train = 0, int threads = 1);

struct SizeReport {
  int n_qubits = 0;
  EvalReport report;
};

/// Restricts each dataset to the model's labels and evaluates. Requires a
/// size-agnostic architecture.
std::vector<SizeReport> evaluate_size_extrapolation(const nn::ModelState& model,
                                                    std::span<const SequenceData> datasets, int p_train = 0,
                                                    int threads = 1);

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);
void write_depth_csv(const std::filesystem::path& path, const EvalReport& report);
void write_observable_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace scramble::training
