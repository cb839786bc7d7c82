// SPDX-License-Identifier: Apache-2.0
#include "scramble/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "scramble/error.hpp"
#include "scramble/parallel.hpp"

namespace scramble::training {

namespace fs = std::filesystem;
using nn::Matrix;

void SequenceData::validate() const {
  if (steps < 1 || sites < 1 || features < 1) throw ValidationError("sequence data needs positive dimensions");
  if (count < 0) throw ValidationError("sequence data count must be >= 0");
  if (labels.empty()) throw ValidationError("sequence data has no labels");
  if (inputs.size() != static_cast<std::size_t>(count) * input_stride() ||
      targets.size() != static_cast<std::size_t>(count) * target_stride()) {
    throw ValidationError("shape mismatch: sequence data arrays disagree with count/steps/sites/labels");
  }
}

SequenceData SequenceData::from_reader(const data::DatasetReader& reader) {
  const auto& m = reader.manifest();
  SequenceData d;
  d.steps = m.depth();
  d.homogeneous = m.config.homogeneous;
  d.sites = d.homogeneous ? 1 : m.config.n_qubits;
  d.n_qubits = m.config.n_qubits;
  for (const auto& l : m.labels) d.labels.push_back(l.name());
  d.count = m.sample_count();
  d.inputs.assign(reader.all_inputs().begin(), reader.all_inputs().end());
  d.targets.assign(reader.all_targets().begin(), reader.all_targets().end());
  return d;
}

SequenceData SequenceData::load(const fs::path& dir) { return from_reader(data::DatasetReader(dir)); }

std::string label_diff(std::span<const std::string> expected, std::span<const std::string> actual) {
  if (std::equal(expected.begin(), expected.end(), actual.begin(), actual.end())) return {};
  const std::set<std::string> e(expected.begin(), expected.end()), a(actual.begin(), actual.end());
  std::ostringstream out;
  out << "label lists differ (" << expected.size() << " expected, " << actual.size() << " found)";
  std::string missing, extra;
  for (const auto& s : expected) {
    if (!a.contains(s)) missing += " " + s;
  }
  for (const auto& s : actual) {
    if (!e.contains(s)) extra += " " + s;
  }
  if (!missing.empty()) out << "; missing:" << missing;
  if (!extra.empty()) out << "; unexpected:" << extra;
  if (missing.empty() && extra.empty()) out << "; same names in a different order";
  return out.str();
}

SequenceData SequenceData::restricted(std::span<const std::string> names) const {
  std::vector<std::size_t> cols;
  std::vector<std::string> missing;
  for (const auto& n : names) {
    const auto it = std::find(labels.begin(), labels.end(), n);
    if (it == labels.end()) {
      missing.push_back(n);
    } else {
      cols.push_back(static_cast<std::size_t>(it - labels.begin()));
    }
  }
  if (!missing.empty()) {
    std::string msg = "dataset lacks labels the model needs:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  SequenceData out = *this;
  out.labels.assign(names.begin(), names.end());
  out.targets.clear();
  out.targets.reserve(static_cast<std::size_t>(count) * steps * cols.size());
  const std::size_t k = labels.size();
  for (std::int64_t s = 0; s < count; ++s) {
    for (int p = 0; p < steps; ++p) {
      const std::size_t base = (static_cast<std::size_t>(s) * steps + p) * k;
      for (auto c : cols) out.targets.push_back(targets[base + c]);
    }
  }
  return out;
}

SequenceData SequenceData::truncated(int new_steps) const {
  if (new_steps < 1 || new_steps > steps) {
    throw ValidationError("cannot truncate " + std::to_string(steps) + " depths to " + std::to_string(new_steps));
  }
  if (new_steps == steps) return *this;
  SequenceData out = *this;
  out.steps = new_steps;
  out.inputs.clear();
  out.targets.clear();
  const std::size_t in_keep = out.input_stride(), tg_keep = out.target_stride();
  for (std::int64_t s = 0; s < count; ++s) {
    const auto in0 = inputs.begin() + static_cast<std::ptrdiff_t>(s * input_stride());
    const auto tg0 = targets.begin() + static_cast<std::ptrdiff_t>(s * target_stride());
    out.inputs.insert(out.inputs.end(), in0, in0 + static_cast<std::ptrdiff_t>(in_keep));
    out.targets.insert(out.targets.end(), tg0, tg0 + static_cast<std::ptrdiff_t>(tg_keep));
  }
  return out;
}

SequenceData SequenceData::subset(std::span<const std::int64_t> indices) const {
  SequenceData out = *this;
  out.count = static_cast<std::int64_t>(indices.size());
  out.inputs.clear();
  out.targets.clear();
  const std::size_t is = input_stride(), ts = target_stride();
  for (auto i : indices) {
    if (i < 0 || i >= count) throw ValidationError("subset index out of range");
    const auto in0 = inputs.begin() + static_cast<std::ptrdiff_t>(i * is);
    const auto tg0 = targets.begin() + static_cast<std::ptrdiff_t>(i * ts);
    out.inputs.insert(out.inputs.end(), in0, in0 + static_cast<std::ptrdiff_t>(is));
    out.targets.insert(out.targets.end(), tg0, tg0 + static_cast<std::ptrdiff_t>(ts));
  }
  return out;
}

int input_features_for(const SequenceData& d, nn::Architecture arch) {
  return arch == nn::Architecture::Lstm ? d.sites * d.features : d.features;
}

nn::Batch make_batch(const SequenceData& d, std::span<const std::int64_t> indices, nn::Architecture arch) {
  nn::Batch b;
  b.batch = static_cast<int>(indices.size());
  b.steps = d.steps;
  b.sites = arch == nn::Architecture::Lstm ? 1 : d.sites;
  const int width = input_features_for(d, arch);
  const std::size_t cell = static_cast<std::size_t>(d.sites) * d.features;
  b.inputs.resize(static_cast<Eigen::Index>(b.batch) * d.steps * b.sites, width);
  for (int s = 0; s < b.batch; ++s) {
    const double* src = d.inputs.data() + static_cast<std::size_t>(indices[s]) * d.input_stride();
    for (int p = 0; p < d.steps; ++p) {
      // Per-depth block is sites x features in both layouts; only the row
      // split differs.
      double* dst = b.inputs.data() + (static_cast<std::size_t>(p) * b.batch + s) * cell;
      std::copy_n(src + static_cast<std::size_t>(p) * cell, cell, dst);
    }
  }
  return b;
}

Matrix batch_targets(const SequenceData& d, std::span<const std::int64_t> indices) {
  const auto k = static_cast<Eigen::Index>(d.labels.size());
  const auto b = static_cast<Eigen::Index>(indices.size());
  Matrix t(b * d.steps, k);
  for (Eigen::Index s = 0; s < b; ++s) {
    const double* src = d.targets.data() + static_cast<std::size_t>(indices[s]) * d.target_stride();
    for (int p = 0; p < d.steps; ++p) std::copy_n(src + p * k, k, t.data() + (p * b + s) * k);
  }
  return t;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train.epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1, got " + std::to_string(batch_size));
  if (!(learning_rate > 0.0)) throw ValidationError("train.learning_rate must be > 0");
  if (patience < 1) throw ValidationError("train.patience must be >= 1");
  if (clip_norm < 0.0) throw ValidationError("train.clip_norm must be >= 0");
  if (p_train < 0) throw ValidationError("train.p_train must be >= 0");
  if (shard_size < 1) throw ValidationError("train.shard_size must be >= 1");
  if (threads < 1) throw ValidationError("train.threads must be >= 1");
  if (precision != "float64") {
    throw ValidationError("train.precision '" + precision + "' is not supported (float64 only)");
  }
  double sum = 0.0;
  for (double f : split) {
    if (!(f >= 0.0)) throw ValidationError("train.split fractions must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9 || split[0] <= 0.0) {
    throw ValidationError("train.split must sum to 1 with a nonzero training share");
  }
}

namespace {

constexpr std::int64_t kPredictChunk = 128;

double mean_loss(const nn::Network& net, const SequenceData& d, std::span<const std::int64_t> idx, int threads) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::int64_t chunks = (static_cast<std::int64_t>(idx.size()) + kPredictChunk - 1) / kPredictChunk;
  std::vector<double> sums(static_cast<std::size_t>(chunks));
  parallel_for(chunks, threads, [&](std::int64_t c) {
    const auto part = idx.subspan(static_cast<std::size_t>(c * kPredictChunk),
                                  std::min<std::size_t>(kPredictChunk, idx.size() - c * kPredictChunk));
    const Matrix pred = net.predict(make_batch(d, part, net.config().architecture));
    sums[static_cast<std::size_t>(c)] = (pred - batch_targets(d, part)).squaredNorm();
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / (static_cast<double>(idx.size()) * d.steps * d.label_count());
}

}  // namespace

TrainResult train(const TrainConfig& cfg_in, const SequenceData& full, const std::optional<nn::ModelState>& resume,
                  const EpochCallback& on_epoch) {
  cfg_in.validate();
  full.validate();
  if (full.count < 1) throw ValidationError("training needs at least one sample");
  TrainConfig cfg = cfg_in;
  const SequenceData d = cfg.p_train > 0 ? full.truncated(cfg.p_train) : full;
  auto& net_cfg = cfg.network;
  net_cfg.input_features = input_features_for(d, net_cfg.architecture);
  if (net_cfg.output_width == 0) net_cfg.output_width = d.label_count();
  if (net_cfg.output_width != d.label_count()) {
    throw ValidationError("shape mismatch: network output width " + std::to_string(net_cfg.output_width) +
                          " vs " + std::to_string(d.label_count()) + " dataset labels");
  }
  net_cfg.validate();

  std::optional<nn::ModelState> state;
  if (resume) {
    state = *resume;
    const auto& rc = state->network.config();
    if (rc.architecture != net_cfg.architecture || rc.input_features != net_cfg.input_features ||
        rc.output_width != net_cfg.output_width) {
      throw ValidationError("resume checkpoint does not match the dataset layout");
    }
    if (const auto diff = label_diff(state->labels, d.labels); !diff.empty()) {
      throw ValidationError("resume checkpoint labels: " + diff);
    }
  } else {
    state.emplace(nn::Network(net_cfg));
    state->labels = d.labels;
    state->homogeneous = d.homogeneous;
    state->trained_sites = d.n_qubits;
    state->trained_depth = d.steps;
  }

  TrainResult result{*state, {}, data::split(d.count, cfg.split, cfg.seed), 0, false};
  auto train_idx = result.split.train;
  const auto& val_idx = result.split.validation.empty() ? result.split.train : result.split.validation;

  nn::AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  auto& params = state->network.parameters();
  const double normalizer_per_sample = static_cast<double>(d.steps) * d.label_count();
  double best_val = state->best_validation_loss;
  double best_train = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto first_epoch = static_cast<int>(state->epochs_completed) + 1;

  for (int epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
    std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch)));
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const auto batch = std::span(train_idx).subspan(start, std::min<std::size_t>(cfg.batch_size, train_idx.size() - start));
      const double normalizer = normalizer_per_sample * static_cast<double>(batch.size());
      const auto shards = static_cast<std::int64_t>((batch.size() + cfg.shard_size - 1) / cfg.shard_size);
      std::vector<nn::Gradients> shard_grads(static_cast<std::size_t>(shards));
      std::vector<double> shard_loss(static_cast<std::size_t>(shards));
      parallel_for(shards, cfg.threads, [&](std::int64_t s) {
        const auto part = batch.subspan(static_cast<std::size_t>(s) * cfg.shard_size,
                                        std::min<std::size_t>(cfg.shard_size, batch.size() - s * cfg.shard_size));
        nn::Tape tape;
        const nn::Var loss = nn::squared_error(
            state->network.forward(tape, make_batch(d, part, net_cfg.architecture)), batch_targets(d, part), normalizer);
        auto& g = shard_grads[static_cast<std::size_t>(s)];
        g = nn::zeros_like(params.values);
        tape.backward(loss, g);
        shard_loss[static_cast<std::size_t>(s)] = loss.value()(0, 0);
      });
      nn::Gradients grads = std::move(shard_grads[0]);
      double batch_loss = shard_loss[0];
      for (std::size_t s = 1; s < shard_grads.size(); ++s) {
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += shard_grads[s][i];
        batch_loss += shard_loss[s];
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                             std::to_string(start) + " (gradient norm " + std::to_string(nn::global_norm(grads)) + ")");
      }
      if (cfg.clip_norm > 0.0) nn::clip_global_norm(grads, cfg.clip_norm);
      nn::adam_step(params, grads, state->adam, adam);
      epoch_loss += batch_loss * static_cast<double>(batch.size());
    }
    epoch_loss /= static_cast<double>(train_idx.size());
    const double val = mean_loss(state->network, d, val_idx, cfg.threads);
    if (!std::isfinite(val)) {
      throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    best_train = std::min(best_train, epoch_loss);
    state->epochs_completed = epoch;
    const EpochRecord rec{epoch, epoch_loss, val, best_train};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (val < best_val) {
      best_val = val;
      state->best_validation_loss = val;
      since_best = 0;
      result.model = *state;
      result.best_epoch = epoch;
    } else if (++since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (result.best_epoch == 0) result.model = *state;
  result.model.epochs_completed = state->epochs_completed;
  return result;
}

std::vector<double> predict(const nn::Network& net, const SequenceData& d, int threads) {
  d.validate();
  const auto k = static_cast<std::size_t>(net.config().output_width);
  std::vector<double> out(static_cast<std::size_t>(d.count) * d.steps * k);
  const std::int64_t chunks = (d.count + kPredictChunk - 1) / kPredictChunk;
  parallel_for(chunks, threads, [&](std::int64_t c) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(std::min(kPredictChunk, d.count - c * kPredictChunk)));
    std::iota(idx.begin(), idx.end(), c * kPredictChunk);
    const Matrix pred = net.predict(make_batch(d, idx, net.config().architecture));
    const auto b = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index s = 0; s < b; ++s) {
      for (int p = 0; p < d.steps; ++p) {
        std::copy_n(pred.data() + (p * b + s) * k, k,
                    out.data() + (static_cast<std::size_t>(idx[s]) * d.steps + p) * k);
      }
    }
  });
  return out;
}

std::string region_name(Region r) { return r == Region::Interpolated ? "interpolated" : "extrapolated"; }

double EvalReport::region_mean(Region r) const {
  double s = 0.0;
  int n = 0;
  for (std::size_t p = 0; p < per_depth.size(); ++p) {
    if (regions[p] == r) {
      s += per_depth[p];
      ++n;
    }
  }
  return n ? s / n : std::numeric_limits<double>::quiet_NaN();
}

EvalReport score(const SequenceData& d, std::span<const double> pred, int p_train) {
  d.validate();
  if (pred.size() != d.targets.size()) {
    throw ValidationError("shape mismatch: " + std::to_string(pred.size()) + " predictions for " +
                          std::to_string(d.targets.size()) + " targets");
  }
  if (p_train < 0) throw ValidationError("p_train must be >= 0");
  if (d.count < 1) throw ValidationError("evaluation needs at least one sample");
  const std::size_t k = d.labels.size();
  EvalReport r;
  r.labels = d.labels;
  r.realizations = d.count;
  r.p_train = p_train == 0 ? d.steps : p_train;
  r.per_depth.assign(static_cast<std::size_t>(d.steps), 0.0);
  r.per_observable.assign(k, 0.0);
  for (std::int64_t s = 0; s < d.count; ++s) {
    for (int p = 0; p < d.steps; ++p) {
      const std::size_t base = (static_cast<std::size_t>(s) * d.steps + p) * k;
      for (std::size_t j = 0; j < k; ++j) {
        const double e = pred[base + j] - d.targets[base + j];
        r.per_depth[p] += e * e;
        r.per_observable[j] += e * e;
      }
    }
  }
  for (auto& v : r.per_depth) v /= static_cast<double>(d.count) * static_cast<double>(k);
  for (auto& v : r.per_observable) v /= static_cast<double>(d.count) * d.steps;
  for (int p = 1; p <= d.steps; ++p) r.regions.push_back(p <= r.p_train ? Region::Interpolated : Region::Extrapolated);
  r.overall = std::accumulate(r.per_depth.begin(), r.per_depth.end(), 0.0) / d.steps;
  return r;
}

EvalReport evaluate(const nn::Network& net, const SequenceData& d, int p_train, int threads) {
  if (net.config().output_width != d.label_count()) {
    throw ValidationError("shape mismatch: model has " + std::to_string(net.config().output_width) +
                          " outputs, dataset has " + std::to_string(d.label_count()) + " labels");
  }
  if (net.config().input_features != input_features_for(d, net.config().architecture)) {
    throw ValidationError("shape mismatch: model expects " + std::to_string(net.config().input_features) +
                          " input features per step, dataset provides " +
                          std::to_string(input_features_for(d, net.config().architecture)));
  }
  return score(d, predict(net, d, threads), p_train);
}

std::vector<SizeReport> evaluate_size_extrapolation(const nn::ModelState& model, std::span<const SequenceData> sets,
                                                    int p_train, int threads) {
  if (!model.network.config().size_agnostic()) {
    throw ValidationError("size extrapolation needs a size-agnostic (convlstm) model, got " +
                          nn::architecture_name(model.network.config().architecture));
  }
  std::vector<SizeReport> out;
  for (const auto& d : sets) {
    if (d.homogeneous) throw ValidationError("size extrapolation needs inhomogeneous (per-site) datasets");
    out.push_back({d.n_qubits, evaluate(model.network, d.restricted(model.labels), p_train, threads)});
  }
  return out;
}

namespace {

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

void write_history_csv(const fs::path& path, std::span<const EpochRecord> history) {
  auto out = open_csv(path);
  out << "epoch,train_loss,validation_loss,best_train_loss\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << h.train_loss << ',' << h.validation_loss << ',' << h.best_train_loss << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_depth_csv(const fs::path& path, const EvalReport& r) {
  auto out = open_csv(path);
  out << "depth,region,mse\n";
  for (std::size_t p = 0; p < r.per_depth.size(); ++p) {
    out << p + 1 << ',' << region_name(r.regions[p]) << ',' << r.per_depth[p] << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_observable_csv(const fs::path& path, const EvalReport& r) {
  auto out = open_csv(path);
  out << "observable,mse\n";
  for (std::size_t j = 0; j < r.labels.size(); ++j) out << r.labels[j] << ',' << r.per_observable[j] << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace scramble::training
