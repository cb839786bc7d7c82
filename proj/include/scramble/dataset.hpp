// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scramble/gp_sampler.hpp"
#include "scramble/observables.hpp"
#include "scramble/sim_core.hpp"

namespace scramble::data {

inline constexpr const char* kFormatVersion = "scramble-ds/1";

enum class MomentKind { First, Second };

/// One monitored expectation value. Sites are 1-based here; second moments
/// pair `site` (axis a) with `site + offset` (axis b), wrapping on the ring.
struct ObservableLabel {
  MomentKind kind = MomentKind::First;
  int site = 1;
  int offset = 0;
  sim::PauliAxis a = sim::PauliAxis::Z;
  sim::PauliAxis b = sim::PauliAxis::Z;

  /// "z1" for <sigma_1^z>, "x1z3" for <sigma_1^x sigma_3^z>.
  std::string name() const;
  static ObservableLabel parse(const std::string& name);
  bool operator==(const ObservableLabel&) const = default;
};

/// N >= 3. Homogeneous: 3 + 9 floor((N-1)/2); inhomogeneous:
/// 3 floor(N/2) + 9 floor((N-1)/2).
std::vector<ObservableLabel> select_labels(int n_qubits, bool homogeneous,
                                           int second_moment_site = 1);

double evaluate_label(const sim::StateVector& state, const ObservableLabel& label);

struct DatasetConfig {
  int n_qubits = 6;
  int depth = 20;
  sim::Variant variant = sim::Variant::CircuitI;
  sim::LayerOrder order = sim::LayerOrder::TwoBodyFirst;
  bool homogeneous = true;
  std::int64_t sample_count = 100;
  std::uint64_t master_seed = 1;
  double gp_amplitude = gp::GpConfig{}.amplitude;
  double gp_correlation_length = gp::GpConfig{}.correlation_length;
  int second_moment_site = 1;

  void validate() const;
  /// Features per (depth, site) cell: theta and the depth index.
  static constexpr int kFeatures = 2;
  /// Per-sample input values: P*2 homogeneous, P*N*2 inhomogeneous.
  std::size_t input_stride() const;
};

struct TensorInfo {
  std::string file;
  std::vector<std::int64_t> shape;
  std::uint64_t offset = 0;
  std::uint64_t bytes = 0;
  std::uint32_t crc32 = 0;
  std::vector<std::uint32_t> record_crc32;
};

struct DatasetManifest {
  std::string format = kFormatVersion;
  DatasetConfig config;
  std::vector<ObservableLabel> labels;
  TensorInfo inputs;
  TensorInfo targets;

  std::int64_t sample_count() const { return config.sample_count; }
  int depth() const { return config.depth; }
  int label_count() const { return static_cast<int>(labels.size()); }
  std::size_t input_stride() const { return config.input_stride(); }
  std::size_t target_stride() const {
    return static_cast<std::size_t>(config.depth) * labels.size();
  }
};

/// inputs: P x 2 (homogeneous) or P x N x 2, row-major; targets: P x K.
struct SampleRecord {
  std::vector<double> inputs;
  std::vector<double> targets;
};

/// Counter-based seed for sample `index`.
std::uint64_t sample_seed(std::uint64_t master_seed, std::int64_t index);

/// Angle grid of sample `index` as drawn by generate().
sim::CircuitSpec sample_spec(const DatasetConfig& cfg, std::int64_t index);

/// Re-simulates one circuit and records the labelled observables at p = 1..P.
SampleRecord simulate_sample(const sim::CircuitSpec& spec,
                             std::span<const ObservableLabel> labels,
                             bool homogeneous_inputs);

/// Rebuilds the circuit from a stored input record.
sim::CircuitSpec spec_from_inputs(const DatasetManifest& manifest,
                                  std::span<const double> inputs);

struct GenerateOptions {
  int threads = 1;
  sim::SimLimits limits;
};

/// Writes manifest.json, inputs.bin and targets.bin into `dir` (created if
/// missing). Output bytes depend only on cfg.
DatasetManifest generate(const DatasetConfig& cfg, const std::filesystem::path& dir,
                         const GenerateOptions& options = {});

/// Reads and validates manifest.json (format version, shapes, label count).
DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Validated read access. Construction checks file sizes against the manifest
/// and every checksum, so a reader that exists never yields partial data.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& dir);

  const DatasetManifest& manifest() const { return manifest_; }
  std::int64_t size() const { return manifest_.sample_count(); }
  SampleRecord record(std::int64_t index) const;

  class Iterator {
   public:
    Iterator(const DatasetReader* r, std::int64_t i) : reader_(r), index_(i) {}
    SampleRecord operator*() const { return reader_->record(index_); }
    Iterator& operator++() {
      ++index_;
      return *this;
    }
    bool operator==(const Iterator& o) const { return index_ == o.index_; }

   private:
    const DatasetReader* reader_;
    std::int64_t index_;
  };
  Iterator begin() const { return {this, 0}; }
  Iterator end() const { return {this, size()}; }

  std::span<const double> all_inputs() const { return inputs_; }
  std::span<const double> all_targets() const { return targets_; }

 private:
  DatasetManifest manifest_;
  std::vector<double> inputs_;
  std::vector<double> targets_;
};

struct SplitIndices {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> validation;
  std::vector<std::int64_t> test;
};

/// Disjoint, exhaustive, seeded partition of [0, count).
SplitIndices split(std::int64_t count, std::array<double, 3> fractions, std::uint64_t seed);

}  // namespace scramble::data
