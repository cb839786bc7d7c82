// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scramble/dataset.hpp"
#include "scramble/sim_core.hpp"
#include "scramble/train_eval.hpp"

namespace scramble::cli {

inline const std::vector<std::string> kDiagnostics = {"correlators", "magnetization", "entropies", "otoc"};

struct DiagConfig {
  std::vector<std::string> selection = {"magnetization", "entropies"};
  int realizations = 20;
  sim::PauliAxis otoc_axis = sim::PauliAxis::Z;
  /// 1-based; 0 picks the middle site.
  int otoc_source = 0;
  /// 0 means floor((N-1)/2).
  int max_offset = 0;
  int correlator_site = 1;
  /// Overrides the sampled angles with one constant when set.
  bool use_fixed_theta = false;
  double fixed_theta = 0.0;
  bool svg = true;

  int effective_source(int n) const { return otoc_source > 0 ? otoc_source : (n + 1) / 2; }
  int effective_max_offset(int n) const { return max_offset > 0 ? max_offset : (n - 1) / 2; }
};

/// Effective configuration of one command invocation.
struct RunConfig {
  std::uint64_t seed = 1;
  /// Defaults to the available cores; results do not depend on it.
  int threads = 1;
  data::DatasetConfig dataset;
  training::TrainConfig train;
  DiagConfig diag;
  sim::SimLimits limits;

  RunConfig();
};

nlohmann::json to_json(const RunConfig& c);

/// Overlays a JSON document on `base`. Unknown keys and wrong types raise a
/// ValidationError naming the field.
RunConfig merge(RunConfig base, const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Seed applied to dataset sampling, the split/shuffle stream and weight init.
void apply_seed(RunConfig& c, std::uint64_t seed);

enum class Command { Gen, Diag, Train, Eval };
/// Checks every field the command depends on before any work starts.
void validate(const RunConfig& c, Command cmd);

}  // namespace scramble::cli
