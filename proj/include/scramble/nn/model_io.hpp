// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "scramble/nn/network.hpp"

namespace scramble::nn {

inline constexpr const char* kModelFormat = "scramble-model/1";

/// Everything needed to resume training or run inference.
struct ModelState {
  Network network;
  AdamState adam;
  /// Observable names, one per output channel.
  std::vector<std::string> labels;
  bool homogeneous = true;
  int trained_sites = 0;
  int trained_depth = 0;
  std::int64_t epochs_completed = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();

  explicit ModelState(Network net) : network(std::move(net)), adam(AdamState::like(network.parameters())) {}
};

/// File layout: the format line, a line holding the header byte count, the
/// JSON header, then the little-endian float64 payload (parameters, Adam m,
/// Adam v, each in parameter order). The header carries the payload CRC32.
void save_model(const std::filesystem::path& path, const ModelState& state);
ModelState load_model(const std::filesystem::path& path);

nlohmann::json to_json(const NetworkConfig& c);
/// Overlays keys from j on `base`; unknown keys and mistyped values are
/// ValidationErrors naming the field (prefixed with `where`).
NetworkConfig network_config_from_json(const nlohmann::json& j, NetworkConfig base = {},
                                       const std::string& where = "network");

}  // namespace scramble::nn
