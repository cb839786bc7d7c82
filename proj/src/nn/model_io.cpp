// SPDX-License-Identifier: Apache-2.0
#include "scramble/nn/model_io.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "scramble/binary_io.hpp"
#include "scramble/error.hpp"

namespace scramble::nn {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const NetworkConfig& c) {
  return json{{"architecture", architecture_name(c.architecture)},
              {"input_features", c.input_features},
              {"hidden", c.hidden},
              {"output_width", c.output_width},
              {"kernel_size", c.kernel_size},
              {"padding", padding_name(c.padding)},
              {"seed", c.seed}};
}

NetworkConfig network_config_from_json(const json& j, NetworkConfig c, const std::string& where) {
  if (!j.is_object()) throw ValidationError("config field '" + where + "' must be an object");
  static const std::set<std::string> known = {"architecture", "input_features", "hidden", "output_width",
                                              "kernel_size", "padding", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("unknown config key '" + where + "." + key + "'");
    try {
      if (key == "architecture") c.architecture = parse_architecture(value.get<std::string>());
      if (key == "input_features") c.input_features = value.get<int>();
      if (key == "hidden") c.hidden = value.get<std::vector<int>>();
      if (key == "output_width") c.output_width = value.get<int>();
      if (key == "kernel_size") c.kernel_size = value.get<int>();
      if (key == "padding") c.padding = parse_padding(value.get<std::string>());
      if (key == "seed") c.seed = value.get<std::uint64_t>();
    } catch (const json::exception&) {
      throw ValidationError("config field '" + where + "." + key + "' has the wrong type");
    }
  }
  return c;
}

void save_model(const fs::path& path, const ModelState& state) {
  const auto& params = state.network.parameters();
  json tensors = json::array();
  std::vector<double> payload;
  payload.reserve(params.scalar_count() * 3);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& v = params.values[i];
    tensors.push_back({{"name", params.names[i]}, {"shape", {v.rows(), v.cols()}}});
  }
  for (const auto* section : {&params.values, &state.adam.m, &state.adam.v}) {
    if (section->size() != params.size()) throw ValidationError("model state has inconsistent section sizes");
    for (std::size_t i = 0; i < section->size(); ++i) {
      const auto& m = (*section)[i];
      if (m.rows() != params.values[i].rows() || m.cols() != params.values[i].cols()) {
        throw ValidationError("optimizer moment shape disagrees with parameter '" + params.names[i] + "'");
      }
      payload.insert(payload.end(), m.data(), m.data() + m.size());
    }
  }
  const auto bytes = io::encode_f64(payload);
  const json header{
      {"format", kModelFormat},
      {"precision", "float64"},
      {"byte_order", "little"},
      {"config", to_json(state.network.config())},
      {"tensors", tensors},
      {"sections", {"parameters", "adam_m", "adam_v"}},
      {"adam_step", state.adam.step},
      {"labels", state.labels},
      {"homogeneous", state.homogeneous},
      {"trained_sites", state.trained_sites},
      {"trained_depth", state.trained_depth},
      {"epochs_completed", state.epochs_completed},
      {"best_validation_loss",
       std::isfinite(state.best_validation_loss) ? json(state.best_validation_loss) : json(nullptr)},
      {"payload_bytes", bytes.size()},
      {"payload_crc32", io::crc32(bytes)},
  };
  const std::string text = header.dump();
  std::string prefix = std::string(kModelFormat) + "\n" + std::to_string(text.size()) + "\n" + text;
  std::vector<std::byte> out;
  out.reserve(prefix.size() + bytes.size());
  const auto pb = io::as_bytes(prefix);
  out.insert(out.end(), pb.begin(), pb.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
  io::write_file(path, out);
}

ModelState load_model(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("model file not found: " + path.string());
  const auto raw = io::read_file(path);
  const std::string_view view(reinterpret_cast<const char*>(raw.data()), raw.size());
  const auto nl1 = view.find('\n');
  if (nl1 == std::string_view::npos) throw FormatError("corrupt model file: missing format line");
  const auto magic = view.substr(0, nl1);
  if (magic != kModelFormat) {
    if (magic.starts_with("scramble-model/")) {
      throw FormatError("model format version mismatch: expected " + std::string(kModelFormat) + ", found " +
                        std::string(magic));
    }
    throw FormatError("not a model file: " + path.string());
  }
  const auto nl2 = view.find('\n', nl1 + 1);
  if (nl2 == std::string_view::npos) throw FormatError("corrupt model file: truncated header");
  std::size_t header_len = 0;
  const auto len_text = view.substr(nl1 + 1, nl2 - nl1 - 1);
  const auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), header_len);
  if (ec != std::errc{} || ptr != len_text.data() + len_text.size()) {
    throw FormatError("corrupt model file: bad header length");
  }
  const std::size_t header_start = nl2 + 1;
  if (raw.size() < header_start + header_len) throw FormatError("corrupt model file: truncated header");

  json h;
  try {
    h = json::parse(view.substr(header_start, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt model file: header is not valid JSON: ") + e.what());
  }
  const auto payload = std::span(raw).subspan(header_start + header_len);
  try {
    if (h.at("precision").get<std::string>() != "float64") throw FormatError("unsupported model precision");
    const auto declared = h.at("payload_bytes").get<std::uint64_t>();
    if (payload.size() < declared) {
      throw FormatError("corrupt model file: truncated payload (" + std::to_string(payload.size()) + " of " +
                        std::to_string(declared) + " bytes)");
    }
    if (payload.size() > declared) throw FormatError("corrupt model file: trailing bytes after payload");
    if (io::crc32(payload) != h.at("payload_crc32").get<std::uint32_t>()) {
      throw FormatError("corrupt model file: payload checksum mismatch");
    }

    NetworkConfig cfg;
    try {
      cfg = network_config_from_json(h.at("config"), NetworkConfig{}, "config");
      cfg.validate();
    } catch (const ValidationError& e) {
      throw FormatError(std::string("model header: ") + e.what());
    }
    const auto layout = Network::layout(cfg);
    const auto& tensors = h.at("tensors");
    if (tensors.size() != layout.size()) {
      throw FormatError("shape mismatch: header lists " + std::to_string(tensors.size()) +
                        " tensors, config implies " + std::to_string(layout.size()));
    }
    std::size_t scalars = 0;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto name = tensors[i].at("name").get<std::string>();
      const auto shape = tensors[i].at("shape").get<std::vector<std::int64_t>>();
      if (name != layout[i].first || shape != layout[i].second) {
        throw FormatError("shape mismatch: tensor '" + name + "' " + shape_string(shape) + " vs config '" +
                          layout[i].first + "' " + shape_string(layout[i].second));
      }
      scalars += static_cast<std::size_t>(shape[0] * shape[1]);
    }
    if (declared != scalars * 3 * 8) throw FormatError("shape mismatch: payload size disagrees with tensors");

    const auto values = io::decode_f64(payload);
    std::size_t pos = 0;
    auto take = [&](Eigen::Index r, Eigen::Index c) {
      Matrix m(r, c);
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), m.size(), m.data());
      pos += static_cast<std::size_t>(m.size());
      return m;
    };
    ParameterSet params;
    for (const auto& [name, shape] : layout) params.add(name, take(shape[0], shape[1]));
    ModelState state{Network(cfg, std::move(params))};
    for (auto* section : {&state.adam.m, &state.adam.v}) {
      for (auto& m : *section) m = take(m.rows(), m.cols());
    }
    state.adam.step = h.at("adam_step").get<std::int64_t>();
    state.labels = h.at("labels").get<std::vector<std::string>>();
    if (static_cast<int>(state.labels.size()) != cfg.output_width) {
      throw FormatError("shape mismatch: " + std::to_string(state.labels.size()) + " labels for output width " +
                        std::to_string(cfg.output_width));
    }
    state.homogeneous = h.at("homogeneous").get<bool>();
    state.trained_sites = h.at("trained_sites").get<int>();
    state.trained_depth = h.at("trained_depth").get<int>();
    state.epochs_completed = h.at("epochs_completed").get<std::int64_t>();
    const auto& best = h.at("best_validation_loss");
    state.best_validation_loss = best.is_null() ? std::numeric_limits<double>::infinity() : best.get<double>();
    return state;
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt model file: header field missing or mistyped: ") + e.what());
  }
}

}  // namespace scramble::nn
