// SPDX-License-Identifier: Apache-2.0
#include "run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "scramble/error.hpp"
#include "scramble/nn/model_io.hpp"
#include "scramble/parallel.hpp"

namespace scramble::cli {

using nlohmann::json;

RunConfig::RunConfig() {
  train.network = nn::NetworkConfig::lstm(0);
  threads = default_threads();
  apply_seed(*this, seed);
}

void apply_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.dataset.master_seed = seed;
  c.train.seed = seed;
  c.train.network.seed = seed;
}

namespace {

std::string order_name(sim::LayerOrder o) {
  return o == sim::LayerOrder::TwoBodyFirst ? "two_body_first" : "operator_string";
}

sim::LayerOrder parse_order(const std::string& s) {
  if (s == "two_body_first") return sim::LayerOrder::TwoBodyFirst;
  if (s == "operator_string") return sim::LayerOrder::OperatorString;
  throw ValidationError("layer_order must be 'two_body_first' or 'operator_string', got '" + s + "'");
}

/// Iterates an object section, rejecting unknown keys and translating type
/// errors into messages that name the field.
template <class Fn>
void section(const json& j, const std::string& where, const std::set<std::string>& known, Fn&& apply) {
  if (!j.is_object()) throw ValidationError("config field '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string field = where.empty() ? key : where + "." + key;
    if (!known.contains(key)) throw ValidationError("unknown config key '" + field + "'");
    try {
      apply(key, value);
    } catch (const json::exception&) {
      throw ValidationError("config field '" + field + "' has the wrong type");
    } catch (const ValidationError& e) {
      throw ValidationError("config field '" + field + "': " + e.what());
    }
  }
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError("invalid " + field + ": " + what);
}

}  // namespace

json to_json(const RunConfig& c) {
  const auto& d = c.dataset;
  const auto& t = c.train;
  const auto& g = c.diag;
  const std::string axis(1, sim::axis_char(g.otoc_axis));
  return json{
      {"seed", c.seed},
      {"threads", c.threads},
      {"circuit",
       {{"n_qubits", d.n_qubits},
        {"depth", d.depth},
        {"variant", std::string(sim::variant_name(d.variant))},
        {"layer_order", order_name(d.order)}}},
      {"gp", {{"amplitude", d.gp_amplitude}, {"correlation_length", d.gp_correlation_length}}},
      {"dataset",
       {{"homogeneous", d.homogeneous},
        {"samples", d.sample_count},
        {"second_moment_site", d.second_moment_site},
        {"master_seed", d.master_seed}}},
      {"network", nn::to_json(t.network)},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"patience", t.patience},
        {"split", t.split},
        {"clip_norm", t.clip_norm},
        {"p_train", t.p_train},
        {"shard_size", t.shard_size},
        {"precision", t.precision},
        {"seed", t.seed}}},
      {"diag",
       {{"selection", g.selection},
        {"realizations", g.realizations},
        {"otoc_axis", axis},
        {"otoc_source", g.otoc_source},
        {"max_offset", g.max_offset},
        {"correlator_site", g.correlator_site},
        {"fixed_theta", g.use_fixed_theta ? json(g.fixed_theta) : json(nullptr)},
        {"svg", g.svg}}},
      {"limits",
       {{"max_statevector_qubits", c.limits.max_statevector_qubits},
        {"max_dense_qubits", c.limits.max_dense_qubits}}},
  };
}

RunConfig merge(RunConfig c, const json& j) {
  if (j.contains("seed")) {
    try {
      apply_seed(c, j.at("seed").get<std::uint64_t>());
    } catch (const json::exception&) {
      throw ValidationError("config field 'seed' has the wrong type");
    }
  }
  section(j, "", {"seed", "threads", "circuit", "gp", "dataset", "network", "train", "diag", "limits"},
          [&](const std::string& key, const json& v) {
            if (key == "threads") c.threads = v.get<int>();
            if (key == "circuit") {
              section(v, "circuit", {"n_qubits", "depth", "variant", "layer_order"}, [&](const std::string& k, const json& x) {
                if (k == "n_qubits") c.dataset.n_qubits = x.get<int>();
                if (k == "depth") c.dataset.depth = x.get<int>();
                if (k == "variant") c.dataset.variant = sim::parse_variant(x.get<std::string>());
                if (k == "layer_order") c.dataset.order = parse_order(x.get<std::string>());
              });
            }
            if (key == "gp") {
              section(v, "gp", {"amplitude", "correlation_length"}, [&](const std::string& k, const json& x) {
                if (k == "amplitude") c.dataset.gp_amplitude = x.get<double>();
                if (k == "correlation_length") c.dataset.gp_correlation_length = x.get<double>();
              });
            }
            if (key == "dataset") {
              section(v, "dataset", {"homogeneous", "samples", "second_moment_site", "master_seed"},
                      [&](const std::string& k, const json& x) {
                        if (k == "homogeneous") c.dataset.homogeneous = x.get<bool>();
                        if (k == "samples") c.dataset.sample_count = x.get<std::int64_t>();
                        if (k == "second_moment_site") c.dataset.second_moment_site = x.get<int>();
                        if (k == "master_seed") c.dataset.master_seed = x.get<std::uint64_t>();
                      });
            }
            if (key == "network") c.train.network = nn::network_config_from_json(v, c.train.network, "network");
            if (key == "train") {
              section(v, "train",
                      {"epochs", "batch_size", "learning_rate", "patience", "split", "clip_norm", "p_train",
                       "shard_size", "precision", "seed"},
                      [&](const std::string& k, const json& x) {
                        auto& t = c.train;
                        if (k == "epochs") t.epochs = x.get<int>();
                        if (k == "batch_size") t.batch_size = x.get<int>();
                        if (k == "learning_rate") t.learning_rate = x.get<double>();
                        if (k == "patience") t.patience = x.get<int>();
                        if (k == "split") t.split = x.get<std::array<double, 3>>();
                        if (k == "clip_norm") t.clip_norm = x.get<double>();
                        if (k == "p_train") t.p_train = x.get<int>();
                        if (k == "shard_size") t.shard_size = x.get<int>();
                        if (k == "precision") t.precision = x.get<std::string>();
                        if (k == "seed") t.seed = x.get<std::uint64_t>();
                      });
            }
            if (key == "diag") {
              section(v, "diag",
                      {"selection", "realizations", "otoc_axis", "otoc_source", "max_offset", "correlator_site",
                       "fixed_theta", "svg"},
                      [&](const std::string& k, const json& x) {
                        auto& g = c.diag;
                        if (k == "selection") g.selection = x.get<std::vector<std::string>>();
                        if (k == "realizations") g.realizations = x.get<int>();
                        if (k == "otoc_axis") g.otoc_axis = sim::parse_axis(x.get<std::string>());
                        if (k == "otoc_source") g.otoc_source = x.get<int>();
                        if (k == "max_offset") g.max_offset = x.get<int>();
                        if (k == "correlator_site") g.correlator_site = x.get<int>();
                        if (k == "fixed_theta") {
                          g.use_fixed_theta = !x.is_null();
                          if (g.use_fixed_theta) g.fixed_theta = x.get<double>();
                        }
                        if (k == "svg") g.svg = x.get<bool>();
                      });
            }
            if (key == "limits") {
              section(v, "limits", {"max_statevector_qubits", "max_dense_qubits"}, [&](const std::string& k, const json& x) {
                if (k == "max_statevector_qubits") c.limits.max_statevector_qubits = x.get<int>();
                if (k == "max_dense_qubits") c.limits.max_dense_qubits = x.get<int>();
              });
            }
          });
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return merge(std::move(base), j);
}

void validate(const RunConfig& c, Command cmd) {
  require(c.threads >= 1, "threads", "must be >= 1");
  require(c.limits.max_statevector_qubits >= 1 && c.limits.max_statevector_qubits <= 34,
          "limits.max_statevector_qubits", "must lie in [1, 34]");
  require(c.limits.max_dense_qubits >= 1 && c.limits.max_dense_qubits <= 14, "limits.max_dense_qubits",
          "must lie in [1, 14]");
  const auto& d = c.dataset;
  if (cmd == Command::Gen || cmd == Command::Diag) {
    const int min_n = cmd == Command::Gen ? 3 : 2;
    require(d.n_qubits >= min_n, "circuit.n_qubits",
            "must be >= " + std::to_string(min_n) + ", got " + std::to_string(d.n_qubits));
    require(d.n_qubits <= c.limits.max_statevector_qubits, "circuit.n_qubits",
            std::to_string(d.n_qubits) + " exceeds limits.max_statevector_qubits");
    require(d.depth >= 1, "circuit.depth", "must be >= 1");
    gp::GpConfig g;
    g.length = d.depth;
    g.amplitude = d.gp_amplitude;
    g.correlation_length = d.gp_correlation_length;
    try {
      g.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("invalid gp: ") + e.what());
    }
  }
  if (cmd == Command::Gen) {
    require(d.sample_count >= 0, "dataset.samples", "must be >= 0");
    require(d.second_moment_site >= 1 && d.second_moment_site <= d.n_qubits, "dataset.second_moment_site",
            "must lie in [1, circuit.n_qubits]");
  }
  if (cmd == Command::Diag) {
    const auto& g = c.diag;
    require(!g.selection.empty(), "diag.selection", "is empty");
    for (const auto& s : g.selection) {
      require(std::find(kDiagnostics.begin(), kDiagnostics.end(), s) != kDiagnostics.end(), "diag.selection",
              "unknown diagnostic '" + s + "' (choose from correlators, magnetization, entropies, otoc)");
    }
    require(g.realizations >= 1, "diag.realizations", "must be >= 1");
    const bool wants_correlators = std::find(g.selection.begin(), g.selection.end(), "correlators") != g.selection.end();
    if (wants_correlators) {
      const int lmax = (d.n_qubits - 1) / 2;
      require(g.max_offset >= 0 && g.effective_max_offset(d.n_qubits) >= 1 &&
                  g.effective_max_offset(d.n_qubits) <= lmax,
              "diag.max_offset",
              "offset range [1, " + std::to_string(g.effective_max_offset(d.n_qubits)) + "] is not within [1, " +
                  std::to_string(lmax) + "] for circuit.n_qubits = " + std::to_string(d.n_qubits));
      require(g.correlator_site >= 1 && g.correlator_site <= d.n_qubits, "diag.correlator_site",
              "must lie in [1, circuit.n_qubits]");
    }
    require(g.otoc_source >= 0 && g.otoc_source <= d.n_qubits, "diag.otoc_source", "must lie in [0, circuit.n_qubits]");
    if (g.use_fixed_theta) {
      require(g.fixed_theta >= 0.0 && g.fixed_theta <= 3.14159265358979323846, "diag.fixed_theta",
              "must lie in [0, pi]");
    }
  }
  if (cmd == Command::Train) {
    try {
      c.train.validate();
      auto net = c.train.network;
      if (net.output_width == 0) net.output_width = 1;
      net.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("invalid train/network config: ") + e.what());
    }
  }
}

}  // namespace scramble::cli
