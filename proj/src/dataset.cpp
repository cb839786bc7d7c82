// SPDX-License-Identifier: Apache-2.0
#include "scramble/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "scramble/binary_io.hpp"
#include "scramble/error.hpp"
#include "scramble/parallel.hpp"

namespace scramble::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::int64_t kChunkSamples = 256;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string order_name(sim::LayerOrder o) {
  return o == sim::LayerOrder::TwoBodyFirst ? "two_body_first" : "operator_string";
}

sim::LayerOrder parse_order(const std::string& s) {
  if (s == "two_body_first") return sim::LayerOrder::TwoBodyFirst;
  if (s == "operator_string") return sim::LayerOrder::OperatorString;
  throw FormatError("unknown layer order '" + s + "'");
}

json tensor_json(const TensorInfo& t) {
  return json{{"file", t.file},       {"shape", t.shape}, {"offset", t.offset},
              {"bytes", t.bytes},     {"crc32", t.crc32}, {"record_crc32", t.record_crc32}};
}

TensorInfo tensor_from_json(const json& j) {
  TensorInfo t;
  t.file = j.at("file").get<std::string>();
  t.shape = j.at("shape").get<std::vector<std::int64_t>>();
  t.offset = j.at("offset").get<std::uint64_t>();
  t.bytes = j.at("bytes").get<std::uint64_t>();
  t.crc32 = j.at("crc32").get<std::uint32_t>();
  t.record_crc32 = j.at("record_crc32").get<std::vector<std::uint32_t>>();
  return t;
}

std::vector<std::int64_t> input_shape(const DatasetConfig& c) {
  if (c.homogeneous) return {c.sample_count, c.depth, DatasetConfig::kFeatures};
  return {c.sample_count, c.depth, c.n_qubits, DatasetConfig::kFeatures};
}

std::uint64_t shape_elements(const std::vector<std::int64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw FormatError("negative tensor dimension");
    n *= static_cast<std::uint64_t>(d);
  }
  return n;
}

json manifest_json(const DatasetManifest& m) {
  const auto& c = m.config;
  json labels = json::array();
  for (const auto& l : m.labels) labels.push_back(l.name());
  return json{
      {"format", m.format},
      {"n_qubits", c.n_qubits},
      {"depth", c.depth},
      {"variant", std::string(sim::variant_name(c.variant))},
      {"layer_order", order_name(c.order)},
      {"homogeneous", c.homogeneous},
      {"sample_count", c.sample_count},
      {"master_seed", c.master_seed},
      {"gp", {{"amplitude", c.gp_amplitude}, {"correlation_length", c.gp_correlation_length}}},
      {"second_moment_site", c.second_moment_site},
      {"labels", labels},
      {"encoding", "float64-le"},
      {"tensors", {{"inputs", tensor_json(m.inputs)}, {"targets", tensor_json(m.targets)}}},
  };
}

}  // namespace

std::string ObservableLabel::name() const {
  std::string s;
  s += sim::axis_char(a);
  s += std::to_string(site);
  if (kind == MomentKind::Second) {
    s += sim::axis_char(b);
    s += std::to_string(site + offset);
  }
  return s;
}

ObservableLabel ObservableLabel::parse(const std::string& name) {
  auto fail = [&] { throw ValidationError("malformed observable label '" + name + "'"); };
  std::size_t pos = 0;
  auto read_term = [&](sim::PauliAxis& axis, int& site) {
    if (pos >= name.size()) fail();
    axis = sim::parse_axis(name.substr(pos, 1));
    ++pos;
    const std::size_t start = pos;
    while (pos < name.size() && std::isdigit(static_cast<unsigned char>(name[pos]))) ++pos;
    if (pos == start) fail();
    site = std::stoi(name.substr(start, pos - start));
  };
  ObservableLabel l;
  read_term(l.a, l.site);
  l.b = l.a;
  if (pos == name.size()) return l;
  int other = 0;
  read_term(l.b, other);
  if (pos != name.size() || other <= l.site) fail();
  l.kind = MomentKind::Second;
  l.offset = other - l.site;
  return l;
}

std::vector<ObservableLabel> select_labels(int n_qubits, bool homogeneous,
                                           int second_moment_site) {
  if (n_qubits < 3) {
    throw ValidationError("observable selection needs n_qubits >= 3, got " +
                          std::to_string(n_qubits));
  }
  if (second_moment_site < 1 || second_moment_site > n_qubits) {
    throw ValidationError("second_moment_site outside [1, n_qubits]");
  }
  std::vector<ObservableLabel> out;
  const int first_sites = homogeneous ? 1 : n_qubits / 2;
  for (int site = 1; site <= first_sites; ++site) {
    for (auto a : obs::kAxes) out.push_back({MomentKind::First, site, 0, a, a});
  }
  const int lmax = (n_qubits - 1) / 2;
  for (int l = 1; l <= lmax; ++l) {
    for (auto a : obs::kAxes) {
      for (auto b : obs::kAxes) out.push_back({MomentKind::Second, second_moment_site, l, a, b});
    }
  }
  return out;
}

double evaluate_label(const sim::StateVector& state, const ObservableLabel& label) {
  const int n = state.n_qubits();
  if (label.site < 1 || label.site > n) throw ValidationError("label site outside the chain");
  if (label.kind == MomentKind::First) {
    const obs::PauliTerm t{label.site - 1, label.a};
    return obs::expectation(state, {&t, 1});
  }
  const obs::PauliTerm terms[2] = {{label.site - 1, label.a},
                                   {(label.site - 1 + label.offset) % n, label.b}};
  return obs::expectation(state, terms);
}

void DatasetConfig::validate() const {
  if (n_qubits < 3) {
    throw ValidationError("n_qubits must be >= 3 for dataset generation, got " +
                          std::to_string(n_qubits));
  }
  if (depth < 1) throw ValidationError("depth must be >= 1, got " + std::to_string(depth));
  if (sample_count < 0) throw ValidationError("sample_count must be >= 0");
  gp::GpConfig g;
  g.length = depth;
  g.amplitude = gp_amplitude;
  g.correlation_length = gp_correlation_length;
  g.validate();
  if (second_moment_site < 1 || second_moment_site > n_qubits) {
    throw ValidationError("second_moment_site outside [1, n_qubits]");
  }
}

std::size_t DatasetConfig::input_stride() const {
  return static_cast<std::size_t>(depth) * (homogeneous ? 1 : n_qubits) * kFeatures;
}

std::uint64_t sample_seed(std::uint64_t master_seed, std::int64_t index) {
  return splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(index)));
}

sim::CircuitSpec sample_spec(const DatasetConfig& cfg, std::int64_t index) {
  gp::GpConfig g;
  g.length = cfg.depth;
  g.amplitude = cfg.gp_amplitude;
  g.correlation_length = cfg.gp_correlation_length;
  const auto factor = gp::factor_kernel(gp::build_kernel(g));
  const std::uint64_t seed = sample_seed(cfg.master_seed, index);

  sim::CircuitSpec spec;
  spec.n_qubits = cfg.n_qubits;
  spec.depth = cfg.depth;
  spec.variant = cfg.variant;
  spec.order = cfg.order;
  spec.angles.resize(static_cast<std::size_t>(cfg.depth) * cfg.n_qubits);
  if (cfg.homogeneous) {
    const auto theta = gp::map_to_angles(gp::raw_trajectory(factor, seed)).values;
    for (int p = 0; p < cfg.depth; ++p) {
      std::fill_n(spec.angles.begin() + p * cfg.n_qubits, cfg.n_qubits, theta[p]);
    }
  } else {
    for (int i = 0; i < cfg.n_qubits; ++i) {
      const auto theta =
          gp::map_to_angles(gp::raw_trajectory(factor, gp::site_seed(seed, i))).values;
      for (int p = 0; p < cfg.depth; ++p) spec.angles[p * cfg.n_qubits + i] = theta[p];
    }
  }
  return spec;
}

SampleRecord simulate_sample(const sim::CircuitSpec& spec,
                             std::span<const ObservableLabel> labels, bool homogeneous_inputs) {
  SampleRecord rec;
  const int n = spec.n_qubits;
  const std::size_t cells = homogeneous_inputs ? 1 : static_cast<std::size_t>(n);
  rec.inputs.reserve(spec.depth * cells * DatasetConfig::kFeatures);
  for (int p = 1; p <= spec.depth; ++p) {
    for (std::size_t i = 0; i < cells; ++i) {
      rec.inputs.push_back(spec.angle(p, static_cast<int>(i)));
      rec.inputs.push_back(static_cast<double>(p));
    }
  }
  rec.targets.reserve(spec.depth * labels.size());
  sim::run_circuit(spec, [&](int p, const sim::StateVector& s) {
    if (p == 0) return;
    for (const auto& l : labels) rec.targets.push_back(evaluate_label(s, l));
  });
  return rec;
}

sim::CircuitSpec spec_from_inputs(const DatasetManifest& manifest,
                                  std::span<const double> inputs) {
  const auto& c = manifest.config;
  if (inputs.size() != c.input_stride()) throw ValidationError("input record has wrong length");
  sim::CircuitSpec spec;
  spec.n_qubits = c.n_qubits;
  spec.depth = c.depth;
  spec.variant = c.variant;
  spec.order = c.order;
  spec.angles.resize(static_cast<std::size_t>(c.depth) * c.n_qubits);
  for (int p = 0; p < c.depth; ++p) {
    for (int i = 0; i < c.n_qubits; ++i) {
      const std::size_t cell = c.homogeneous ? p : static_cast<std::size_t>(p) * c.n_qubits + i;
      spec.angles[p * c.n_qubits + i] = inputs[cell * DatasetConfig::kFeatures];
    }
  }
  return spec;
}

DatasetManifest generate(const DatasetConfig& cfg, const fs::path& dir,
                         const GenerateOptions& options) {
  cfg.validate();
  if (cfg.n_qubits > options.limits.max_statevector_qubits) {
    throw CapacityError("n_qubits " + std::to_string(cfg.n_qubits) +
                        " exceeds the statevector limit of " +
                        std::to_string(options.limits.max_statevector_qubits));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.config = cfg;
  m.labels = select_labels(cfg.n_qubits, cfg.homogeneous, cfg.second_moment_site);
  m.inputs.file = "inputs.bin";
  m.inputs.shape = input_shape(cfg);
  m.targets.file = "targets.bin";
  m.targets.shape = {cfg.sample_count, cfg.depth, static_cast<std::int64_t>(m.labels.size())};

  const fs::path in_tmp = dir / "inputs.bin.tmp";
  const fs::path tg_tmp = dir / "targets.bin.tmp";
  std::ofstream in_out(in_tmp, std::ios::binary | std::ios::trunc);
  std::ofstream tg_out(tg_tmp, std::ios::binary | std::ios::trunc);
  if (!in_out || !tg_out) throw IoError("cannot open payload files in " + dir.string());

  const int threads = std::max(1, options.threads);
  std::vector<SampleRecord> chunk;
  for (std::int64_t start = 0; start < cfg.sample_count; start += kChunkSamples) {
    const std::int64_t count = std::min(kChunkSamples, cfg.sample_count - start);
    chunk.assign(static_cast<std::size_t>(count), {});
    parallel_for(count, threads, [&](std::int64_t k) {
      chunk[k] = simulate_sample(sample_spec(cfg, start + k), m.labels, cfg.homogeneous);
    });
    // Records are written strictly in index order.
    for (const auto& rec : chunk) {
      const auto ib = io::encode_f64(rec.inputs);
      const auto tb = io::encode_f64(rec.targets);
      m.inputs.record_crc32.push_back(io::crc32(ib));
      m.targets.record_crc32.push_back(io::crc32(tb));
      m.inputs.crc32 = io::crc32(ib, m.inputs.crc32);
      m.targets.crc32 = io::crc32(tb, m.targets.crc32);
      in_out.write(reinterpret_cast<const char*>(ib.data()), static_cast<std::streamsize>(ib.size()));
      tg_out.write(reinterpret_cast<const char*>(tb.data()), static_cast<std::streamsize>(tb.size()));
      m.inputs.bytes += ib.size();
      m.targets.bytes += tb.size();
    }
  }
  in_out.close();
  tg_out.close();
  if (!in_out || !tg_out) throw IoError("failed writing payload files in " + dir.string());
  fs::rename(in_tmp, dir / m.inputs.file, ec);
  if (!ec) fs::rename(tg_tmp, dir / m.targets.file, ec);
  if (ec) throw IoError("cannot finalise payload files: " + ec.message());

  io::write_file(dir / "manifest.json", io::as_bytes(manifest_json(m).dump(2) + "\n"));
  return m;
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) throw IoError("no manifest.json in " + dir.string());
  const auto bytes = io::read_file(path);
  json j;
  try {
    j = json::parse(reinterpret_cast<const char*>(bytes.data()),
                    reinterpret_cast<const char*>(bytes.data()) + bytes.size());
  } catch (const json::exception& e) {
    throw FormatError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
  DatasetManifest m;
  try {
    m.format = j.at("format").get<std::string>();
    if (m.format != kFormatVersion) {
      throw FormatError("dataset format version mismatch: expected " + std::string(kFormatVersion) +
                        ", found " + m.format);
    }
    if (j.at("encoding").get<std::string>() != "float64-le") {
      throw FormatError("unsupported payload encoding");
    }
    auto& c = m.config;
    c.n_qubits = j.at("n_qubits").get<int>();
    c.depth = j.at("depth").get<int>();
    c.variant = sim::parse_variant(j.at("variant").get<std::string>());
    c.order = parse_order(j.at("layer_order").get<std::string>());
    c.homogeneous = j.at("homogeneous").get<bool>();
    c.sample_count = j.at("sample_count").get<std::int64_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.gp_amplitude = j.at("gp").at("amplitude").get<double>();
    c.gp_correlation_length = j.at("gp").at("correlation_length").get<double>();
    c.second_moment_site = j.at("second_moment_site").get<int>();
    for (const auto& l : j.at("labels")) m.labels.push_back(ObservableLabel::parse(l.get<std::string>()));
    m.inputs = tensor_from_json(j.at("tensors").at("inputs"));
    m.targets = tensor_from_json(j.at("tensors").at("targets"));
  } catch (const json::exception& e) {
    throw FormatError("manifest.json is missing or mistypes a field: " + std::string(e.what()));
  } catch (const ValidationError& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  try {
    m.config.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("manifest.json describes an invalid config: ") + e.what());
  }

  const auto k = static_cast<std::int64_t>(m.labels.size());
  if (m.inputs.shape != input_shape(m.config)) {
    throw FormatError("shape error: inputs shape disagrees with n_qubits/depth/sample_count");
  }
  const std::vector<std::int64_t> tgt = {m.config.sample_count, m.config.depth, k};
  if (m.targets.shape != tgt) {
    throw FormatError("shape error: targets shape [" +
                      (m.targets.shape.size() == 3 ? std::to_string(m.targets.shape[2]) : "?") +
                      " channels] disagrees with " + std::to_string(k) + " labels");
  }
  for (const TensorInfo* t : {&m.inputs, &m.targets}) {
    if (t->bytes != shape_elements(t->shape) * 8 || t->offset != 0) {
      throw FormatError("shape error: " + t->file + " declares " + std::to_string(t->bytes) +
                        " bytes for its shape");
    }
    if (t->record_crc32.size() != static_cast<std::size_t>(m.config.sample_count)) {
      throw FormatError("record checksum table of " + t->file + " has the wrong length");
    }
  }
  return m;
}

namespace {

std::vector<double> load_tensor(const fs::path& dir, const TensorInfo& t, std::size_t stride) {
  const auto bytes = io::read_file(dir / t.file);
  if (bytes.size() != t.bytes) {
    throw FormatError((bytes.size() < t.bytes ? "truncated payload: " : "oversized payload: ") +
                      t.file + " has " + std::to_string(bytes.size()) + " bytes, manifest declares " +
                      std::to_string(t.bytes));
  }
  const std::size_t record_bytes = stride * 8;
  for (std::size_t r = 0; r < t.record_crc32.size(); ++r) {
    const auto rec = std::span(bytes).subspan(r * record_bytes, record_bytes);
    if (io::crc32(rec) != t.record_crc32[r]) {
      throw FormatError("checksum mismatch in " + t.file + " at byte offset " +
                        std::to_string(r * record_bytes) + " (record " + std::to_string(r) + ")");
    }
  }
  if (io::crc32(bytes) != t.crc32) {
    throw FormatError("checksum mismatch in " + t.file + " (whole file)");
  }
  return io::decode_f64(bytes);
}

}  // namespace

DatasetReader::DatasetReader(const fs::path& dir) : manifest_(read_manifest(dir)) {
  auto inputs = load_tensor(dir, manifest_.inputs, manifest_.input_stride());
  auto targets = load_tensor(dir, manifest_.targets, manifest_.target_stride());
  inputs_ = std::move(inputs);
  targets_ = std::move(targets);
}

SampleRecord DatasetReader::record(std::int64_t index) const {
  if (index < 0 || index >= size()) throw ValidationError("sample index out of range");
  const std::size_t is = manifest_.input_stride();
  const std::size_t ts = manifest_.target_stride();
  const auto i = static_cast<std::size_t>(index);
  return {{inputs_.begin() + i * is, inputs_.begin() + (i + 1) * is},
          {targets_.begin() + i * ts, targets_.begin() + (i + 1) * ts}};
}

SplitIndices split(std::int64_t count, std::array<double, 3> fractions, std::uint64_t seed) {
  if (count < 0) throw ValidationError("split count must be >= 0");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ValidationError("split fractions must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");

  std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  const auto n_val = static_cast<std::int64_t>(std::llround(fractions[1] * count));
  const auto n_test = std::min(count - n_val, static_cast<std::int64_t>(std::llround(fractions[2] * count)));
  const std::int64_t n_train = count - n_val - n_test;

  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.validation.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  s.test.assign(idx.begin() + n_train + n_val, idx.end());
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

}  // namespace scramble::data
