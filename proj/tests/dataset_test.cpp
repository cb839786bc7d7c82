// SPDX-License-Identifier: Apache-2.0
#include "scramble/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "json.hpp"
#include "scramble/binary_io.hpp"
#include "scramble/error.hpp"
#include "support/dense_oracle.hpp"
#include "support/temp_dir.hpp"

using namespace scramble;
using namespace scramble::data;
using scramble::test_support::TempDir;

namespace {

DatasetConfig small_config(std::int64_t samples, bool homogeneous = true) {
  DatasetConfig c;
  c.n_qubits = 4;
  c.depth = 3;
  c.sample_count = samples;
  c.homogeneous = homogeneous;
  c.master_seed = 42;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

template <class Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Labels, CountsMatchLayoutFormulas) {
  EXPECT_EQ(select_labels(8, true).size(), 30u);
  EXPECT_EQ(select_labels(8, false).size(), 39u);
  EXPECT_EQ(select_labels(10, true).size(), 39u);
  for (int n = 3; n <= 24; ++n) {
    const int l = (n - 1) / 2;
    EXPECT_EQ(select_labels(n, true).size(), std::size_t(3 + 9 * l)) << n;
    EXPECT_EQ(select_labels(n, false).size(), std::size_t(3 * (n / 2) + 9 * l)) << n;
  }
  EXPECT_THROW(select_labels(2, true), ValidationError);
}

TEST(Labels, OrderingAndNames) {
  const auto labels = select_labels(8, false);
  EXPECT_EQ(labels[0].name(), "x1");
  EXPECT_EQ(labels[2].name(), "z1");
  EXPECT_EQ(labels[3].name(), "x2");
  EXPECT_EQ(labels[11].name(), "z4");
  EXPECT_EQ(labels[12].name(), "x1x2");
  EXPECT_EQ(labels[13].name(), "x1y2");
  EXPECT_EQ(labels[20].name(), "z1z2");
  EXPECT_EQ(labels[21].name(), "x1x3");
  EXPECT_EQ(labels.back().name(), "z1z4");
  std::set<std::string> names;
  for (const auto& l : labels) {
    EXPECT_EQ(ObservableLabel::parse(l.name()), l);
    names.insert(l.name());
  }
  EXPECT_EQ(names.size(), labels.size());
  EXPECT_THROW(ObservableLabel::parse("q1"), ValidationError);
  EXPECT_THROW(ObservableLabel::parse("z"), ValidationError);
  EXPECT_THROW(ObservableLabel::parse("z3x2"), ValidationError);
}

TEST(Generate, EmptyDatasetIsValid) {
  TempDir dir;
  const auto m = generate(small_config(0), dir.path());
  EXPECT_EQ(m.sample_count(), 0);
  EXPECT_EQ(std::filesystem::file_size(dir / "inputs.bin"), 0u);
  EXPECT_EQ(std::filesystem::file_size(dir / "targets.bin"), 0u);
  DatasetReader r(dir.path());
  EXPECT_EQ(r.size(), 0);
  EXPECT_EQ(r.begin(), r.end());
}

TEST(Generate, ByteIdenticalAcrossRunsAndThreadCounts) {
  TempDir a, b;
  generate(small_config(2), a.path());
  generate(small_config(2), b.path(), {.threads = 3});
  for (const char* f : {"manifest.json", "inputs.bin", "targets.bin"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Generate, DifferentSeedsDiffer) {
  TempDir a, b;
  auto c = small_config(2);
  generate(c, a.path());
  c.master_seed = 43;
  generate(c, b.path());
  EXPECT_NE(slurp(a / "inputs.bin"), slurp(b / "inputs.bin"));
}

TEST(Generate, RegenerationMatchesDenseOracle) {
  TempDir dir;
  DatasetConfig c;
  c.n_qubits = 6;
  c.depth = 10;
  c.sample_count = 100;
  c.homogeneous = true;
  c.variant = sim::Variant::CircuitI;
  generate(c, dir.path());

  DatasetReader reader(dir.path());
  const auto& m = reader.manifest();
  const auto k = static_cast<std::size_t>(m.label_count());
  std::vector<oracle::Mat> ops;
  for (const auto& l : m.labels) {
    if (l.kind == MomentKind::First) {
      ops.push_back(oracle::pauli_on(l.a, l.site - 1, c.n_qubits));
    } else {
      ops.push_back(oracle::embed({{l.site - 1, oracle::pauli(l.a)},
                                   {(l.site - 1 + l.offset) % c.n_qubits, oracle::pauli(l.b)}},
                                  c.n_qubits));
    }
  }
  double worst = 0.0;
  for (std::int64_t s = 0; s < reader.size(); ++s) {
    const auto rec = reader.record(s);
    const auto spec = spec_from_inputs(m, rec.inputs);
    ASSERT_TRUE(spec.is_homogeneous());
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(64);
    psi(0) = 1.0;
    for (int p = 1; p <= c.depth; ++p) {
      psi = oracle::module_unitary(spec, p) * psi;
      EXPECT_DOUBLE_EQ(rec.inputs[(p - 1) * 2 + 1], p);
      const double theta = rec.inputs[(p - 1) * 2];
      EXPECT_GE(theta, 0.0);
      EXPECT_LE(theta, std::numbers::pi);
      for (std::size_t j = 0; j < k; ++j) {
        const double stored = rec.targets[(p - 1) * k + j];
        worst = std::max(worst, std::abs(stored - oracle::dense_expectation(psi, ops[j])));
        EXPECT_LE(std::abs(stored), 1.0 + 1e-12);
      }
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Generate, InhomogeneousInputsCarryPerSiteAngles) {
  TempDir dir;
  const auto c = small_config(3, false);
  generate(c, dir.path());
  DatasetReader reader(dir.path());
  EXPECT_EQ(reader.manifest().inputs.shape, (std::vector<std::int64_t>{3, 3, 4, 2}));
  const auto rec = reader.record(1);
  ASSERT_EQ(rec.inputs.size(), 3u * 4 * 2);
  const auto spec = spec_from_inputs(reader.manifest(), rec.inputs);
  EXPECT_FALSE(spec.is_homogeneous());
  const auto again = simulate_sample(sample_spec(c, 1), reader.manifest().labels, false);
  EXPECT_EQ(again.inputs, rec.inputs);
  EXPECT_EQ(again.targets, rec.targets);
}

TEST(Load, RoundTripIsBitIdentical) {
  TempDir dir;
  const auto c = small_config(5);
  const auto written = generate(c, dir.path());
  DatasetReader reader(dir.path());
  EXPECT_EQ(reader.manifest().labels, written.labels);
  std::int64_t s = 0;
  for (const auto rec : reader) {
    const auto fresh = simulate_sample(sample_spec(c, s), written.labels, true);
    EXPECT_EQ(rec.inputs, fresh.inputs);
    EXPECT_EQ(rec.targets, fresh.targets);
    ++s;
  }
  EXPECT_EQ(s, 5);
}

TEST(Load, CorruptedByteReportsOffset) {
  TempDir dir;
  const auto m = generate(small_config(4), dir.path());
  auto bytes = slurp(dir / "targets.bin");
  const std::size_t record_bytes = m.target_stride() * 8;
  bytes[2 * record_bytes + 5] ^= 0x40;
  spit(dir / "targets.bin", bytes);
  const auto msg = error_message([&] { DatasetReader r(dir.path()); });
  EXPECT_NE(msg.find("checksum"), std::string::npos) << msg;
  EXPECT_NE(msg.find("offset " + std::to_string(2 * record_bytes)), std::string::npos) << msg;
}

TEST(Load, LabelStrideMismatchIsShapeError) {
  TempDir dir;
  generate(small_config(2), dir.path());
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  auto labels = j["labels"];
  labels.erase(labels.size() - 1);
  j["labels"] = labels;
  spit(dir / "manifest.json", j.dump());
  const auto msg = error_message([&] { DatasetReader r(dir.path()); });
  EXPECT_NE(msg.find("shape"), std::string::npos) << msg;
}

TEST(Load, VersionMismatch) {
  TempDir dir;
  generate(small_config(1), dir.path());
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  j["format"] = "scramble-ds/0";
  spit(dir / "manifest.json", j.dump());
  const auto msg = error_message([&] { read_manifest(dir.path()); });
  EXPECT_NE(msg.find("version"), std::string::npos) << msg;
}

TEST(Load, TruncatedPayload) {
  TempDir dir;
  generate(small_config(3), dir.path());
  auto bytes = slurp(dir / "inputs.bin");
  bytes.resize(bytes.size() - 8);
  spit(dir / "inputs.bin", bytes);
  const auto msg = error_message([&] { DatasetReader r(dir.path()); });
  EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
}

TEST(Load, MissingDirectoryIsIoError) {
  TempDir dir;
  EXPECT_THROW(read_manifest(dir / "nope"), IoError);
}

TEST(BinaryIo, LittleEndianEncoding) {
  const double v[] = {1.0, -2.5};
  const auto b = io::encode_f64(v);
  ASSERT_EQ(b.size(), 16u);
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(b[7], std::byte{0x3F});
  EXPECT_EQ(b[6], std::byte{0xF0});
  EXPECT_EQ(b[0], std::byte{0x00});
  EXPECT_EQ(io::decode_f64(b), std::vector<double>(std::begin(v), std::end(v)));
  EXPECT_THROW(io::decode_f64(std::span(b).first(7)), FormatError);
}

TEST(BinaryIo, Crc32KnownValue) {
  // Standard check value for "123456789".
  EXPECT_EQ(io::crc32(io::as_bytes("123456789")), 0xCBF43926u);
  const std::string s = "123456789";
  const auto part = io::crc32(io::as_bytes(s.substr(0, 4)));
  EXPECT_EQ(io::crc32(io::as_bytes(s.substr(4)), part), 0xCBF43926u);
}

TEST(Split, Examples) {
  const auto all = split(10, {1, 0, 0}, 7);
  EXPECT_EQ(all.train.size(), 10u);
  EXPECT_TRUE(all.validation.empty());
  EXPECT_TRUE(all.test.empty());

  const auto s = split(100, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.validation.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
  std::set<std::int64_t> seen(s.train.begin(), s.train.end());
  seen.insert(s.validation.begin(), s.validation.end());
  seen.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(*seen.rbegin(), 99);

  const auto again = split(100, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.validation, s.validation);
  EXPECT_NE(split(100, {0.8, 0.1, 0.1}, 8).train, s.train);

  EXPECT_THROW(split(10, {0.5, 0.5, 0.5}, 1), ValidationError);
  EXPECT_THROW(split(10, {1.2, -0.1, -0.1}, 1), ValidationError);
}
