// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "run_config.hpp"
#include "json.hpp"
#include "scramble/dataset.hpp"
#include "scramble/nn/model_io.hpp"
#include "scramble/observables.hpp"
#include "support/temp_dir.hpp"

namespace scramble {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using test_support::TempDir;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

/// Column `name` of a CSV file, parsed as doubles.
std::vector<double> csv_column(const fs::path& p, const std::string& name) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  const auto col = std::find(header.begin(), header.end(), name) - header.begin();
  EXPECT_LT(col, static_cast<long>(header.size())) << name << " missing from " << p;
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (long k = 0; k <= col; ++k) std::getline(ss, cell, ',');
    values.push_back(std::stod(cell));
  }
  return values;
}

std::vector<std::string> csv_text_column(const fs::path& p, int col) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> values;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (int k = 0; k <= col; ++k) std::getline(ss, cell, ',');
    values.push_back(cell);
  }
  return values;
}

/// Small LSTM so training tests stay fast.
const char* kSmallNetwork = R"({"network": {"hidden": [16]}, "train": {"batch_size": 8, "patience": 1000}})";

TEST(CliGen, MinimalConfigWritesDeclaredSampleCount) {
  TempDir tmp;
  write_text(tmp / "cfg.json", R"({"circuit": {"n_qubits": 4, "depth": 5}, "dataset": {"samples": 7}})");
  const auto r = invoke({"gen", "--config", (tmp / "cfg.json").string(), "--out", (tmp / "ds").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = data::read_manifest(tmp / "ds");
  EXPECT_EQ(m.sample_count(), 7);
  EXPECT_EQ(m.config.n_qubits, 4);
  EXPECT_EQ(m.depth(), 5);
  EXPECT_NE(r.out.find("7 samples"), std::string::npos);
  const json echo = json::parse(slurp(tmp / "ds" / "run_config.json"));
  EXPECT_EQ(echo["dataset"]["samples"], 7);
  EXPECT_EQ(echo["command"], "gen");
  EXPECT_TRUE(fs::exists(tmp / "ds" / "run.log"));
}

TEST(CliGen, SameSeedIsByteIdentical) {
  TempDir tmp;
  const std::vector<std::string> base = {"gen", "--n", "5", "--depth", "6", "--samples", "40", "--seed", "11"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", (tmp / "a").string(), "--threads", "1"});
  b.insert(b.end(), {"--out", (tmp / "b").string(), "--threads", "3"});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  for (const char* f : {"manifest.json", "inputs.bin", "targets.bin"}) {
    EXPECT_EQ(slurp(tmp / "a" / f), slurp(tmp / "b" / f)) << f;
  }
  ASSERT_EQ(invoke({"gen", "--n", "5", "--depth", "6", "--samples", "40", "--seed", "12", "--out",
                    (tmp / "c").string()})
                .code,
            0);
  EXPECT_NE(slurp(tmp / "a" / "inputs.bin"), slurp(tmp / "c" / "inputs.bin"));
}

TEST(CliGen, TwoQubitsNamesTheField) {
  TempDir tmp;
  write_text(tmp / "cfg.json", R"({"circuit": {"n_qubits": 2}, "diag": {"max_offset": 2}})");
  const auto r = invoke({"gen", "--config", (tmp / "cfg.json").string(), "--out", (tmp / "ds").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("circuit.n_qubits"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(tmp / "ds" / "manifest.json"));
}

TEST(CliDiag, OffsetBeyondRingNamesTheField) {
  TempDir tmp;
  write_text(tmp / "cfg.json", R"({"circuit": {"n_qubits": 2}, "diag": {"max_offset": 2}})");
  const auto r = invoke({"diag", "--config", (tmp / "cfg.json").string(), "--diag", "correlators", "--out",
                         (tmp / "d").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("diag.max_offset"), std::string::npos) << r.err;
}

TEST(CliConfig, UnknownKeysAndWrongTypesAreRejected) {
  TempDir tmp;
  write_text(tmp / "a.json", R"({"circuit": {"qubits": 4}})");
  auto r = invoke({"gen", "--config", (tmp / "a.json").string(), "--out", (tmp / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("circuit.qubits"), std::string::npos) << r.err;

  write_text(tmp / "b.json", R"({"train": {"epochs": "many"}})");
  r = invoke({"gen", "--config", (tmp / "b.json").string(), "--out", (tmp / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("train.epochs"), std::string::npos) << r.err;

  write_text(tmp / "c.json", R"({"network": {"hiden": [4]}})");
  r = invoke({"gen", "--config", (tmp / "c.json").string(), "--out", (tmp / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("network.hiden"), std::string::npos) << r.err;

  write_text(tmp / "d.json", "{not json");
  r = invoke({"gen", "--config", (tmp / "d.json").string(), "--out", (tmp / "o").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(CliConfig, UnknownFlagIsAnError) {
  TempDir tmp;
  EXPECT_EQ(invoke({"gen", "--out", (tmp / "o").string(), "--qubits", "4"}).code, 1);
  EXPECT_EQ(invoke({"gen", "--out", (tmp / "o").string(), "--variant", "III"}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(CliConfig, FlagsOverrideTheFile) {
  TempDir tmp;
  write_text(tmp / "cfg.json", R"({"seed": 4, "circuit": {"n_qubits": 4, "depth": 3, "variant": "I"}})");
  ASSERT_EQ(invoke({"gen", "--config", (tmp / "cfg.json").string(), "--variant", "II", "--depth", "2",
                    "--samples", "3", "--inhomogeneous", "--seed", "9", "--out", (tmp / "o").string()})
                .code,
            0);
  const json echo = json::parse(slurp(tmp / "o" / "run_config.json"));
  EXPECT_EQ(echo["circuit"]["variant"], "II");
  EXPECT_EQ(echo["circuit"]["depth"], 2);
  EXPECT_EQ(echo["circuit"]["n_qubits"], 4);
  EXPECT_EQ(echo["dataset"]["homogeneous"], false);
  EXPECT_EQ(echo["seed"], 9);
  EXPECT_EQ(echo["dataset"]["master_seed"], 9);
  EXPECT_EQ(echo["train"]["seed"], 9);
  EXPECT_EQ(echo["network"]["seed"], 9);
}

TEST(CliDiag, MagnetizationOfDiagonalCircuitIsOne) {
  TempDir tmp;
  write_text(tmp / "cfg.json", R"({"diag": {"fixed_theta": 0.0, "realizations": 3}})");
  const auto r = invoke({"diag", "--config", (tmp / "cfg.json").string(), "--variant", "I", "--n", "6", "--depth",
                         "12", "--diag", "magnetization", "--out", (tmp / "d").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto mz = csv_column(tmp / "d" / "magnetization.csv", "magnetization");
  ASSERT_EQ(mz.size(), 13u);
  for (double v : mz) EXPECT_EQ(v, 1.0);
  EXPECT_TRUE(fs::exists(tmp / "d" / "magnetization.svg"));
}

TEST(CliDiag, OtocOfDiagonalCircuitVanishes) {
  TempDir tmp;
  write_text(tmp / "cfg.json", R"({"diag": {"fixed_theta": 0.0, "realizations": 2, "otoc_axis": "z"}})");
  const auto r = invoke({"diag", "--config", (tmp / "cfg.json").string(), "--variant", "I", "--n", "5", "--depth",
                         "6", "--diag", "otoc", "--out", (tmp / "d").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto v = csv_column(tmp / "d" / "otoc.csv", "value");
  ASSERT_EQ(v.size(), 7u * 5u);
  for (double x : v) EXPECT_LT(std::abs(x), 1e-12);
}

TEST(CliDiag, OtocAboveDenseBoundIsCapacityError) {
  TempDir tmp;
  const auto r = invoke({"diag", "--n", "11", "--depth", "2", "--diag", "otoc", "--out", (tmp / "d").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("dense"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(tmp / "d" / "otoc.csv"));
}

TEST(CliDiag, ScramblingCircuitApproachesPorterThomasEntropy) {
  TempDir tmp;
  const auto r = invoke({"diag", "--variant", "II", "--n", "10", "--depth", "20", "--diag", "entropies", "--out",
                         (tmp / "d").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto basis = csv_column(tmp / "d" / "entropies.csv", "basis_entropy");
  const auto pt = csv_column(tmp / "d" / "entropies.csv", "pt_reference");
  const auto pt_mean = csv_column(tmp / "d" / "entropies.csv", "pt_mean");
  ASSERT_EQ(basis.size(), 21u);
  EXPECT_DOUBLE_EQ(pt.back(), obs::pt_entropy(10));
  EXPECT_DOUBLE_EQ(pt_mean.back(), obs::porter_thomas_mean_entropy(10));
  EXPECT_LT(std::abs(basis.back() - pt_mean.back()), 0.3) << basis.back();
}

TEST(CliDiag, OutputDoesNotDependOnThreads) {
  TempDir tmp;
  const std::vector<std::string> base = {"diag", "--n", "6", "--depth", "8", "--diag", "entropies", "--diag",
                                         "correlators", "--diag", "otoc", "--diag", "magnetization"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", (tmp / "a").string(), "--threads", "1"});
  b.insert(b.end(), {"--out", (tmp / "b").string(), "--threads", "4"});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  for (const char* f : {"entropies.csv", "correlators.csv", "otoc.csv", "magnetization.csv"}) {
    EXPECT_EQ(slurp(tmp / "a" / f), slurp(tmp / "b" / f)) << f;
  }
  const auto offsets = csv_column(tmp / "a" / "correlators.csv", "offset");
  EXPECT_EQ(*std::max_element(offsets.begin(), offsets.end()), 2.0);
}

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    write_text(tmp_ / "net.json", kSmallNetwork);
    ASSERT_EQ(invoke({"gen", "--n", "4", "--depth", "6", "--samples", "60", "--seed", "5", "--out",
                      dataset().string()})
                  .code,
              0);
  }
  fs::path dataset() const { return tmp_ / "ds"; }
  fs::path config() const { return tmp_ / "net.json"; }

  Outcome train(const std::string& out, int epochs, std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {"train", "--config", config().string(), "--dataset", dataset().string(),
                                     "--epochs", std::to_string(epochs), "--out", (tmp_ / out).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  }

  TempDir tmp_;
};

TEST_F(CliPipeline, SmokeTrainingRunIsQuick) {
  ASSERT_EQ(invoke({"gen", "--n", "4", "--depth", "6", "--samples", "10", "--out", (tmp_ / "small").string()}).code,
            0);
  const auto start = std::chrono::steady_clock::now();
  const auto r = invoke({"train", "--dataset", (tmp_ / "small").string(), "--epochs", "1", "--out",
                         (tmp_ / "t").string()});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(seconds, 60.0);
  EXPECT_TRUE(fs::exists(tmp_ / "t" / "model.scramble"));
  EXPECT_EQ(csv_column(tmp_ / "t" / "history.csv", "epoch").size(), 1u);
  EXPECT_EQ(slurp(tmp_ / "t" / "model.scramble").rfind(nn::kModelFormat, 0), 0u);
}

TEST_F(CliPipeline, MissingDatasetIsIoError) {
  const auto r = invoke({"train", "--dataset", (tmp_ / "nowhere").string(), "--out", (tmp_ / "t").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos) << r.err;
}

TEST_F(CliPipeline, ResumeContinuesTheStepCounter) {
  ASSERT_EQ(train("a", 2).code, 0);
  const auto first = nn::load_model(tmp_ / "a" / "model.scramble");
  ASSERT_EQ(train("b", 3, {"--resume", (tmp_ / "a" / "model.scramble").string()}).code, 0);
  const auto second = nn::load_model(tmp_ / "b" / "model.scramble");
  EXPECT_EQ(first.epochs_completed, 2);
  EXPECT_EQ(second.epochs_completed, 5);
  EXPECT_GT(first.adam.step, 0);
  EXPECT_EQ(second.adam.step, first.adam.step * 5 / 2);
  EXPECT_EQ(csv_column(tmp_ / "b" / "history.csv", "epoch").front(), 3.0);
}

TEST_F(CliPipeline, TrainingSetScoresBetterThanTestSet) {
  ASSERT_EQ(train("t", 150).code, 0);
  const auto model = (tmp_ / "t" / "model.scramble").string();
  const auto split = (tmp_ / "t" / "split.json").string();
  for (const char* subset : {"train", "test"}) {
    ASSERT_EQ(invoke({"eval", "--model", model, "--dataset", dataset().string(), "--split", split, "--subset",
                      subset, "--out", (tmp_ / subset).string()})
                  .code,
              0);
  }
  const auto train_mse = json::parse(slurp(tmp_ / "train" / "report.json"))["overall"].get<double>();
  const auto test_mse = json::parse(slurp(tmp_ / "test" / "report.json"))["overall"].get<double>();
  EXPECT_LT(train_mse, test_mse);
}

TEST_F(CliPipeline, RegionsFollowPTrain) {
  ASSERT_EQ(train("t", 1).code, 0);
  const auto model = (tmp_ / "t" / "model.scramble").string();
  ASSERT_EQ(invoke({"eval", "--model", model, "--dataset", dataset().string(), "--p-train", "6", "--out",
                    (tmp_ / "full").string()})
                .code,
            0);
  for (const auto& region : csv_text_column(tmp_ / "full" / "depth_mse.csv", 1)) EXPECT_EQ(region, "interpolated");
  ASSERT_EQ(invoke({"eval", "--model", model, "--dataset", dataset().string(), "--p-train", "4", "--out",
                    (tmp_ / "part").string()})
                .code,
            0);
  const auto regions = csv_text_column(tmp_ / "part" / "depth_mse.csv", 1);
  ASSERT_EQ(regions.size(), 6u);
  EXPECT_EQ(regions[3], "interpolated");
  EXPECT_EQ(regions[4], "extrapolated");
  const json report = json::parse(slurp(tmp_ / "part" / "report.json"));
  EXPECT_FALSE(report["extrapolated"].is_null());
}

TEST_F(CliPipeline, WrongObservableSetReportsLabelDiff) {
  ASSERT_EQ(train("t", 1).code, 0);
  ASSERT_EQ(invoke({"gen", "--n", "6", "--depth", "6", "--samples", "4", "--out", (tmp_ / "n6").string()}).code, 0);
  const auto r = invoke({"eval", "--model", (tmp_ / "t" / "model.scramble").string(), "--dataset",
                         (tmp_ / "n6").string(), "--out", (tmp_ / "e").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unexpected: x1x3"), std::string::npos) << r.err;
}

TEST_F(CliPipeline, SizeExtrapolationWritesOneRowPerSize) {
  write_text(tmp_ / "conv.json",
             R"({"network": {"architecture": "convlstm", "hidden": [4, 4]}, "train": {"batch_size": 8}})");
  for (const char* n : {"4", "6"}) {
    ASSERT_EQ(invoke({"gen", "--n", n, "--depth", "4", "--samples", "12", "--inhomogeneous", "--out",
                      (tmp_ / (std::string("inh") + n)).string()})
                  .code,
              0);
  }
  ASSERT_EQ(invoke({"train", "--config", (tmp_ / "conv.json").string(), "--dataset", (tmp_ / "inh4").string(),
                    "--epochs", "1", "--out", (tmp_ / "c").string()})
                .code,
            0);
  const auto r = invoke({"eval", "--model", (tmp_ / "c" / "model.scramble").string(), "--size-extrapolation",
                         "--dataset", (tmp_ / "inh4").string(), "--dataset", (tmp_ / "inh6").string(), "--out",
                         (tmp_ / "e").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sizes = csv_column(tmp_ / "e" / "size_mse.csv", "n_qubits");
  EXPECT_EQ(sizes, (std::vector<double>{4, 6}));
  EXPECT_TRUE(fs::exists(tmp_ / "e" / "n6" / "depth_mse.csv"));
}

TEST(CliConfig, PresetsLoadAndValidate) {
  const fs::path dir = fs::path(SCRAMBLE_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const auto c = cli::load_config(entry.path());
    for (auto cmd : {cli::Command::Gen, cli::Command::Diag, cli::Command::Train}) EXPECT_NO_THROW(cli::validate(c, cmd));
    ++seen;
  }
  EXPECT_GE(seen, 4);
  const auto full = cli::load_config(dir / "full_lstm.json");
  EXPECT_EQ(full.dataset.sample_count, 60000);
  EXPECT_EQ(full.train.network.hidden, (std::vector<int>{200, 200, 200}));
}

}  // namespace
}  // namespace scramble
