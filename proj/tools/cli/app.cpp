// SPDX-License-Identifier: Apache-2.0
#include "app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "diagnostics.hpp"
#include "run_config.hpp"
#include "scramble/error.hpp"
#include "scramble/nn/model_io.hpp"
#include "scramble/train_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scramble::cli {

namespace {

/// Flag values; unset optionals leave the config file (or default) untouched.
struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> variant;
  bool homogeneous = false;
  bool inhomogeneous = false;
  std::optional<int> n;
  std::optional<int> depth;
  std::optional<std::int64_t> samples;
  std::optional<int> p_train;
  std::vector<std::string> diag;
  std::vector<std::string> datasets;
  std::string model;
  std::string resume;
  std::optional<int> epochs;
  bool size_extrapolation = false;
  std::string split_file;
  std::string subset = "all";
};

class RunLog {
 public:
  explicit RunLog(const fs::path& path) : file_(path, std::ios::app) {
    if (!file_) throw IoError("cannot write " + path.string());
  }
  void operator()(const std::string& line) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    file_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << line << '\n';
    file_.flush();
  }

 private:
  std::ofstream file_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

RunConfig effective_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config(f.config, c);
  if (f.seed) apply_seed(c, *f.seed);
  if (f.threads) c.threads = *f.threads;
  if (f.variant) c.dataset.variant = sim::parse_variant(*f.variant);
  if (f.homogeneous && f.inhomogeneous) throw ValidationError("--homogeneous and --inhomogeneous are exclusive");
  if (f.homogeneous) c.dataset.homogeneous = true;
  if (f.inhomogeneous) c.dataset.homogeneous = false;
  if (f.n) c.dataset.n_qubits = *f.n;
  if (f.depth) c.dataset.depth = *f.depth;
  if (f.samples) c.dataset.sample_count = *f.samples;
  if (f.p_train) c.train.p_train = *f.p_train;
  if (!f.diag.empty()) c.diag.selection = f.diag;
  if (f.epochs) c.train.epochs = *f.epochs;
  c.train.threads = c.threads;
  return c;
}

json split_json(const data::SplitIndices& s) {
  return json{{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
}

std::vector<std::int64_t> read_subset(const fs::path& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read split file " + path.string());
  try {
    const json j = json::parse(in);
    return j.at(name).get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw FormatError("split file " + path.string() + " has no index list '" + name + "': " + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(6) << v;
  return o.str();
}

int cmd_gen(const RunConfig& c, const fs::path& out, std::ostream& os, RunLog& log) {
  validate(c, Command::Gen);
  log("gen start: N=" + std::to_string(c.dataset.n_qubits) + " P=" + std::to_string(c.dataset.depth) +
      " samples=" + std::to_string(c.dataset.sample_count));
  data::GenerateOptions opts;
  opts.threads = c.threads;
  opts.limits = c.limits;
  const auto m = data::generate(c.dataset, out, opts);
  os << "dataset " << out.string() << ": " << m.sample_count() << " samples, circuit "
     << sim::variant_name(m.config.variant) << ", N=" << m.config.n_qubits << ", P=" << m.depth() << ", "
     << m.label_count() << " observables, " << (m.config.homogeneous ? "homogeneous" : "inhomogeneous") << '\n';
  log("gen done");
  return 0;
}

int cmd_diag(const RunConfig& c, const fs::path& out, std::ostream& os, RunLog& log) {
  log("diag start");
  const DiagResult r = run_diagnostics(c);
  for (const auto& p : write_diagnostics(r, out, c.diag.svg)) os << "wrote " << p.string() << '\n';
  if (r.has("entropies")) {
    os << "final basis entropy " << fmt(r.basis_entropy(r.depth)) << " nats, PT reference " << fmt(r.pt_reference)
       << '\n';
  }
  log("diag done");
  return 0;
}

int cmd_train(RunConfig c, const Flags& f, const fs::path& out, std::ostream& os, RunLog& log) {
  if (f.datasets.size() != 1) throw ValidationError("train needs exactly one --dataset");
  c.train.dataset = f.datasets.front();
  validate(c, Command::Train);
  const auto data = training::SequenceData::load(c.train.dataset);
  std::optional<nn::ModelState> resume;
  if (!f.resume.empty()) {
    resume.emplace(nn::load_model(f.resume));
    log("resuming from " + f.resume + " at epoch " + std::to_string(resume->epochs_completed));
  }
  log("train start: " + std::to_string(data.count) + " samples");
  const auto result = training::train(c.train, data, resume, [&](const training::EpochRecord& e) {
    const std::string line = "epoch " + std::to_string(e.epoch) + " train " + fmt(e.train_loss) + " validation " +
                             fmt(e.validation_loss);
    os << line << '\n';
    log(line);
  });
  nn::save_model(out / "model.scramble", result.model);
  training::write_history_csv(out / "history.csv", result.history);
  write_json(out / "split.json", split_json(result.split));
  os << "best epoch " << result.best_epoch << ", validation loss " << fmt(result.model.best_validation_loss)
     << (result.stopped_early ? " (stopped early)" : "") << '\n';
  log("train done");
  return 0;
}

json report_json(const training::EvalReport& r) {
  auto region = [&](training::Region g) {
    const double v = r.region_mean(g);
    return std::isnan(v) ? json(nullptr) : json(v);
  };
  return json{{"overall", r.overall},
              {"interpolated", region(training::Region::Interpolated)},
              {"extrapolated", region(training::Region::Extrapolated)},
              {"p_train", r.p_train},
              {"realizations", r.realizations}};
}

int cmd_eval(const RunConfig& c, const Flags& f, const fs::path& out, std::ostream& os, RunLog& log) {
  if (f.model.empty()) throw ValidationError("eval needs --model");
  if (f.datasets.empty()) throw ValidationError("eval needs --dataset");
  if (!f.size_extrapolation && f.datasets.size() != 1) {
    throw ValidationError("several --dataset values need --size-extrapolation");
  }
  const nn::ModelState model = nn::load_model(f.model);
  const int p_train = f.p_train ? *f.p_train : model.trained_depth;
  std::vector<training::SequenceData> sets;
  for (const auto& d : f.datasets) {
    auto data = training::SequenceData::load(d);
    if (!f.split_file.empty() && f.subset != "all") data = data.subset(read_subset(f.split_file, f.subset));
    sets.push_back(std::move(data));
  }
  log("eval start: " + std::to_string(sets.size()) + " dataset(s), p_train=" + std::to_string(p_train));

  auto emit = [&](const fs::path& dir, const training::EvalReport& r) {
    fs::create_directories(dir);
    training::write_depth_csv(dir / "depth_mse.csv", r);
    training::write_observable_csv(dir / "observable_mse.csv", r);
    write_json(dir / "report.json", report_json(r));
  };

  if (f.size_extrapolation) {
    const auto reports = training::evaluate_size_extrapolation(model, sets, p_train, c.threads);
    std::ofstream csv(out / "size_mse.csv", std::ios::trunc);
    csv << std::setprecision(17) << "n_qubits,overall,interpolated,extrapolated\n";
    for (const auto& s : reports) {
      emit(out / ("n" + std::to_string(s.n_qubits)), s.report);
      csv << s.n_qubits << ',' << s.report.overall << ',' << s.report.region_mean(training::Region::Interpolated)
          << ',' << s.report.region_mean(training::Region::Extrapolated) << '\n';
      os << "N=" << s.n_qubits << " overall MSE " << fmt(s.report.overall) << '\n';
    }
    if (!csv) throw IoError("cannot write " + (out / "size_mse.csv").string());
  } else {
    const auto& data = sets.front();
    if (model.labels != data.labels) {
      throw ValidationError("dataset observables do not match the model: " + training::label_diff(model.labels, data.labels));
    }
    const auto r = training::evaluate(model.network, data, p_train, c.threads);
    emit(out, r);
    os << "overall MSE " << fmt(r.overall) << ", interpolated " << fmt(r.region_mean(training::Region::Interpolated))
       << ", extrapolated " << fmt(r.region_mean(training::Region::Extrapolated)) << '\n';
  }
  log("eval done");
  return 0;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", f.out, "Output directory")->required();
  sub->add_option("--seed", f.seed, "Seed for sampling, splitting and initialization");
  sub->add_option("--threads", f.threads, "Worker threads (1 is bit-deterministic)");
}

void add_circuit(CLI::App* sub, Flags& f) {
  sub->add_option("--variant", f.variant, "Circuit variant")->check(CLI::IsMember({"I", "II"}));
  sub->add_flag("--homogeneous", f.homogeneous, "Same angle on every site");
  sub->add_flag("--inhomogeneous", f.inhomogeneous, "Independent angles per site");
  sub->add_option("--n", f.n, "Number of qubits");
  sub->add_option("--depth", f.depth, "Number of modules P");
}

int dispatch(const std::vector<std::string>& args, std::ostream& os, std::ostream& es) {
  CLI::App app{"Random circuit simulation, diagnostics and recurrent-network training"};
  app.require_subcommand(1);
  Flags f;
  auto* gen = app.add_subcommand("gen", "Generate a dataset");
  add_common(gen, f);
  add_circuit(gen, f);
  gen->add_option("--samples", f.samples, "Number of circuit realizations");

  auto* diag = app.add_subcommand("diag", "Regime diagnostics as CSV and SVG");
  add_common(diag, f);
  add_circuit(diag, f);
  diag->add_option("--diag", f.diag, "Diagnostic (repeatable)")
      ->check(CLI::IsMember(kDiagnostics));

  auto* tr = app.add_subcommand("train", "Train a network on a dataset");
  add_common(tr, f);
  tr->add_option("--dataset", f.datasets, "Dataset directory")->required();
  tr->add_option("--resume", f.resume, "Model checkpoint to continue from");
  tr->add_option("--epochs", f.epochs, "Number of epochs");
  tr->add_option("--p-train", f.p_train, "Train on depths 1..p only");

  auto* ev = app.add_subcommand("eval", "Evaluate a model");
  add_common(ev, f);
  ev->add_option("--model", f.model, "Model file")->required();
  ev->add_option("--dataset", f.datasets, "Dataset directory (repeatable with --size-extrapolation)")->required();
  ev->add_option("--p-train", f.p_train, "Depths above p are tagged extrapolated (default: trained depth)");
  ev->add_flag("--size-extrapolation", f.size_extrapolation, "Evaluate one model on several system sizes");
  ev->add_option("--split", f.split_file, "split.json written by train");
  ev->add_option("--subset", f.subset, "Index list from --split")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, os, es);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, os, es);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, os, es);
    return 1;
  }

  const RunConfig c = effective_config(f);
  const fs::path out = f.out;
  fs::create_directories(out);
  json echo = to_json(c);
  const std::string command = gen->parsed() ? "gen" : diag->parsed() ? "diag" : tr->parsed() ? "train" : "eval";
  echo["command"] = command;
  if (!f.datasets.empty()) echo["inputs"]["datasets"] = f.datasets;
  if (!f.model.empty()) echo["inputs"]["model"] = f.model;
  if (!f.resume.empty()) echo["inputs"]["resume"] = f.resume;
  write_json(out / "run_config.json", echo);
  RunLog log(out / "run.log");
  try {
    if (gen->parsed()) return cmd_gen(c, out, os, log);
    if (diag->parsed()) return cmd_diag(c, out, os, log);
    if (tr->parsed()) return cmd_train(c, f, out, os, log);
    return cmd_eval(c, f, out, os, log);
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    throw;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace scramble::cli
