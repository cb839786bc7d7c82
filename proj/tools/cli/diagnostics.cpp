// SPDX-License-Identifier: Apache-2.0
#include "diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "scramble/error.hpp"
#include "scramble/parallel.hpp"
#include "svg.hpp"

namespace scramble::cli {

namespace {

struct Realization {
  Eigen::VectorXd mz, sv, sb;
  Eigen::MatrixXd corr;
  obs::OtocField otoc;
};

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void close_csv(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("cannot write " + path.string());
}

std::vector<double> depths(int depth) {
  std::vector<double> x(static_cast<std::size_t>(depth) + 1);
  for (int p = 0; p <= depth; ++p) x[static_cast<std::size_t>(p)] = p;
  return x;
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

bool DiagResult::has(const std::string& name) const {
  return std::find(selection.begin(), selection.end(), name) != selection.end();
}

sim::CircuitSpec diag_spec(const RunConfig& c, int r) {
  sim::CircuitSpec spec = data::sample_spec(c.dataset, r);
  if (c.diag.use_fixed_theta) std::fill(spec.angles.begin(), spec.angles.end(), c.diag.fixed_theta);
  return spec;
}

DiagResult run_diagnostics(const RunConfig& c) {
  validate(c, Command::Diag);
  const int n = c.dataset.n_qubits, depth = c.dataset.depth, reps = c.diag.realizations;
  DiagResult res;
  res.n_qubits = n;
  res.depth = depth;
  res.realizations = reps;
  res.selection = c.diag.selection;
  res.pt_reference = obs::pt_entropy(n);
  res.pt_mean = obs::porter_thomas_mean_entropy(n);
  res.partition_length = n / 2;
  res.correlator_site = c.diag.correlator_site;
  res.max_offset = res.has("correlators") ? c.diag.effective_max_offset(n) : 0;
  res.has_otoc = res.has("otoc");
  if (res.has_otoc && n > c.limits.max_dense_qubits) {
    throw CapacityError("OTOC needs a dense unitary; " + std::to_string(n) + " qubits exceeds the limit of " +
                        std::to_string(c.limits.max_dense_qubits));
  }

  const bool want_mz = res.has("magnetization"), want_s = res.has("entropies"), want_c = res.has("correlators");
  const int site0 = c.diag.correlator_site - 1;
  std::vector<Realization> runs(static_cast<std::size_t>(reps));
  parallel_for(reps, c.threads, [&](std::int64_t r) {
    const sim::CircuitSpec spec = diag_spec(c, static_cast<int>(r));
    Realization& out = runs[static_cast<std::size_t>(r)];
    out.mz = Eigen::VectorXd::Zero(depth + 1);
    out.sv = Eigen::VectorXd::Zero(depth + 1);
    out.sb = Eigen::VectorXd::Zero(depth + 1);
    out.corr = Eigen::MatrixXd::Zero(depth + 1, 9 * res.max_offset);
    if (want_mz || want_s || want_c) {
      sim::run_circuit(
          spec,
          [&](int p, const sim::StateVector& s) {
            if (want_mz) out.mz(p) = obs::magnetization(s);
            if (want_s) {
              out.sv(p) = obs::von_neumann_half(s);
              out.sb(p) = obs::basis_entropy(s);
            }
            for (int l = 1; l <= res.max_offset; ++l) {
              for (int g = 0; g < 3; ++g) {
                for (int b = 0; b < 3; ++b) {
                  out.corr(p, (l - 1) * 9 + 3 * g + b) =
                      obs::connected_correlator(s, obs::kAxes[g], obs::kAxes[b], site0, l);
                }
              }
            }
          },
          c.limits);
    }
    if (res.has_otoc) out.otoc = obs::otoc(spec, c.diag.otoc_axis, c.diag.effective_source(n) - 1, c.limits);
  });

  // Averaged in realization order so the result does not depend on the thread count.
  res.magnetization = Eigen::VectorXd::Zero(depth + 1);
  res.magnetization_std = Eigen::VectorXd::Zero(depth + 1);
  res.von_neumann = Eigen::VectorXd::Zero(depth + 1);
  res.basis_entropy = Eigen::VectorXd::Zero(depth + 1);
  res.correlators = Eigen::MatrixXd::Zero(depth + 1, 9 * res.max_offset);
  for (const auto& run : runs) {
    res.magnetization += run.mz;
    res.von_neumann += run.sv;
    res.basis_entropy += run.sb;
    res.correlators += run.corr;
  }
  const double inv = 1.0 / reps;
  res.magnetization *= inv;
  res.von_neumann *= inv;
  res.basis_entropy *= inv;
  res.correlators *= inv;
  if (reps > 1) {
    for (const auto& run : runs) res.magnetization_std += (run.mz - res.magnetization).array().square().matrix();
    res.magnetization_std = (res.magnetization_std / (reps - 1)).cwiseSqrt();
  }
  if (res.has_otoc) {
    std::vector<obs::OtocField> fields;
    fields.reserve(runs.size());
    for (auto& run : runs) fields.push_back(std::move(run.otoc));
    res.otoc = obs::average(fields);
  }
  return res;
}

std::vector<std::filesystem::path> write_diagnostics(const DiagResult& r, const std::filesystem::path& dir,
                                                     bool svg) {
  std::vector<std::filesystem::path> written;
  const auto x = depths(r.depth);
  const std::string suffix = " (N=" + std::to_string(r.n_qubits) + ", " + std::to_string(r.realizations) +
                             " realizations)";

  if (r.has("magnetization")) {
    const auto path = dir / "magnetization.csv";
    auto out = open_csv(path);
    out << "p,magnetization,std\n";
    for (int p = 0; p <= r.depth; ++p) out << p << ',' << r.magnetization(p) << ',' << r.magnetization_std(p) << '\n';
    close_csv(out, path);
    written.push_back(path);
    if (svg) {
      write_line_chart(dir / "magnetization.svg", "Magnetization" + suffix, "p", "M_z",
                       {{"M_z", x, as_vector(r.magnetization)}});
      written.push_back(dir / "magnetization.svg");
    }
  }

  if (r.has("entropies")) {
    const auto path = dir / "entropies.csv";
    auto out = open_csv(path);
    out << "p,von_neumann,basis_entropy,pt_reference,pt_mean,volume_coefficient\n";
    const double volume = r.partition_length * std::log(2.0);
    for (int p = 0; p <= r.depth; ++p) {
      out << p << ',' << r.von_neumann(p) << ',' << r.basis_entropy(p) << ',' << r.pt_reference << ','
          << r.pt_mean << ',' << (volume > 0 ? r.von_neumann(p) / volume : 0.0) << '\n';
    }
    close_csv(out, path);
    written.push_back(path);
    if (svg) {
      write_line_chart(dir / "entropies.svg", "Entropies" + suffix, "p", "nats",
                       {{"S_v", x, as_vector(r.von_neumann)},
                        {"S", x, as_vector(r.basis_entropy)},
                        {"PT", x, std::vector<double>(x.size(), r.pt_reference)}});
      written.push_back(dir / "entropies.svg");
    }
  }

  if (r.has("correlators")) {
    const auto path = dir / "correlators.csv";
    auto out = open_csv(path);
    out << "p,site,offset,gamma,beta,value\n";
    for (int p = 0; p <= r.depth; ++p) {
      for (int l = 1; l <= r.max_offset; ++l) {
        for (int g = 0; g < 3; ++g) {
          for (int b = 0; b < 3; ++b) {
            out << p << ',' << r.correlator_site << ',' << l << ',' << sim::axis_char(obs::kAxes[g]) << ','
                << sim::axis_char(obs::kAxes[b]) << ',' << r.correlators(p, (l - 1) * 9 + 3 * g + b) << '\n';
          }
        }
      }
    }
    close_csv(out, path);
    written.push_back(path);
    if (svg) {
      std::vector<Series> series;
      for (int l = 1; l <= r.max_offset; ++l) {
        const Eigen::VectorXd col = r.correlators.col((l - 1) * 9 + 8);
        series.push_back({"C_zz l=" + std::to_string(l), x, as_vector(col)});
      }
      write_line_chart(dir / "correlators.svg", "Connected zz correlators" + suffix, "p", "C", series);
      written.push_back(dir / "correlators.svg");
    }
  }

  if (r.has_otoc) {
    const auto path = dir / "otoc.csv";
    auto out = open_csv(path);
    out << "p,site,value,raw\n";
    for (int p = 0; p <= r.depth; ++p) {
      for (int j = 0; j < r.n_qubits; ++j) {
        out << p << ',' << j + 1 << ',' << r.otoc.values(p, j) << ',' << r.otoc.raw_values(p, j) << '\n';
      }
    }
    close_csv(out, path);
    written.push_back(path);
    if (svg) {
      write_heatmap(dir / "otoc.svg", "OTOC, source site " + std::to_string(r.otoc.source_site + 1) + suffix,
                    "site", "p", r.otoc.values);
      written.push_back(dir / "otoc.svg");
    }
  }
  return written;
}

}  // namespace scramble::cli
