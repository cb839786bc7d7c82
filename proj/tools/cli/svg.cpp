// SPDX-License-Identifier: Apache-2.0
#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "scramble/error.hpp"

namespace scramble::cli {

namespace {

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

void save(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  out << body;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string frame(const std::string& title, const std::string& x_label, const std::string& y_label) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n"
    << "<text x=\"" << kLeft + (kWidth - kLeft - kRight) / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n"
    << "<text transform=\"translate(18," << kTop + (kHeight - kTop - kBottom) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  return o.str();
}

}  // namespace

void write_line_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) {
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << frame(title, x_label, y_label);
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
    o << "<text x=\"" << px(xv) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << fmt(xv)
      << "</text>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kPalette[i % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (std::isfinite(s.y[k])) o << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
    }
    o << "\"/>\n";
    const double ly = kTop + 14 + 16.0 * static_cast<double>(i);
    o << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kWidth - kRight + 28
      << "\" y2=\"" << ly - 4 << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << kWidth - kRight + 32 << "\" y=\"" << ly << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  save(path, o.str());
}

void write_heatmap(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                   const std::string& y_label, const Eigen::MatrixXd& values, int first_col_label) {
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto rows = values.rows(), cols = values.cols();
  const bool empty = values.size() == 0;
  double lo = empty ? 0.0 : values.minCoeff(), hi = empty ? 1.0 : values.maxCoeff();
  if (hi == lo) hi = lo + 1;
  std::ostringstream o;
  o << frame(title, x_label, y_label);
  const double cw = pw / std::max<Eigen::Index>(cols, 1), ch = ph / std::max<Eigen::Index>(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double t = (values(r, c) - lo) / (hi - lo);
      const int red = static_cast<int>(255 * t), blue = static_cast<int>(255 * (1 - t));
      o << "<rect x=\"" << kLeft + c * cw << "\" y=\"" << kTop + ph - (r + 1) * ch << "\" width=\"" << cw + 0.5
        << "\" height=\"" << ch + 0.5 << "\" fill=\"rgb(" << red << ",40," << blue << ")\"/>\n";
    }
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    o << "<text x=\"" << kLeft + (c + 0.5) * cw << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
      << c + first_col_label << "</text>\n";
  }
  const Eigen::Index step = std::max<Eigen::Index>(1, rows / 8);
  for (Eigen::Index r = 0; r < rows; r += step) {
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + ph - (r + 0.5) * ch + 4 << "\" text-anchor=\"end\">" << r
      << "</text>\n";
  }
  o << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 12 << "\">max " << fmt(hi) << "</text>\n"
    << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 28 << "\">min " << fmt(lo) << "</text>\n"
    << "</svg>\n";
  save(path, o.str());
}

}  // namespace scramble::cli
