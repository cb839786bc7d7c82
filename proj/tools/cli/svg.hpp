// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace scramble::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line chart with axes, ticks and a legend.
void write_line_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series);

/// Heatmap of rows (y axis, first row at the bottom) by columns (x axis).
void write_heatmap(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                   const std::string& y_label, const Eigen::MatrixXd& values, int first_col_label = 1);

}  // namespace scramble::cli
