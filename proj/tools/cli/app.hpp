// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scramble::cli {

/// Runs one command line. Returns the process exit code: 0 success,
/// 1 validation error, 2 runtime or capacity error, 3 I/O error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scramble::cli
