// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "varcalc/report.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace varcalc::cli {

struct Options {
  std::string command;
  std::string file;
  std::string at;
  std::string fn;
  /// t61, t74 or t83.
  std::string theorem = "t74";
  std::optional<double> kappa;
  bool kappa_sweep = false;
  bool oracle = false;
  std::optional<std::uint64_t> seed;
  bool json = false;
  std::string csv;
  /// LO:HI:STEP over the first x coordinate.
  std::string x_range;
  bool override_isc = false;
  bool override_calmness = false;
  bool builtin_corpus = false;
  /// Corrupts one symbolic subdifferential to exercise the failure path.
  bool inject_fault = false;
  std::vector<std::string> echo;
};

struct Outcome {
  Report report;
  /// Human-readable rendering.
  std::string text;
};

/// Never throws; errors become exit codes with a diagnostic.
Outcome run(const Options& opts);

}  // namespace varcalc::cli
