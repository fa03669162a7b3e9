// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "varcalc/expr.hpp"

#include <string>
#include <vector>

namespace varcalc::corpus {

struct Entry {
  std::string name;
  expr::FunctionDef fn;
  Vec point;
  /// Convex by construction; regular and basic subdifferentials agree.
  bool convex = false;
};

/// Twenty functions of one or two variables, each at a kink or a point of
/// interest.
std::vector<Entry> builtin();

}  // namespace varcalc::corpus
