// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "varcalc/common.hpp"

#include <cstdint>
#include <vector>

namespace varcalc {

/// Radii, directions and relaxations used by the limiting-definition oracles
/// and by the local probes of the value-function and bilevel modules.
struct SampleParams {
  std::vector<double> radii{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  int dirs_per_radius = 256;
  /// Empty means radii / 10.
  std::vector<double> eps_sequence;
  std::uint64_t seed = 0;

  double eps_at(std::size_t k) const { return eps_sequence.empty() ? radii.at(k) / 10.0 : eps_sequence.at(k); }
  /// Throws InputError unless radii are positive and strictly decreasing.
  void validate() const;
};

namespace sampling {

/// Deterministic unit directions. Dimension 1 gives {+1, -1}; dimension 2
/// gives `count` equally spaced angles from 0; higher dimensions give signed
/// axes, pairwise diagonals, then seeded random directions.
std::vector<Vec> directions(int dim, int count, std::uint64_t seed);

}  // namespace sampling
}  // namespace varcalc
