// SPDX-License-Identifier: Apache-2.0
#include "varcalc/sampling.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace varcalc {

void SampleParams::validate() const {
  if (radii.empty()) throw InputError("sample radii must not be empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0)) throw InputError("sample radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw InputError("sample radii must be strictly decreasing");
  }
  if (!eps_sequence.empty() && eps_sequence.size() != radii.size())
    throw InputError("eps sequence length must match radii");
  if (dirs_per_radius < 2) throw InputError("need at least two directions per radius");
}

namespace sampling {

std::vector<Vec> directions(int dim, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  if (dim == 1) {
    out.push_back(make_vec({1.0}));
    out.push_back(make_vec({-1.0}));
    return out;
  }
  if (dim == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = 2.0 * std::numbers::pi * i / count;
      out.push_back(make_vec({std::cos(a), std::sin(a)}));
    }
    return out;
  }
  for (int i = 0; i < dim; ++i)
    for (double s : {1.0, -1.0}) {
      Vec v = Vec::Zero(dim);
      v[i] = s;
      out.push_back(v);
    }
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      for (double si : {1.0, -1.0})
        for (double sj : {1.0, -1.0}) {
          Vec v = Vec::Zero(dim);
          v[i] = si;
          v[j] = sj;
          out.push_back(v.normalized());
        }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  while (static_cast<int>(out.size()) < count) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    if (v.norm() > 1e-6) out.push_back(v.normalized());
  }
  return out;
}

}  // namespace sampling
}  // namespace varcalc
