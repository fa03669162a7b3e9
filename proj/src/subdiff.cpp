// SPDX-License-Identifier: Apache-2.0
#include "varcalc/subdiff.hpp"

#include "varcalc/plform.hpp"

#include <algorithm>
#include <map>

namespace varcalc::subdiff {

std::optional<geom::Polytope> regular_subdifferential(const expr::FunctionDef& f, const Vec& x) {
  const auto pattern = expr::active_pattern(f, x);
  return plform::regular_set(plform::directional_form(f, x, plform::reachable(f, pattern)));
}

namespace {

bool selections_within(const expr::ActivePattern& near, const expr::ActivePattern& base) {
  for (const auto& [id, sel] : near) {
    auto it = base.find(id);
    if (it == base.end()) return false;
    for (int s : sel)
      if (std::find(it->second.begin(), it->second.end(), s) == it->second.end()) return false;
  }
  return true;
}

}  // namespace

geom::PolytopeUnion basic_subdifferential(const expr::FunctionDef& f, const Vec& x, const SampleParams& params,
                                          std::vector<PatternRecord>* census) {
  params.validate();
  const int dim = static_cast<int>(f.dim());
  const auto base = expr::active_pattern(f, x);

  std::map<expr::ActivePattern, PatternRecord> seen;
  auto note = [&](const expr::ActivePattern& raw, double radius) {
    auto p = plform::reachable(f, raw);
    auto [it, fresh] = seen.try_emplace(p);
    auto& rec = it->second;
    if (fresh) {
      rec.pattern = p;
      rec.smallest_radius = radius;
    }
    ++rec.hits;
    rec.smallest_radius = std::min(rec.smallest_radius, radius);
  };
  note(base, 0.0);
  const auto dirs = sampling::directions(dim, params.dirs_per_radius, params.seed);
  for (double r : params.radii)
    for (const auto& d : dirs) note(expr::active_pattern(f, x + r * d), r);

  std::vector<geom::Polytope> parts;
  for (auto& [key, rec] : seen) {
    rec.consistent = selections_within(key, base);
    if (!rec.consistent) continue;
    rec.contribution = plform::regular_set(plform::directional_form(f, x, key));
    if (rec.contribution) parts.push_back(*rec.contribution);
  }
  if (census) {
    census->clear();
    for (auto& [key, rec] : seen) census->push_back(std::move(rec));
  }
  return geom::PolytopeUnion(dim, std::move(parts)).canonical();
}

geom::ConeSpec singular_subdifferential(const expr::FunctionDef& f, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != f.dim()) throw InputError("point dimension does not match function");
  return geom::ConeSpec::zero(static_cast<int>(f.dim()));
}

SubdiffResult compute(const expr::FunctionDef& f, const Vec& x, const SampleParams& params) {
  SubdiffResult r;
  r.regular = regular_subdifferential(f, x);
  r.basic = basic_subdifferential(f, x, params, &r.census);
  r.singular = singular_subdifferential(f, x);
  return r;
}

std::string describe(const expr::ActivePattern& pattern) {
  std::string s = "{";
  bool first = true;
  for (const auto& [id, sel] : pattern) {
    if (!first) s += ", ";
    first = false;
    s += "node " + std::to_string(id) + ": [";
    for (std::size_t i = 0; i < sel.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(sel[i]);
    }
    s += "]";
  }
  return s + "}";
}

}  // namespace varcalc::subdiff
