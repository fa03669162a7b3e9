// SPDX-License-Identifier: Apache-2.0
#include "varcalc/problem_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace varcalc::cli {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

class Reader {
public:
  explicit Reader(int line) : line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("line " + std::to_string(line_) + ": " + msg);
  }

  double number(const std::string& w) const {
    double v = 0.0;
    std::string_view s = w;
    if (!s.empty() && s[0] == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) fail("malformed number '" + w + "'");
    return v;
  }

  std::vector<double> numbers(const std::string& value) const {
    std::vector<double> out;
    for (const auto& w : words(value)) out.push_back(number(w));
    if (out.empty()) fail("expected numbers");
    return out;
  }

  long integer(const std::string& value) const {
    const auto ws = words(value);
    if (ws.size() != 1) fail("expected one integer");
    long v = 0;
    const auto [ptr, ec] = std::from_chars(ws[0].data(), ws[0].data() + ws[0].size(), v);
    if (ec != std::errc() || ptr != ws[0].data() + ws[0].size()) fail("malformed integer '" + ws[0] + "'");
    return v;
  }

  expr::FunctionDef function(const std::string& value, const expr::VarSpace& space) const {
    try {
      return expr::parse_function(value, space);
    } catch (const InputError& e) {
      fail(e.what());
    }
  }

private:
  int line_;
};

struct Entry {
  int line;
  std::string key, value;
};

const std::set<std::string> kSections{"vars", "lower", "upper", "program", "functions", "sets",
                                      "candidates", "grid", "params", "extremal"};

void read_block(Block& b, const std::vector<Entry>& entries, const expr::VarSpace& space, const char* section) {
  for (const auto& e : entries) {
    Reader r(e.line);
    if (e.key == "objective") {
      if (b.objective) r.fail(std::string("duplicate objective in [") + section + "]");
      b.objective = r.function(e.value, space);
    } else if (e.key == "constraint") {
      b.constraints.push_back(r.function(e.value, space));
    } else {
      r.fail("unknown key '" + e.key + "' in [" + section + "] (expected objective or constraint)");
    }
  }
}

std::size_t index_in(const std::string& path, const std::string& prefix, std::size_t count) {
  const std::string n = path.substr(prefix.size());
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), k);
  if (ec != std::errc() || ptr != n.data() + n.size() || k < 1 || k > count)
    throw InputError("'" + path + "' needs a constraint index between 1 and " + std::to_string(count));
  return k - 1;
}

}  // namespace

const Vec& ProblemFile::candidate(const std::string& name) const {
  for (const auto& [n, p] : candidates)
    if (n == name) return p;
  std::string valid;
  for (const auto& [n, p] : candidates) valid += (valid.empty() ? "" : ", ") + n;
  throw InputError("unknown candidate '" + name + "'; valid candidates: " + (valid.empty() ? "(none)" : valid));
}

const expr::FunctionDef& ProblemFile::function(const std::string& path) const {
  auto from_block = [&](const Block& b, const std::string& section) -> const expr::FunctionDef* {
    if (path == section + ".objective") {
      if (!b.objective) throw InputError("[" + section + "] has no objective");
      return &*b.objective;
    }
    const std::string pre = section + ".constraint.";
    if (path.rfind(pre, 0) == 0) return &b.constraints[index_in(path, pre, b.constraints.size())];
    return nullptr;
  };
  if (auto f = from_block(lower, "lower")) return *f;
  if (auto f = from_block(upper, "upper")) return *f;
  if (auto f = from_block(program, "program")) return *f;
  const std::string name = path.rfind("functions.", 0) == 0 ? path.substr(10) : path;
  if (auto it = functions.find(name); it != functions.end()) return it->second;
  std::string valid;
  for (const auto& [n, f] : functions) valid += ", " + n;
  throw InputError("unknown function '" + path +
                   "'; use lower.objective, lower.constraint.N, upper.objective, upper.constraint.N, "
                   "program.objective, program.constraint.N" +
                   valid);
}

sets::SetSpec ProblemFile::set(const std::string& path) const {
  if (path == "lower") {
    if (lower.constraints.empty()) throw InputError("[lower] has no constraints");
    if (y_dim() == 0) return sets::SetSpec::sublevel(lower.constraints);
    return sets::SetSpec::graph(x_dim(), lower.constraints);
  }
  if (path == "upper") {
    if (upper.constraints.empty()) throw InputError("[upper] has no constraints");
    return sets::SetSpec::sublevel(upper.constraints);
  }
  if (path == "program") {
    if (program.constraints.empty()) throw InputError("[program] has no constraints");
    return sets::SetSpec::sublevel(program.constraints);
  }
  const std::string name = path.rfind("sets.", 0) == 0 ? path.substr(5) : path;
  if (auto it = sets.find(name); it != sets.end()) return it->second;
  std::string valid;
  for (const auto& [n, s] : sets) valid += ", " + n;
  throw InputError("unknown set '" + path + "'; use lower, upper, program" + valid);
}

ProblemFile parse_problem(const std::string& text) {
  ProblemFile pf;
  pf.source = text;
  std::map<std::string, std::vector<Entry>> sections;
  std::string current;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    Reader r(line_no);
    const std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') r.fail("unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!kSections.count(current)) r.fail("unknown section [" + current + "]");
      if (sections.count(current)) r.fail("duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    if (current.empty()) r.fail("entry outside any section");
    const auto eq = line.find('=');
    if (eq == std::string::npos) r.fail("expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) r.fail("missing key");
    if (value.empty()) r.fail("missing value for '" + key + "'");
    sections[current].push_back({line_no, key, value});
  }

  if (!sections.count("vars")) throw InputError("missing [vars] section");
  for (const auto& e : sections["vars"]) {
    Reader r(e.line);
    if (e.key == "x") pf.x_names = words(e.value);
    else if (e.key == "y") pf.y_names = words(e.value);
    else r.fail("unknown key '" + e.key + "' in [vars] (expected x or y)");
  }
  if (pf.x_names.empty()) throw InputError("[vars] must declare at least one x variable");
  pf.x_space = expr::VarSpace(pf.x_names);
  pf.joint = pf.y_names.empty() ? pf.x_space : pf.x_space.concat(expr::VarSpace(pf.y_names));
  const auto dim = static_cast<Eigen::Index>(pf.joint.dim());

  read_block(pf.lower, sections["lower"], pf.joint, "lower");
  {
    // The upper objective lives on (x, y); constraints on x alone.
    std::vector<Entry> obj, cons;
    for (const auto& e : sections["upper"]) (e.key == "objective" ? obj : cons).push_back(e);
    read_block(pf.upper, obj, pf.joint, "upper");
    read_block(pf.upper, cons, pf.x_space, "upper");
  }
  read_block(pf.program, sections["program"], pf.joint, "program");

  for (const auto& e : sections["functions"]) {
    Reader r(e.line);
    if (pf.functions.count(e.key)) r.fail("duplicate function '" + e.key + "'");
    pf.functions.emplace(e.key, r.function(e.value, pf.joint));
  }
  {
    std::map<std::string, std::pair<std::vector<expr::FunctionDef>, std::vector<expr::FunctionDef>>> acc;
    for (const auto& e : sections["sets"]) {
      Reader r(e.line);
      const bool equality = e.key.size() > 3 && e.key.ends_with(".eq");
      const std::string name = equality ? e.key.substr(0, e.key.size() - 3) : e.key;
      auto& [ineq, eqs] = acc[name];
      (equality ? eqs : ineq).push_back(r.function(e.value, pf.joint));
    }
    for (auto& [name, fs] : acc) pf.sets.emplace(name, sets::SetSpec::sublevel(fs.first, fs.second));
  }

  for (const auto& e : sections["candidates"]) {
    Reader r(e.line);
    const auto xs = r.numbers(e.value);
    if (static_cast<Eigen::Index>(xs.size()) != dim)
      r.fail("candidate '" + e.key + "' has " + std::to_string(xs.size()) + " coordinates, expected " +
             std::to_string(dim));
    for (const auto& [n, p] : pf.candidates)
      if (n == e.key) r.fail("duplicate candidate '" + e.key + "'");
    pf.candidates.emplace_back(e.key, from_std(xs));
  }

  if (sections.count("grid")) {
    valuefn::GridSpec g;
    for (const auto& e : sections["grid"]) {
      Reader r(e.line);
      if (e.key == "box") {
        const auto b = r.numbers(e.value);
        if (b.size() != 2) r.fail("box needs 'lower upper'");
        g.y_box.emplace_back(b[0], b[1]);
      } else if (e.key == "resolution") {
        g.resolution = static_cast<int>(r.integer(e.value));
      } else if (e.key == "stencil_radius") {
        g.x_stencil_radius = r.numbers(e.value).at(0);
      } else if (e.key == "stencil_count") {
        g.x_stencil_count = static_cast<int>(r.integer(e.value));
      } else {
        r.fail("unknown key '" + e.key + "' in [grid]");
      }
    }
    g.validate(pf.y_dim());
    pf.grid = g;
  }

  for (const auto& e : sections["params"]) {
    Reader r(e.line);
    if (e.key == "seed") {
      const long s = r.integer(e.value);
      if (s < 0) r.fail("seed must be nonnegative");
      pf.params.seed = static_cast<std::uint64_t>(s);
    } else if (e.key == "radii") {
      pf.params.radii = r.numbers(e.value);
    } else if (e.key == "dirs") {
      pf.params.dirs_per_radius = static_cast<int>(r.integer(e.value));
    } else if (e.key == "eps") {
      pf.params.eps_sequence = r.numbers(e.value);
    } else if (e.key == "kappa_grid") {
      pf.kappa_grid = r.numbers(e.value);
    } else {
      r.fail("unknown key '" + e.key + "' in [params]");
    }
  }
  pf.params.validate();
  if (!pf.params.eps_sequence.empty() && pf.params.eps_sequence.size() != pf.params.radii.size())
    throw InputError("[params] eps needs one value per radius");

  if (sections.count("extremal")) {
    ExtremalSpec x;
    for (const auto& e : sections["extremal"]) {
      Reader r(e.line);
      if (e.key == "sets") {
        x.sets = words(e.value);
      } else if (e.key == "shift") {
        const auto v = r.numbers(e.value);
        if (static_cast<Eigen::Index>(v.size()) != dim) r.fail("shift dimension does not match the variables");
        x.shifts.push_back(from_std(v));
      } else if (e.key == "schedule") {
        for (double k : r.numbers(e.value)) {
          if (k < 1 || k != std::floor(k)) r.fail("schedule entries must be positive integers");
          x.schedule.push_back(static_cast<int>(k));
        }
      } else {
        r.fail("unknown key '" + e.key + "' in [extremal]");
      }
    }
    for (const auto& s : x.sets)
      if (!pf.sets.count(s)) throw InputError("[extremal] names unknown set '" + s + "'");
    if (x.sets.size() != x.shifts.size()) throw InputError("[extremal] needs one shift per set");
    pf.extremal = std::move(x);
  }
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open problem file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

}  // namespace varcalc::cli
