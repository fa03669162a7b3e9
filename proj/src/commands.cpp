// SPDX-License-Identifier: Apache-2.0
#include "varcalc/commands.hpp"

#include "varcalc/bilevel.hpp"
#include "varcalc/calculus.hpp"
#include "varcalc/corpus.hpp"
#include "varcalc/extremal.hpp"
#include "varcalc/normal_cone.hpp"
#include "varcalc/oracle.hpp"
#include "varcalc/problem_file.hpp"
#include "varcalc/subdiff.hpp"
#include "varcalc/valuefn.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace varcalc::cli {
namespace {

constexpr double kOracleTolerance = 0.05;
constexpr double kResidualTolerance = 1e-6;
constexpr double kFaultShift = 0.5;

struct Run {
  const Options& opts;
  Report& rep;
  std::ostringstream text;

  void line(const std::string& key, const std::string& value) { text << key << ": " << value << "\n"; }
  void ledger(std::string name, std::string status, bool holds, std::string detail) {
    rep.ledger.push_back({std::move(name), std::move(status), holds, std::move(detail)});
  }
};

ProblemFile load(Run& run) {
  if (run.opts.file.empty()) throw InputError("a problem file is required");
  auto pf = load_problem(run.opts.file);
  run.rep.input_digest = sha256_hex(pf.source);
  if (run.opts.seed) pf.params.seed = *run.opts.seed;
  return pf;
}

std::string candidate_name(const ProblemFile& pf, const Options& opts) {
  if (!opts.at.empty()) return opts.at;
  if (pf.candidates.size() == 1) return pf.candidates.front().first;
  std::string names;
  for (const auto& [n, _] : pf.candidates) names += (names.empty() ? "" : ", ") + n;
  throw InputError("--at is required; candidates: " + (names.empty() ? std::string("none") : names));
}

/// Candidates are joint points; functions and sets over x take the head.
Vec point_for(const ProblemFile& pf, const Vec& cand, int dim) {
  if (cand.size() == dim) return cand;
  if (dim == pf.x_dim()) return cand.head(dim);
  throw InputError("candidate has " + std::to_string(cand.size()) + " coordinates, expected " + std::to_string(dim));
}

std::string default_function(const ProblemFile& pf, const Options& opts) {
  if (!opts.fn.empty()) return opts.fn;
  if (pf.functions.size() == 1) return pf.functions.begin()->first;
  if (pf.lower.objective) return "lower.objective";
  throw InputError("--fn is required");
}

Json doubles(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(x == 0.0 ? 0.0 : x);
  return a;
}

Json points(const std::vector<Vec>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) a.push_back(to_json(v));
  return a;
}

Json cones_json(const std::vector<geom::ConeSpec>& cones) {
  Json a = Json::array();
  for (const auto& c : cones) a.push_back(to_json(c));
  return a;
}

std::string describe(const geom::PolyhedronUnion& u) {
  if (u.empty()) return "empty";
  std::string s;
  for (const auto& p : u) {
    if (!s.empty()) s += " U ";
    s += geom::describe(p.points);
    if (!p.cone.is_zero()) s += " + " + geom::describe(p.cone);
  }
  return s;
}

// ---------------------------------------------------------------------------
// subdiff

void cmd_subdiff(Run& run) {
  const auto pf = load(run);
  const auto path = default_function(pf, run.opts);
  const auto& f = pf.function(path);
  const auto cname = candidate_name(pf, run.opts);
  const Vec x = point_for(pf, pf.candidate(cname), static_cast<int>(f.dim()));
  const auto res = subdiff::compute(f, x, pf.params);

  Json r;
  r["function"] = path;
  r["expression"] = f.to_string();
  r["candidate"] = cname;
  r["point"] = to_json(x);
  r["regular"] = res.regular ? to_json(*res.regular) : Json(nullptr);
  r["basic"] = to_json(res.basic);
  r["singular"] = to_json(res.singular);
  r["method"] = res.method;
  r["convex"] = expr::is_syntactically_convex(f);
  r["patterns"] = res.census.size();
  run.line("function", path + " = " + f.to_string());
  run.line("point", cname + " " + format_vec(x));
  run.line("regular", res.regular ? geom::describe(*res.regular) : "empty");
  run.line("basic", geom::describe(res.basic));
  run.line("singular", geom::describe(res.singular));
  run.ledger("local Lipschitz continuity", "verified", true, "piecewise-polynomial expression");

  if (run.opts.oracle) {
    const auto o = oracle::sampled_subdiff(f, x, pf.params);
    const double h = geom::hausdorff_distance(res.basic, o.hull);
    r["oracle"] = {{"hull", to_json(o.hull)},
                   {"candidates", o.candidates},
                   {"accepted", o.accepted},
                   {"hausdorff", h},
                   {"tolerance", kOracleTolerance},
                   {"agrees", h <= kOracleTolerance}};
    run.line("oracle", geom::describe(o.hull));
    run.line("hausdorff", format_number(h));
    if (h > kOracleTolerance) run.rep.warnings.push_back("oracle hull differs by " + format_number(h));
  }
  run.rep.result = r;
}

// ---------------------------------------------------------------------------
// normalcone

void cmd_normalcone(Run& run) {
  const auto pf = load(run);
  const auto path = run.opts.fn.empty() ? std::string("lower") : run.opts.fn;
  const auto set = pf.set(path);
  const auto cname = candidate_name(pf, run.opts);
  const Vec z = point_for(pf, pf.candidate(cname), set.dim());
  const auto nc = normal::normal_cone(set, z, pf.params);

  Json r;
  r["set"] = path;
  r["description"] = set.describe();
  r["candidate"] = cname;
  r["point"] = to_json(z);
  r["active"] = nc.active;
  r["qualified"] = nc.qualified;
  r["combinations"] = nc.combinations;
  run.line("set", path + ": " + set.describe());
  run.line("point", cname + " " + format_vec(z));
  run.ledger("constraint qualification", "verified", nc.qualified,
             nc.qualified ? "no nonzero normal combination vanishes" : nc.diagnostic);
  if (!nc.qualified) {
    r["witness"] = doubles(nc.witness);
    r["diagnostic"] = nc.diagnostic;
    run.line("refused", nc.diagnostic);
    run.rep.result = r;
    run.rep.exit_code = kRefusal;
    return;
  }
  r["cones"] = cones_json(nc.cones);
  run.line("normal cone", normal::describe(nc.cones));

  if (set.kind() == sets::SetKind::Graph) {
    const auto ll = normal::lipschitz_like_check(set, z, pf.params);
    r["lipschitz_like"] = ll.lipschitz_like;
    r["coderivative_at_zero"] = cones_json(ll.at_zero);
    run.line("coderivative at 0", normal::describe(ll.at_zero));
    run.line("lipschitz-like", ll.lipschitz_like ? "yes" : "no");
  }

  if (run.opts.oracle) {
    const auto o = oracle::sampled_normal_cone(set, z, pf.params);
    const double angle = oracle::max_angle_to_union(o.directions, nc.cones);
    const double gap = oracle::coverage_gap(nc.cones, o.directions);
    Json oj = {{"directions", points(o.directions)},
               {"samples", o.samples},
               {"max_angle", angle},
               {"coverage_gap", gap}};
    run.line("oracle max angle", format_number(angle));
    run.line("oracle coverage gap", format_number(gap));
    if (set.kind() == sets::SetKind::Graph) {
      const auto s = oracle::sampled_lipschitz_like(set, z, pf.params);
      oj["lipschitz_like"] = s.bounded;
      oj["worst_ratio"] = s.worst_ratio;
      run.line("oracle lipschitz-like", s.bounded ? "yes" : "no");
    }
    r["oracle"] = oj;
  }
  run.rep.result = r;
}

// ---------------------------------------------------------------------------
// valuefn

std::vector<double> parse_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size()) throw InputError("bad --x-range value '" + item + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw InputError("--x-range expects LO:HI:STEP");
  const double lo = parts[0], hi = parts[1], step = parts[2];
  if (!(step > 0) || hi < lo) throw InputError("--x-range needs LO <= HI and STEP > 0");
  const double count = std::floor((hi - lo) / step + 1e-9) + 1;
  if (count > 1e5) throw InputError("--x-range has too many points");
  std::vector<double> xs;
  for (int i = 0; i < static_cast<int>(count); ++i) xs.push_back(lo + i * step);
  return xs;
}

std::string csv_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  if (x == 0.0) x = 0.0;
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

valuefn::ParametricProblem lower_of(const ProblemFile& pf) {
  if (!pf.lower.objective) throw InputError("the [lower] section needs an objective");
  if (pf.y_dim() == 0) throw InputError("the [vars] section declares no y variables");
  valuefn::ParametricProblem p{*pf.lower.objective, pf.lower.constraints, pf.x_dim()};
  p.validate();
  return p;
}

void cmd_valuefn(Run& run) {
  const auto pf = load(run);
  if (!pf.grid) throw InputError("the valuefn command needs a [grid] section");
  const auto prob = lower_of(pf);
  const auto& grid = *pf.grid;

  std::vector<Vec> xs;
  if (!run.opts.x_range.empty()) {
    if (pf.x_dim() != 1) throw InputError("--x-range needs a single x variable");
    for (double v : parse_range(run.opts.x_range)) xs.push_back(make_vec({v}));
  } else {
    for (const auto& [_, c] : pf.candidates) xs.push_back(c.head(pf.x_dim()));
    if (xs.empty()) throw InputError("no --x-range and no candidates");
  }

  Json samples = Json::array();
  std::ostringstream csv;
  for (int i = 0; i < pf.x_dim(); ++i) csv << "x_" << i << ",";
  csv << "theta\n";
  std::size_t feasible = 0;
  for (const auto& x : xs) {
    Json s = {{"x", to_json(x)}};
    double theta = std::numeric_limits<double>::infinity();
    try {
      const auto v = valuefn::evaluate_value(prob, x, grid);
      theta = v.theta;
      s["status"] = "ok";
      s["theta"] = v.theta;
      s["argmins"] = points(v.argmins);
      s["final_step"] = v.final_step;
      ++feasible;
    } catch (const valuefn::InfeasibleError& e) {
      if (!e.certified_empty()) throw;
      s["status"] = "empty";
      s["theta"] = nullptr;
      s["margin"] = e.margin();
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) csv << csv_number(x[i]) << ",";
    csv << csv_number(theta) << "\n";
    run.text << "theta" << format_vec(x) << " = " << (std::isinf(theta) ? "inf" : format_number(theta)) << "\n";
    samples.push_back(s);
  }
  Json r = {{"samples", samples}, {"feasible", feasible}, {"resolution", grid.resolution}};
  if (!run.opts.csv.empty()) {
    std::ofstream out(run.opts.csv, std::ios::binary);
    if (!out) throw InputError("cannot write " + run.opts.csv);
    out << csv.str();
    r["csv"] = run.opts.csv;
  }

  if (!run.opts.at.empty()) {
    const Vec cand = pf.candidate(run.opts.at);
    if (cand.size() != pf.x_dim() + pf.y_dim()) throw InputError("candidate must give x and y");
    const Vec xbar = cand.head(pf.x_dim()), ybar = cand.tail(pf.y_dim());
    const auto isc = valuefn::inner_semicontinuity_probe(prob, xbar, ybar, grid, pf.params);
    Json by_radius = Json::array();
    for (const auto& [rad, d] : isc.by_radius) by_radius.push_back({rad, d});
    r["isc"] = {{"passes", isc.passes},
                {"worst_distance", isc.worst_distance},
                {"threshold", isc.threshold},
                {"worst_x", to_json(isc.worst_x)},
                {"by_radius", by_radius},
                {"outside_domain", isc.outside_domain}};
    run.line("inner semicontinuity", std::string(isc.passes ? "passes" : "fails") + ", worst argmin distance " +
                                         format_number(isc.worst_distance));
    const bool overridden = !isc.passes && run.opts.override_isc;
    run.ledger("inner semicontinuity of the solution map", overridden ? "overridden" : "probed", isc.passes,
               "worst argmin distance " + format_number(isc.worst_distance) + " against threshold " +
                   format_number(isc.threshold));
    if (!isc.passes && !overridden) {
      r["diagnostic"] = "solution map fails the inner semicontinuity probe; pass --override-isc to estimate anyway";
      run.line("refused", r["diagnostic"].get<std::string>());
      run.rep.exit_code = kRefusal;
    } else {
      const auto est = valuefn::value_subdiff_estimate(prob, xbar, ybar, grid, pf.params, run.opts.override_isc);
      const auto lv = valuefn::lipschitz_verdict(prob, xbar, ybar, grid, pf.params, run.opts.override_isc);
      r["estimate"] = {{"basic", to_json(est.basic)}, {"singular", to_json(est.singular)}};
      r["lipschitz"] = {{"verdict", lv.lipschitz}, {"at_zero", cones_json(lv.at_zero)}, {"modulus", lv.modulus}};
      run.line("basic estimate", describe(est.basic));
      run.line("singular estimate", describe(est.singular));
      run.line("lipschitz", std::string(lv.lipschitz ? "yes" : "no") + ", sampled modulus " +
                                format_number(lv.modulus));
      run.ledger("lipschitz-like solution map", "verified", lv.lipschitz, "coderivative at zero");
    }
  }
  run.rep.result = r;
}

// ---------------------------------------------------------------------------
// certify

Json certificate_json(const bilevel::Certificate& c) {
  Json res = Json::object();
  for (const auto& [name, v] : c.residuals) res[name] = v;
  return {{"theorem", bilevel::to_string(c.theorem)},
          {"lambda0", c.lambda0},
          {"lambda", doubles(c.lambda)},
          {"mu", doubles(c.mu)},
          {"nu", doubles(c.nu)},
          {"u", to_json(c.u)},
          {"kappa", c.kappa},
          {"branches", c.branches},
          {"branch_labels", c.branch_labels},
          {"residuals", res},
          {"max_residual", c.max_residual()}};
}

std::string numbers(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += (s.empty() ? "" : " ") + format_number(x);
  return "[" + s + "]";
}

void certify_kkt(Run& run, const ProblemFile& pf, const Vec& cand) {
  bilevel::LipschitzProgram prog;
  if (pf.program.objective) {
    prog = {*pf.program.objective, pf.program.constraints};
  } else {
    if (!pf.upper.objective) throw InputError("t61 needs a [program] or an upper objective");
    prog.objective = *pf.upper.objective;
    for (const auto& g : pf.upper.constraints) prog.constraints.push_back(g.embed(pf.joint));
    for (const auto& f : pf.lower.constraints) prog.constraints.push_back(f);
  }
  const Vec x = point_for(pf, cand, static_cast<int>(prog.objective.dim()));
  const auto k = bilevel::check_lipschitz_kkt(prog, x, pf.params);
  Json r = {{"theorem", "t61"},
            {"point", to_json(x)},
            {"mfcq_holds", k.mfcq_holds},
            {"combinations", k.combinations}};
  std::string witness = "no positive dependence among active subgradients";
  if (k.mfcq_witness) {
    r["mfcq_witness"] = {{"weights", doubles(k.mfcq_witness->weights)},
                         {"subgradients", points(k.mfcq_witness->subgradients)}};
    witness = "active subgradients combine to zero with weights " + numbers(k.mfcq_witness->weights);
  }
  run.ledger("generalized MFCQ", "verified", k.mfcq_holds, witness);
  run.ledger("local minimality of the candidate", "n/a", true, "conditions are necessary; minimality is not checked");
  if (k.certificate) {
    r["verdict"] = "certified";
    r["certificate"] = certificate_json(*k.certificate);
    run.line("verdict", "certified");
    run.line("lambda0", format_number(k.certificate->lambda0));
    run.line("lambda", numbers(k.certificate->lambda));
  } else {
    r["verdict"] = "no_certificate";
    r["margin"] = k.margin;
    run.line("verdict", "no certificate, infeasibility margin " + format_number(k.margin));
    run.rep.exit_code = kNoCertificate;
  }
  run.line("mfcq", k.mfcq_holds ? "holds" : "violated");
  run.rep.result = r;
}

void cmd_certify(Run& run) {
  const auto pf = load(run);
  const auto cname = candidate_name(pf, run.opts);
  const Vec cand = pf.candidate(cname);
  const auto& th = run.opts.theorem;
  if (th != "t61" && th != "t74" && th != "t83") throw InputError("--theorem must be t61, t74 or t83");
  run.line("candidate", cname + " " + format_vec(cand));
  if (th == "t61") return certify_kkt(run, pf, cand);

  if (!pf.lower.objective || !pf.upper.objective) throw InputError("certify needs lower and upper objectives");
  if (!pf.grid) throw InputError("certify needs a [grid] section");
  if (cand.size() != pf.x_dim() + pf.y_dim()) throw InputError("candidate must give x and y");
  bilevel::BilevelProblem bp{*pf.lower.objective, pf.lower.constraints, *pf.upper.objective,
                             pf.upper.constraints, pf.x_dim()};
  bp.validate();
  bilevel::CertifyOptions co;
  co.kappa = run.opts.kappa;
  co.kappa_sweep = run.opts.kappa_sweep;
  if (!pf.kappa_grid.empty()) co.kappa_grid = pf.kappa_grid;
  co.override_isc = run.opts.override_isc;
  co.override_calmness = run.opts.override_calmness;
  co.grid = *pf.grid;
  co.params = pf.params;
  const Vec xbar = cand.head(pf.x_dim()), ybar = cand.tail(pf.y_dim());
  const auto rep = th == "t74" ? bilevel::certify_convexified(bp, xbar, ybar, co)
                               : bilevel::certify_regular(bp, xbar, ybar, co);

  for (const auto& h : rep.hypotheses)
    run.ledger(h.name, h.overridden ? "overridden" : (h.sampled ? "probed" : "verified"), h.holds, h.detail);
  if (th == "t83") run.ledger("upper-level regularity", "n/a", true, "no upper-level constraints");
  else run.ledger("nonempty regular subdifferential of the value function", "n/a", true, "not required");

  Json r = {{"theorem", th},
            {"verdict", bilevel::to_string(rep.verdict)},
            {"kappa", rep.kappa},
            {"combinations", rep.combinations},
            {"value_set", to_json(rep.value_set)},
            {"caveat", rep.caveat}};
  if (rep.certificate) r["certificate"] = certificate_json(*rep.certificate);
  if (rep.verdict == bilevel::Verdict::NoCertificate) r["margin"] = rep.margin;
  if (!rep.diagnostic.empty()) r["diagnostic"] = rep.diagnostic;
  if (rep.calmness) {
    const auto& c = *rep.calmness;
    Json viol = Json::array();
    for (const auto& v : c.violations)
      viol.push_back({{"point", to_json(v.point)}, {"nu", v.nu}, {"margin", v.margin}});
    r["calmness"] = {{"kappa_validated", c.kappa_validated ? Json(*c.kappa_validated) : Json(nullptr)},
                     {"samples", c.samples},
                     {"feasible_samples", c.feasible_samples},
                     {"violations", viol}};
  }

  run.line("verdict", bilevel::to_string(rep.verdict));
  run.line("kappa", format_number(rep.kappa));
  if (rep.certificate) {
    run.line("nu", numbers(rep.certificate->nu));
    run.line("lambda", numbers(rep.certificate->lambda));
    run.line("mu", numbers(rep.certificate->mu));
    run.line("u", format_vec(rep.certificate->u));
  }
  if (!rep.diagnostic.empty()) run.line("diagnostic", rep.diagnostic);
  run.line("note", rep.caveat);
  switch (rep.verdict) {
    case bilevel::Verdict::Certified: run.rep.exit_code = kOk; break;
    case bilevel::Verdict::NoCertificate: run.rep.exit_code = kNoCertificate; break;
    case bilevel::Verdict::HypothesisFailure: run.rep.exit_code = kHypothesisFailure; break;
  }
  run.rep.result = r;
}

// ---------------------------------------------------------------------------
// verify

struct Checks {
  Json list = Json::array();
  std::size_t failed = 0;
  std::vector<std::string> failing_rules;

  void add(const std::string& rule, const std::string& subject, bool passed, double figure) {
    list.push_back({{"rule", rule}, {"subject", subject}, {"passed", passed}, {"figure", figure}});
    if (passed) return;
    ++failed;
    if (std::find(failing_rules.begin(), failing_rules.end(), rule) == failing_rules.end())
      failing_rules.push_back(rule);
  }
};

geom::PolytopeUnion shifted(const geom::PolytopeUnion& u, double by) {
  std::vector<geom::Polytope> parts;
  for (const auto& p : u.parts()) parts.push_back(geom::translated(p, Vec::Constant(u.dim(), by)));
  return geom::PolytopeUnion(u.dim(), parts);
}

double max_residual(const calculus::SumRuleReport& s) {
  return std::max(s.inclusion.residual, s.singular_inclusion.residual);
}

void verify_entries(Checks& ch, const std::vector<corpus::Entry>& entries, const SampleParams& params,
                    bool inject_fault) {
  std::vector<geom::PolytopeUnion> basics;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    auto res = subdiff::compute(e.fn, e.point, params);
    if (inject_fault && i == 0) res.basic = shifted(res.basic, kFaultShift);
    const auto o = oracle::sampled_subdiff(e.fn, e.point, params);
    const double h = geom::hausdorff_distance(res.basic, o.hull);
    ch.add("oracle agreement", e.name, h <= kOracleTolerance, h);

    if (e.convex) {
      bool same = res.regular && res.basic.parts().size() == 1 && res.regular->approx_equal(res.basic.parts()[0]);
      ch.add("convexity reduction", e.name, same, same ? 0.0 : 1.0);
    }
    if (res.regular) {
      const auto hull = geom::convex_hull(res.basic.all_vertices());
      double worst = 0.0;
      for (const auto& v : res.regular->vertices()) worst = std::max(worst, geom::distance(v, hull));
      ch.add("regular inside basic", e.name, worst <= kResidualTolerance, worst);
    }
    const auto ep = calculus::epigraph_consistency_check(e.fn, e.point, params);
    ch.add("epigraph consistency", e.name, ep.consistent(), std::max(ep.discrepancy, ep.singular_discrepancy));
    basics.push_back(res.basic);
  }
  for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
    const auto& a = entries[i];
    const auto& b = entries[i + 1];
    if (a.fn.space() != b.fn.space() || (a.point - b.point).norm() != 0.0) continue;
    const auto subject = a.name + "+" + b.name;
    const auto s = calculus::verify_sum_rule({a.fn, b.fn}, a.point, params);
    const double res = max_residual(s);
    ch.add("sum rule", subject, s.holds() && res <= kResidualTolerance, res);
    const auto d = calculus::verify_difference_rule(a.fn, b.fn, a.point);
    ch.add("difference rule", a.name + "-" + b.name, d.holds(), d.inclusion.residual);
  }
}

void verify_builtin_extras(Checks& ch) {
  const expr::VarSpace x({"x"}), xy({"x", "y"});
  const auto P = [](const char* t, const expr::VarSpace& s) { return expr::parse_function(t, s); };

  const auto pair = calculus::verify_intersection_rule(
      {sets::SetSpec::sublevel({P("x", x)}), sets::SetSpec::sublevel({P("(- x)", x)})}, make_vec({0}));
  const bool witness_ok = pair.witness.size() == 2 && std::abs(pair.witness[0] - 1) <= 1e-9 &&
                          std::abs(pair.witness[1] - 1) <= 1e-9;
  ch.add("intersection refusal", "opposite half-lines", !pair.qualified && witness_ok, witness_ok ? 0.0 : 1.0);

  const auto disks = calculus::verify_intersection_rule(
      {sets::SetSpec::sublevel({P("(+ (abs x) (abs y) -1)", xy)}), sets::SetSpec::sublevel({P("(- y x)", xy)})},
      make_vec({0.5, 0.5}));
  ch.add("intersection rule", "diamond and half-plane", disks.holds(), disks.inclusion.residual);

  const auto planes = extremal::extremal_principle_solve(
      {sets::SetSpec::sublevel({P("y", xy)}), sets::SetSpec::sublevel({P("(- y)", xy)})}, make_vec({0, 0}),
      extremal::harmonic_shifts({make_vec({0, 1}), make_vec({0, 0})}));
  double norm_err = 0.0, last_euler = 1.0;
  for (const auto& s : planes.steps) {
    norm_err = std::max(norm_err, std::abs(s.normalization - 1.0));
    if (s.k == 1000) last_euler = s.euler_residual;
  }
  ch.add("extremal residual", "half-plane pair", !planes.gamma_zero && last_euler <= 1e-3, last_euler);
  ch.add("extremal normalization", "half-plane pair", !planes.gamma_zero && norm_err <= 1e-9, norm_err);

  const auto whole = sets::SetSpec::sublevel({expr::FunctionDef(xy, expr::constant(-1))});
  const auto control = extremal::extremal_principle_solve(
      {whole, whole}, make_vec({0, 0}), extremal::harmonic_shifts({make_vec({1, 0}), make_vec({0, 1})}));
  ch.add("extremal control", "whole space", control.gamma_zero, control.gamma_zero ? 0.0 : 1.0);
}

std::vector<corpus::Entry> entries_from(const ProblemFile& pf) {
  std::vector<corpus::Entry> out;
  for (const auto& [name, fn] : pf.functions)
    for (const auto& [cname, c] : pf.candidates) {
      if (c.size() != static_cast<Eigen::Index>(fn.dim()) &&
          static_cast<int>(fn.dim()) != pf.x_dim())
        continue;
      out.push_back({name + "@" + cname, fn, point_for(pf, c, static_cast<int>(fn.dim())),
                     expr::is_syntactically_convex(fn)});
    }
  return out;
}

void cmd_verify(Run& run) {
  Checks ch;
  std::size_t n_entries = 0;
  if (run.opts.builtin_corpus) {
    SampleParams params;
    if (run.opts.seed) params.seed = *run.opts.seed;
    const auto entries = corpus::builtin();
    n_entries = entries.size();
    verify_entries(ch, entries, params, run.opts.inject_fault);
    verify_builtin_extras(ch);
  } else {
    const auto pf = load(run);
    const auto entries = entries_from(pf);
    if (entries.empty()) throw InputError("no [functions] entry matches a candidate");
    n_entries = entries.size();
    verify_entries(ch, entries, pf.params, run.opts.inject_fault);
  }
  run.rep.result = {{"entries", n_entries},
                    {"checks", ch.list},
                    {"total", ch.list.size()},
                    {"failed", ch.failed},
                    {"failing_rules", ch.failing_rules}};
  run.ledger("local Lipschitz continuity", "verified", true, "piecewise-polynomial expressions");
  run.line("entries", std::to_string(n_entries));
  run.line("checks", std::to_string(ch.list.size()) + ", failed " + std::to_string(ch.failed));
  for (const auto& c : ch.list)
    if (!c["passed"].get<bool>())
      run.line("FAIL " + c["rule"].get<std::string>(),
               c["subject"].get<std::string>() + " (figure " + format_number(c["figure"].get<double>()) + ")");
  if (ch.failed) run.rep.exit_code = kVerifyFailure;
}

// ---------------------------------------------------------------------------
// extremal

void cmd_extremal(Run& run) {
  const auto pf = load(run);
  if (!pf.extremal) throw InputError("the extremal command needs an [extremal] section");
  const auto& spec = *pf.extremal;
  const auto cname = candidate_name(pf, run.opts);
  std::vector<sets::SetSpec> sets;
  for (const auto& name : spec.sets) sets.push_back(pf.set(name));
  const Vec xbar = point_for(pf, pf.candidate(cname), sets.front().dim());
  const auto trace = extremal::extremal_principle_solve(
      sets, xbar, extremal::harmonic_shifts(spec.shifts),
      spec.schedule.empty() ? extremal::default_schedule() : spec.schedule);

  Json steps = Json::array();
  double norm_err = 0.0;
  for (const auto& s : trace.steps) {
    norm_err = std::max(norm_err, std::abs(s.normalization - 1.0));
    steps.push_back({{"k", s.k},
                     {"x", to_json(s.x)},
                     {"gamma", s.gamma},
                     {"nearest", points(s.nearest)},
                     {"normals", points(s.normals)},
                     {"normalization", s.normalization},
                     {"euler_residual", s.euler_residual},
                     {"fermat_residual", s.fermat_residual},
                     {"objective", s.objective}});
    run.text << "k=" << s.k << " gamma=" << format_number(s.gamma)
             << " euler=" << format_number(s.euler_residual) << "\n";
  }
  Json r = {{"sets", spec.sets}, {"point", to_json(xbar)}, {"steps", steps}, {"gamma_zero", trace.gamma_zero}};
  run.ledger("shifted sets separate", "verified", !trace.gamma_zero,
             trace.gamma_zero ? trace.diagnostic : "gamma positive at every iterate");
  if (trace.gamma_zero) {
    r["gamma_zero_at"] = trace.gamma_zero_at;
    r["diagnostic"] = trace.diagnostic;
    run.line("refused", trace.diagnostic);
    run.rep.exit_code = kRefusal;
  } else {
    r["normalization_error"] = norm_err;
  }
  run.rep.result = r;
}

}  // namespace

Outcome run(const Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  out.report.command = opts.command;
  out.report.args = opts.echo;
  Run r{opts, out.report, {}};
  try {
    if (opts.command == "subdiff") cmd_subdiff(r);
    else if (opts.command == "normalcone") cmd_normalcone(r);
    else if (opts.command == "valuefn") cmd_valuefn(r);
    else if (opts.command == "certify") cmd_certify(r);
    else if (opts.command == "verify") cmd_verify(r);
    else if (opts.command == "extremal") cmd_extremal(r);
    else throw InputError("unknown command '" + opts.command + "'");
  } catch (const RefusalError& e) {
    out.report.exit_code = kRefusal;
    out.report.result["error"] = {{"kind", "refusal"}, {"message", e.what()}};
    r.line("refused", e.what());
  } catch (const std::length_error& e) {
    out.report.exit_code = kRefusal;
    out.report.result["error"] = {{"kind", "refusal"}, {"message", e.what()}};
    r.line("refused", e.what());
  } catch (const std::exception& e) {
    out.report.exit_code = kInputError;
    out.report.result = {{"error", {{"kind", "input"}, {"message", e.what()}}}};
    r.line("error", e.what());
  }
  out.report.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  out.text = r.text.str();
  return out;
}

}  // namespace varcalc::cli
