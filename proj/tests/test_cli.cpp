// SPDX-License-Identifier: Apache-2.0
#include "varcalc/commands.hpp"
#include "varcalc/problem_file.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace varcalc;
using namespace varcalc::cli;

namespace {

std::string problem(const std::string& name) { return std::string(VARCALC_PROBLEMS) + "/" + name; }

Outcome run_cmd(const std::string& command, const std::string& file, void (*tweak)(Options&) = nullptr) {
  Options o;
  o.command = command;
  o.file = file.empty() ? "" : problem(file);
  if (tweak) tweak(o);
  return run(o);
}

std::string error_of(const std::string& text) {
  try {
    parse_problem(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse errors name the line") {
  CHECK(error_of("[vars]\nx = x\n[bogus]\n").find("line 3") != std::string::npos);
  CHECK(error_of("[vars]\nx = x\ny = y\n[lower]\nobjective = (+ y\n").find("line 5") != std::string::npos);
  CHECK(error_of("[vars]\nx = x\n[candidates]\nc = 1 2\n").find("line 4") != std::string::npos);
  CHECK(error_of("x = x\n").find("line 1") != std::string::npos);
  CHECK(error_of("[vars]\nx = x\n[candidates]\nc = 1\nc = 2\n").find("duplicate") != std::string::npos);
}

TEST_CASE("problem files resolve functions, sets and candidates") {
  const auto pf = load_problem(problem("worked.vp"));
  CHECK(pf.x_dim() == 1);
  CHECK(pf.y_dim() == 1);
  CHECK(pf.candidate("off").isApprox(make_vec({1, -1})));
  CHECK(pf.function("lower.objective")(make_vec({3, 2})) == doctest::Approx(2));
  CHECK(pf.function("upper.objective")(make_vec({1, 2})) == doctest::Approx(5));
  CHECK(pf.grid);
  CHECK(pf.params.seed == 7);
  try {
    pf.candidate("nowhere");
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("origin") != std::string::npos);
    CHECK(msg.find("off") != std::string::npos);
  }
  CHECK_THROWS_AS(pf.function("lower.constraint.9"), InputError);

  const auto kinks = load_problem(problem("kinks.vp"));
  CHECK(kinks.functions.count("max_xy") == 1);
  CHECK(kinks.sets.count("diamond") == 1);
  CHECK_THROWS_AS(kinks.set("nothing"), InputError);
}

TEST_CASE("exit codes per command") {
  CHECK(run_cmd("certify", "worked.vp", [](Options& o) { o.at = "origin"; }).report.exit_code == kOk);
  CHECK(run_cmd("certify", "worked.vp", [](Options& o) {
          o.at = "origin";
          o.theorem = "t83";
        }).report.exit_code == kOk);
  CHECK(run_cmd("certify", "worked.vp", [](Options& o) {
          o.at = "off";
          o.override_calmness = true;
        }).report.exit_code == kNoCertificate);
  CHECK(run_cmd("certify", "worked_constrained.vp", [](Options& o) {
          o.at = "origin";
          o.theorem = "t83";
        }).report.exit_code == kHypothesisFailure);
  CHECK(run_cmd("certify", "fritz_john.vp", [](Options& o) { o.theorem = "t61"; }).report.exit_code == kOk);
  CHECK(run_cmd("subdiff", "kinks.vp", [](Options& o) { o.fn = "max_xy"; }).report.exit_code == kOk);
  CHECK(run_cmd("normalcone", "kinks.vp", [](Options& o) { o.fn = "cone"; }).report.exit_code == kOk);
  CHECK(run_cmd("extremal", "half_planes.vp").report.exit_code == kOk);
  CHECK(run_cmd("extremal", "overlap.vp").report.exit_code == kRefusal);
  CHECK(run_cmd("valuefn", "bilinear.vp", [](Options& o) { o.at = "top"; }).report.exit_code == kRefusal);
  CHECK(run_cmd("verify", "", [](Options& o) { o.builtin_corpus = true; }).report.exit_code == kOk);
  CHECK(run_cmd("certify", "missing.vp").report.exit_code == kInputError);
  CHECK(run_cmd("certify", "worked.vp", [](Options& o) { o.at = "nowhere"; }).report.exit_code == kInputError);
}

TEST_CASE("certify reports multipliers in JSON") {
  const auto out = run_cmd("certify", "worked.vp", [](Options& o) { o.at = "origin"; });
  const auto j = Json::parse(out.report.to_json());
  CHECK(j["schema_version"] == 1);
  CHECK(j["command"] == "certify");
  CHECK(j["exit_code"] == 0);
  CHECK(j["input_digest"].get<std::string>().rfind("sha256:", 0) == 0);
  const auto& c = j["result"]["certificate"];
  CHECK(c["nu"][0].get<double>() == doctest::Approx(1));
  CHECK(c["lambda"][0].get<double>() == doctest::Approx(1));
  CHECK(c["u"][0].get<double>() == doctest::Approx(-1));
  CHECK(j["hypotheses"].size() >= 4);
  CHECK(j.contains("result_digest"));
  CHECK(j["timing"].contains("elapsed_ms"));
  CHECK_FALSE(out.text.empty());
}

TEST_CASE("value function CSV") {
  const auto path = std::filesystem::temp_directory_path() / "varcalc_test_theta.csv";
  Options o;
  o.command = "valuefn";
  o.file = problem("worked.vp");
  o.x_range = "-1:1:0.1";
  o.csv = path.string();
  REQUIRE(run(o).report.exit_code == kOk);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x_0,theta");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const double x = std::stod(line.substr(0, comma)), theta = std::stod(line.substr(comma + 1));
    CHECK(theta == doctest::Approx(-x).epsilon(1e-4));
    ++rows;
  }
  CHECK(rows == 21);
  std::filesystem::remove(path);

  Options bad = o;
  bad.file = problem("kinks.vp");
  CHECK(run(bad).report.exit_code == kInputError);
  Options range = o;
  range.x_range = "1:-1:0.1";
  CHECK(run(range).report.exit_code == kInputError);
}

TEST_CASE("reports are deterministic for a fixed seed") {
  for (const char* cmd : {"subdiff", "certify", "extremal"}) {
    CAPTURE(cmd);
    Options o;
    o.command = cmd;
    o.file = problem(std::string(cmd) == "extremal" ? "half_planes.vp" : std::string(cmd) == "subdiff" ? "kinks.vp"
                                                                                                         : "worked.vp");
    if (std::string(cmd) == "subdiff") {
      o.fn = "saddle";
      o.oracle = true;
    }
    o.seed = 7;
    CHECK(run(o).report.stable_json().dump() == run(o).report.stable_json().dump());
  }
}

TEST_CASE("injected faults fail verification and name the rule") {
  Options o;
  o.command = "verify";
  o.builtin_corpus = true;
  o.inject_fault = true;
  const auto out = run(o);
  CHECK(out.report.exit_code == kVerifyFailure);
  const auto j = Json::parse(out.report.to_json());
  REQUIRE(j["result"].contains("failing_rules"));
  CHECK_FALSE(j["result"]["failing_rules"].empty());
}

TEST_CASE("unqualified normal cones are refusals") {
  const auto dir = std::filesystem::temp_directory_path() / "varcalc_test_unqualified.vp";
  {
    std::ofstream f(dir);
    f << "# SPDX-License-Identifier: Apache-2.0\n[vars]\nx = x\n[sets]\npinch = x\npinch = (- x)\n"
         "[candidates]\nzero = 0\n";
  }
  Options o;
  o.command = "normalcone";
  o.file = dir.string();
  o.fn = "pinch";
  const auto out = run(o);
  std::filesystem::remove(dir);
  CHECK(out.report.exit_code == kRefusal);
  const auto j = Json::parse(out.report.to_json());
  CHECK(j["result"].contains("witness"));
}
