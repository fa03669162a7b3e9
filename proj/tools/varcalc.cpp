// SPDX-License-Identifier: Apache-2.0
#include "varcalc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace varcalc::cli;
  Options o;
  CLI::App app{"Variational analysis toolkit: subdifferentials, normal cones, value functions, bilevel certificates"};
  app.add_option("command", o.command, "subdiff | normalcone | valuefn | certify | verify | extremal")
      ->required()
      ->check(CLI::IsMember({"subdiff", "normalcone", "valuefn", "certify", "verify", "extremal"}));
  app.add_option("file", o.file, "Problem file");
  app.add_option("--at", o.at, "Candidate name");
  app.add_option("--fn", o.fn, "Function or set path, e.g. lower.objective");
  app.add_option("--theorem", o.theorem, "t61 | t74 | t83")->check(CLI::IsMember({"t61", "t74", "t83"}));
  auto* kappa = app.add_option("--kappa", o.kappa, "Penalty constant");
  app.add_flag("--kappa-sweep", o.kappa_sweep, "Try the kappa grid in order")->excludes(kappa);
  app.add_flag("--oracle", o.oracle, "Add the sampled cross-check");
  app.add_option("--seed", o.seed, "Sampling seed");
  app.add_flag("--json", o.json, "Print the JSON report");
  app.add_option("--csv", o.csv, "Write value-function samples as CSV");
  app.add_option("--x-range", o.x_range, "LO:HI:STEP over the first x coordinate");
  app.add_flag("--override-isc", o.override_isc, "Proceed when the inner semicontinuity probe fails");
  app.add_flag("--override-calmness", o.override_calmness, "Proceed when the calmness probe fails");
  app.add_flag("--builtin-corpus", o.builtin_corpus, "Verify the built-in function corpus");
  app.add_flag("--inject-fault", o.inject_fault, "Corrupt one subdifferential to test the failure path");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kInputError;
  }
  for (int i = 1; i < argc; ++i) o.echo.emplace_back(argv[i]);

  const auto out = run(o);
  if (o.json) {
    std::cout << out.report.to_json();
  } else {
    std::cout << out.text;
    for (const auto& w : out.report.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& h : out.report.ledger)
      std::cout << "hypothesis [" << h.status << "] " << h.name << ": " << (h.holds ? "holds" : "fails") << "\n";
  }
  return out.report.exit_code;
}
