// SPDX-License-Identifier: Apache-2.0
//
// Machine-readable reports. JSON keys are emitted in sorted order and
// numbers in shortest round-trip form, so equal inputs give equal bytes.
#pragma once

#include "varcalc/geometry.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace varcalc::cli {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kOk = 0,
  kVerifyFailure = 1,
  kInputError = 2,
  kRefusal = 3,
  kNoCertificate = 4,
  kHypothesisFailure = 5,
};

/// One entry of the hypothesis ledger.
struct LedgerEntry {
  std::string name;
  /// verified, probed, overridden, or n/a.
  std::string status;
  bool holds = true;
  std::string detail;
};

struct Report {
  std::string command;
  std::vector<std::string> args;
  /// SHA-256 of the problem file, empty when there is none.
  std::string input_digest;
  Json result = Json::object();
  std::vector<LedgerEntry> ledger;
  std::vector<std::string> warnings;
  int exit_code = kOk;
  double elapsed_ms = 0.0;

  /// Everything except timing.
  Json stable_json() const;
  /// Stable part plus timing and a digest of the stable part.
  std::string to_json() const;
};

std::string sha256_hex(const std::string& data);

Json to_json(const Vec& v);
Json to_json(const geom::Polytope& p);
Json to_json(const geom::PolytopeUnion& u);
Json to_json(const geom::ConeSpec& c);
Json to_json(const geom::Polyhedron& p);
Json to_json(const geom::PolyhedronUnion& u);

}  // namespace varcalc::cli
