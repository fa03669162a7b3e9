// SPDX-License-Identifier: Apache-2.0
#include "varcalc/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <stdexcept>

namespace varcalc::cli {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v[i]) && v[i] == 0.0 ? 0.0 : v[i]);
  return a;
}

Json to_json(const geom::Polytope& p) {
  Json a = Json::array();
  for (const auto& v : p.vertices()) a.push_back(to_json(v));
  return a;
}

Json to_json(const geom::PolytopeUnion& u) {
  Json a = Json::array();
  for (const auto& p : u.parts()) a.push_back(to_json(p));
  return a;
}

Json to_json(const geom::ConeSpec& c) {
  Json g = Json::array(), l = Json::array();
  for (const auto& v : c.generators()) g.push_back(to_json(v));
  for (const auto& v : c.lineality()) l.push_back(to_json(v));
  return {{"generators", g}, {"lineality", l}};
}

Json to_json(const geom::Polyhedron& p) { return {{"points", to_json(p.points)}, {"cone", to_json(p.cone)}}; }

Json to_json(const geom::PolyhedronUnion& u) {
  Json a = Json::array();
  for (const auto& p : u) a.push_back(to_json(p));
  return a;
}

Json Report::stable_json() const {
  Json ledger_json = Json::array();
  for (const auto& e : ledger)
    ledger_json.push_back({{"name", e.name}, {"status", e.status}, {"holds", e.holds}, {"detail", e.detail}});
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"args", args},
          {"input_digest", input_digest.empty() ? Json(nullptr) : Json("sha256:" + input_digest)},
          {"result", result},
          {"hypotheses", ledger_json},
          {"warnings", warnings},
          {"exit_code", exit_code}};
}

std::string Report::to_json() const {
  Json j = stable_json();
  j["result_digest"] = "sha256:" + sha256_hex(j.dump());
  j["timing"] = {{"elapsed_ms", elapsed_ms}};
  return j.dump(2) + "\n";
}

}  // namespace varcalc::cli
