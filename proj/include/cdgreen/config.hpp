// Flat key=value study configuration. '#' starts a comment, blank lines are
// skipped, unknown keys are rejected so typos fail fast.
#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cdgreen/errors.hpp"
#include "cdgreen/problem.hpp"
#include "cdgreen/quadrature.hpp"

namespace cdgreen {

struct KeyValues {
  std::map<std::string, std::string> kv;

  static KeyValues parse_stream(std::istream& is) {
    KeyValues out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        const size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return std::string();
        const size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      if (out.kv.count(key))
        throw ConfigError("config: duplicate key '" + key + "'");
      out.kv[key] = val;
    }
    return out;
  }

  static KeyValues parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    return parse_stream(is);
  }
  static KeyValues parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse_stream(is);
  }

  bool has(const std::string& k) const { return kv.count(k) > 0; }
  std::string get(const std::string& k, const std::string& dflt) const {
    const auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  }
  double get_double(const std::string& k, double dflt) const {
    const auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("config: key '" + k + "' is not a number: " + it->second);
    }
  }
  int get_int(const std::string& k, int dflt) const {
    const double v = get_double(k, dflt);
    if (v != std::floor(v)) throw ConfigError("config: key '" + k + "' is not an integer");
    return static_cast<int>(v);
  }
  std::vector<double> get_list(const std::string& k) const {
    std::vector<double> out;
    const auto it = kv.find(k);
    if (it == kv.end()) return out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stod(tok));
      } catch (...) {
        throw ConfigError("config: bad number '" + tok + "' in key '" + k + "'");
      }
    }
    return out;
  }
};

// Coefficient override syntax: "const:V" or "cospi:c0,c1" (c0 + c1 cos(pi x1)).
inline CoefficientField parse_coefficient(const std::string& name, const std::string& text) {
  const size_t colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("coefficient '" + name + "': expected form kind:params, got " + text);
  const std::string kind = text.substr(0, colon);
  KeyValues dummy;
  dummy.kv["v"] = text.substr(colon + 1);
  if (kind == "const") {
    const std::vector<double> v = dummy.get_list("v");
    if (v.size() != 1) throw ConfigError("coefficient '" + name + "': const needs one value");
    return constant_coefficient(name + "=" + text, v[0]);
  }
  if (kind == "cospi") {
    const std::vector<double> v = dummy.get_list("v");
    if (v.size() != 2) throw ConfigError("coefficient '" + name + "': cospi needs c0,c1");
    const double c0 = v[0], c1 = v[1];
    CoefficientField c;
    c.name = name + "=" + text;
    c.value = [c0, c1](const Vec3& p) { return c0 + c1 * std::cos(M_PI * p.x); };
    c.d1 = [c1](const Vec3& p) { return -c1 * M_PI * std::sin(M_PI * p.x); };
    c.d2 = c.d3 = [](const Vec3&) { return 0.0; };
    return c;
  }
  throw ConfigError("coefficient '" + name + "': unknown kind '" + kind + "'");
}

struct StudyConfig {
  std::string preset = "const";
  std::vector<double> eps_list;  // empty = per-study default
  Vec3 x{0.5, 0.5, 0.5};
  std::vector<double> rho_list;  // multiples are handled by the studies
  FieldVariant variant = FieldVariant::BarCube;
  double tol = 1e-3;
  int mesh_n = 64;
  std::string out_dir = ".";
  double lower_eps_max = 1e-2;
  int threads = 1;
  std::string a_spec, b_spec;  // optional inline coefficient overrides
  double alpha_override = 0.0;

  static FieldVariant parse_variant(const std::string& s) {
    if (s == "bare_g") return FieldVariant::BareKernel;
    if (s == "bar_slab") return FieldVariant::BarSlab;
    if (s == "tilde_slab") return FieldVariant::TildeSlab;
    if (s == "bar_cube") return FieldVariant::BarCube;
    if (s == "tilde_cube") return FieldVariant::TildeCube;
    throw ConfigError("unknown variant '" + s + "'");
  }

  static StudyConfig from(const KeyValues& kv) {
    static const std::set<std::string> known = {
        "preset", "eps_list", "x",       "rho_list",      "variant", "tol",
        "mesh_n", "out_dir",  "threads", "lower_eps_max", "a",       "b",
        "alpha"};
    for (const auto& [k, v] : kv.kv)
      if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");
    StudyConfig c;
    c.preset = kv.get("preset", c.preset);
    c.eps_list = kv.get_list("eps_list");
    for (double e : c.eps_list)
      if (!(e > 0) || e > 1.0) throw ConfigError("config: eps_list entries must be in (0,1]");
    const std::vector<double> xv = kv.get_list("x");
    if (!xv.empty()) {
      if (xv.size() != 3) throw ConfigError("config: x needs three comma-separated ordinates");
      c.x = {xv[0], xv[1], xv[2]};
      for (int a = 0; a < 3; ++a)
        if (c.x[a] <= 0.0 || c.x[a] >= 1.0)
          throw ConfigError("config: x must lie strictly inside the unit cube");
    }
    c.rho_list = kv.get_list("rho_list");
    c.variant = parse_variant(kv.get("variant", "bar_cube"));
    c.tol = kv.get_double("tol", c.tol);
    if (!(c.tol > 0) || c.tol >= 1) throw ConfigError("config: tol must be in (0,1)");
    c.mesh_n = kv.get_int("mesh_n", c.mesh_n);
    c.out_dir = kv.get("out_dir", c.out_dir);
    c.lower_eps_max = kv.get_double("lower_eps_max", c.lower_eps_max);
    c.threads = kv.get_int("threads", c.threads);
    if (c.threads < 1 || c.threads > 256) throw ConfigError("config: threads must be in [1,256]");
    c.a_spec = kv.get("a", "");
    c.b_spec = kv.get("b", "");
    c.alpha_override = kv.get_double("alpha", 0.0);
    return c;
  }

  ProblemSpec problem(double eps) const {
    ProblemSpec s = make_preset(preset, eps);
    if (!a_spec.empty()) s.a = parse_coefficient("a", a_spec);
    if (!b_spec.empty()) s.b = parse_coefficient("b", b_spec);
    if (alpha_override > 0.0) s.alpha = alpha_override;
    return s;
  }
};

}  // namespace cdgreen
