#pragma once

// Run configuration: a sectioned key = value text file.
//
//   [potential]   kind plus the parameters of that kind
//   [grid]        L, N, auto_refine
//   [solver]      SolverOptions fields
//   [run]         command-specific values (speeds, seed, outputs)
//
// Unknown sections or keys are rejected. NLGP_GRID_L and NLGP_GRID_N
// override the grid block when set.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlgp/errors.hpp"
#include "nlgp/potentials.hpp"
#include "nlgp/solver.hpp"

namespace nlgp {

struct RunBlock {
  double c = 1.0;
  double c_min = 0.3;
  double c_max = 1.3;
  std::uint64_t seed = 20240611;
  std::string payload = "csv";  // csv | binary
  std::string output;
  std::size_t sweeps = 200;
  std::size_t nodes = 33;
};

struct RunConfig {
  std::string kind = "delta";
  std::map<std::string, std::string> potential;  // parameters of `kind`
  double L = 128.0;
  std::size_t N = 4096;
  SolverOptions solver;
  RunBlock run;
};

namespace detail {

inline const std::map<std::string, std::vector<std::string>>& potential_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"delta", {}},
      {"exp_repulsive", {"alpha", "beta"}},
      {"shifted_deltas", {"lambda"}},
      {"gaussian", {"lambda"}},
      {"soft_core", {"lambda"}},
      {"bochner_riesz", {"kappa"}},
      {"berloff", {"a", "b", "lambda"}},
      {"measure_combo", {"weights", "shifts"}},
      {"tabulated", {"file"}},
  };
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const auto u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

inline std::string fmt(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

inline std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace detail

inline PotentialSpec make_potential(const std::string& kind, const std::map<std::string, std::string>& p) {
  const auto& keys = detail::potential_keys();
  const auto it = keys.find(kind);
  if (it == keys.end()) throw ConfigError("unknown potential kind '" + kind + "'");
  for (const auto& [k, v] : p)
    if (std::find(it->second.begin(), it->second.end(), k) == it->second.end())
      throw ConfigError("potential kind '" + kind + "' has no parameter '" + k + "'");
  auto num = [&](const std::string& k) {
    const auto f = p.find(k);
    if (f == p.end()) throw ConfigError("potential kind '" + kind + "' needs '" + k + "'");
    return detail::parse_double(k, f->second);
  };
  try {
    if (kind == "delta") return PotentialSpec::delta();
    if (kind == "exp_repulsive") return PotentialSpec::exp_repulsive(num("alpha"), num("beta"));
    if (kind == "shifted_deltas") return PotentialSpec::shifted_deltas(num("lambda"));
    if (kind == "gaussian") return PotentialSpec::gaussian(num("lambda"));
    if (kind == "soft_core") return PotentialSpec::soft_core(num("lambda"));
    if (kind == "bochner_riesz") return PotentialSpec::bochner_riesz(num("kappa"));
    if (kind == "berloff") return PotentialSpec::berloff(num("a"), num("b"), num("lambda"));
    if (kind == "measure_combo") {
      if (!p.count("weights") || !p.count("shifts")) throw ConfigError("measure_combo needs 'weights' and 'shifts'");
      return PotentialSpec::measure_combo(detail::parse_list("weights", p.at("weights")),
                                          detail::parse_list("shifts", p.at("shifts")));
    }
    if (!p.count("file")) throw ConfigError("tabulated needs 'file'");
    return PotentialSpec::tabulated_from_csv(p.at("file"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline PotentialSpec make_potential(const RunConfig& cfg) { return make_potential(cfg.kind, cfg.potential); }

inline std::string symmetry_name(SymmetryMode m) { return to_string(m); }

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "potential" && section != "grid" && section != "solver" && section != "run")
        throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::unquote(detail::trim(line.substr(eq + 1)));
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside a section");
    const std::string where = section + "." + key;

    if (section == "potential") {
      if (key == "kind")
        cfg.kind = val;
      else
        cfg.potential[key] = val;
    } else if (section == "grid") {
      if (key == "L")
        cfg.L = detail::parse_double(where, val);
      else if (key == "N")
        cfg.N = detail::parse_uint(where, val);
      else if (key == "auto_refine")
        cfg.solver.auto_refine = detail::parse_bool(where, val);
      else
        throw ConfigError("unknown key '" + where + "'");
    } else if (section == "solver") {
      auto& s = cfg.solver;
      if (key == "tol_newton") s.tol_newton = detail::parse_double(where, val);
      else if (key == "max_iter") s.max_iter = detail::parse_uint(where, val);
      else if (key == "damping") s.damping = detail::parse_double(where, val);
      else if (key == "max_halvings") s.max_halvings = detail::parse_uint(where, val);
      else if (key == "positivity_floor") s.positivity_floor = detail::parse_double(where, val);
      else if (key == "symmetry") {
        if (val == "even_subspace") s.symmetry = SymmetryMode::EvenSubspace;
        else if (val == "full_grid") s.symmetry = SymmetryMode::FullGrid;
        else throw ConfigError("'" + where + "' expects even_subspace or full_grid");
      }
      else if (key == "dc_init") s.dc_init = detail::parse_double(where, val);
      else if (key == "dc_min") s.dc_min = detail::parse_double(where, val);
      else if (key == "max_refinements") s.max_refinements = detail::parse_uint(where, val);
      else if (key == "tail_tol") s.tail_tol = detail::parse_double(where, val);
      else if (key == "resolution_tol") s.resolution_tol = detail::parse_double(where, val);
      else if (key == "identity_tol") s.identity_tol = detail::parse_double(where, val);
      else if (key == "gmres_restart") s.gmres_restart = detail::parse_uint(where, val);
      else if (key == "gmres_max_iter") s.gmres_max_iter = detail::parse_uint(where, val);
      else throw ConfigError("unknown key '" + where + "'");
    } else {
      auto& r = cfg.run;
      if (key == "c") r.c = detail::parse_double(where, val);
      else if (key == "c_min") r.c_min = detail::parse_double(where, val);
      else if (key == "c_max") r.c_max = detail::parse_double(where, val);
      else if (key == "seed") r.seed = detail::parse_uint(where, val);
      else if (key == "payload") {
        if (val != "csv" && val != "binary") throw ConfigError("'" + where + "' expects csv or binary");
        r.payload = val;
      }
      else if (key == "output") r.output = val;
      else if (key == "sweeps") r.sweeps = detail::parse_uint(where, val);
      else if (key == "nodes") r.nodes = detail::parse_uint(where, val);
      else throw ConfigError("unknown key '" + where + "'");
    }
  }
  // Validate the potential block eagerly, except for tabulated files which
  // are read when the potential is built.
  if (cfg.kind != "tabulated") make_potential(cfg);
  return cfg;
}

// Canonical text form; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const RunConfig& cfg) {
  using detail::fmt;
  std::ostringstream os;
  os << "[potential]\nkind = " << cfg.kind << "\n";
  for (const auto& [k, v] : cfg.potential) os << k << " = " << v << "\n";
  os << "\n[grid]\nL = " << fmt(cfg.L) << "\nN = " << cfg.N << "\nauto_refine = " << detail::fmt_bool(cfg.solver.auto_refine)
     << "\n";
  const auto& s = cfg.solver;
  os << "\n[solver]\n"
     << "tol_newton = " << fmt(s.tol_newton) << "\n"
     << "max_iter = " << s.max_iter << "\n"
     << "damping = " << fmt(s.damping) << "\n"
     << "max_halvings = " << s.max_halvings << "\n"
     << "positivity_floor = " << fmt(s.positivity_floor) << "\n"
     << "symmetry = " << symmetry_name(s.symmetry) << "\n"
     << "dc_init = " << fmt(s.dc_init) << "\n"
     << "dc_min = " << fmt(s.dc_min) << "\n"
     << "max_refinements = " << s.max_refinements << "\n"
     << "tail_tol = " << fmt(s.tail_tol) << "\n"
     << "resolution_tol = " << fmt(s.resolution_tol) << "\n"
     << "identity_tol = " << fmt(s.identity_tol) << "\n"
     << "gmres_restart = " << s.gmres_restart << "\n"
     << "gmres_max_iter = " << s.gmres_max_iter << "\n";
  const auto& r = cfg.run;
  os << "\n[run]\n"
     << "c = " << fmt(r.c) << "\n"
     << "c_min = " << fmt(r.c_min) << "\n"
     << "c_max = " << fmt(r.c_max) << "\n"
     << "seed = " << r.seed << "\n"
     << "payload = " << r.payload << "\n"
     << "output = " << r.output << "\n"
     << "sweeps = " << r.sweeps << "\n"
     << "nodes = " << r.nodes << "\n";
  return os.str();
}

inline void apply_env_overrides(RunConfig& cfg) {
  if (const char* l = std::getenv("NLGP_GRID_L")) cfg.L = detail::parse_double("NLGP_GRID_L", l);
  if (const char* n = std::getenv("NLGP_GRID_N")) cfg.N = detail::parse_uint("NLGP_GRID_N", n);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str());
  apply_env_overrides(cfg);
  return cfg;
}

}  // namespace nlgp
