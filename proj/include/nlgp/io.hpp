#pragma once

// File formats.
//
// Solution file: one JSON header line, a line "---", then the payload. The
// CSV payload has columns x,rho,theta,eta written at 17 significant digits;
// the binary payload holds rho, theta and eta as consecutive little-endian
// IEEE doubles (3N values). All writes go to a temporary file that is then
// renamed over the target.

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nlgp/analysis.hpp"
#include "nlgp/config.hpp"
#include "nlgp/errors.hpp"
#include "nlgp/functionals.hpp"
#include "nlgp/potentials.hpp"
#include "nlgp/solver.hpp"

namespace nlgp {

using Json = nlohmann::ordered_json;

inline void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fmt17(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

inline Json to_json(const PotentialSpec& spec) {
  Json j;
  j["kind"] = spec.name();
  std::visit(detail::overloaded{
                 [](const kind::Delta&) {},
                 [&](const kind::ExpRepulsive& k) {
                   j["alpha"] = k.alpha;
                   j["beta"] = k.beta;
                 },
                 [&](const kind::ShiftedDeltas& k) { j["lambda"] = k.lambda; },
                 [&](const kind::Gaussian& k) { j["lambda"] = k.lambda; },
                 [&](const kind::SoftCore& k) { j["lambda"] = k.lambda; },
                 [&](const kind::BochnerRiesz& k) { j["kappa"] = k.kappa; },
                 [&](const kind::Berloff& k) {
                   j["a"] = k.a;
                   j["b"] = k.b;
                   j["lambda"] = k.lambda;
                 },
                 [&](const kind::MeasureCombo& k) {
                   j["weights"] = k.weights;
                   j["shifts"] = k.shifts;
                 },
                 [&](const kind::Tabulated& k) {
                   j["xi"] = *k.xi;
                   j["values"] = *k.values;
                 },
             },
             spec.variant());
  return j;
}

inline PotentialSpec spec_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "delta") return PotentialSpec::delta();
    if (kind == "exp_repulsive") return PotentialSpec::exp_repulsive(j.at("alpha"), j.at("beta"));
    if (kind == "shifted_deltas") return PotentialSpec::shifted_deltas(j.at("lambda"));
    if (kind == "gaussian") return PotentialSpec::gaussian(j.at("lambda"));
    if (kind == "soft_core") return PotentialSpec::soft_core(j.at("lambda"));
    if (kind == "bochner_riesz") return PotentialSpec::bochner_riesz(j.at("kappa"));
    if (kind == "berloff") return PotentialSpec::berloff(j.at("a"), j.at("b"), j.at("lambda"));
    if (kind == "measure_combo")
      return PotentialSpec::measure_combo(j.at("weights").get<std::vector<double>>(), j.at("shifts").get<std::vector<double>>());
    if (kind == "tabulated")
      return PotentialSpec::tabulated(j.at("xi").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
    throw ConfigError("unknown potential kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad potential record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline Json to_json(const IdentityReport& r) {
  Json arr = Json::array();
  for (const auto& e : r.entries)
    arr.push_back({{"name", e.name}, {"lhs_norm", e.lhs_norm}, {"rhs_norm", e.rhs_norm}, {"residual_rel", e.residual_rel}, {"pass", e.pass}});
  return arr;
}

inline Json to_json(const ResidualNorms& r) { return {{"sup", r.sup}, {"l2", r.l2}}; }

inline Json to_json(const MountainPassBracket& b) {
  return {{"c", b.c},
          {"lower", b.lower},
          {"upper", b.upper},
          {"straight_upper", b.straight_upper},
          {"path_nodes", b.path.size()},
          {"phi_params", {{"delta", b.phi.delta}, {"r", b.phi.r}}},
          {"phi_J", b.phi.J},
          {"sphere", {{"r", b.sphere.r}, {"ell", b.sphere.ell}, {"samples", b.sphere.samples}, {"violations", b.sphere.violations}}}};
}

inline Json to_json(const DecayFit& f) {
  return {{"model", to_string(f.model)}, {"value", f.rate_or_power}, {"r2", f.r_squared}, {"window", {f.x_lo, f.x_hi}},
          {"points", f.points}, {"oscillatory", f.oscillatory}, {"frequency", f.frequency},
          {"tail_discrepancy", f.tail_discrepancy}};
}

inline Json to_json(const DecayPrediction& p) {
  Json j = {{"model", to_string(p.model)}, {"value", p.value}, {"exclusive", p.exclusive}, {"lower_bound_only", p.lower_bound_only}};
  if (p.zero) j["zero"] = {p.zero->real(), p.zero->imag()};
  return j;
}

inline Json solution_header(const SolitonSolution& s, const std::string& payload, const Json& analysis = {}) {
  Json j;
  j["format"] = "nlgp-solution";
  j["version"] = 1;
  j["spec"] = to_json(s.spec);
  j["c"] = s.c();
  j["L"] = s.grid().half_length();
  j["N"] = s.grid().size();
  j["status"] = to_string(s.status);
  j["newton_iters"] = s.newton_iters;
  j["gmres_iters"] = s.gmres_iters;
  j["refinements"] = s.refinements;
  j["E"] = {{"defining", s.E.defining}, {"eta_form", s.E.eta_form}};
  j["p"] = {{"defining", s.p.defining}, {"eta_form", s.p.eta_form}, {"ill_conditioned", s.p.ill_conditioned}};
  j["J"] = s.J.J;
  j["residuals"] = {{"rho", to_json(s.residual)}, {"tw", to_json(s.residual_tw)}};
  j["identity_tol"] = s.identities.tolerance;
  j["identities"] = to_json(s.identities);
  j["phase_jump"] = s.fields.phase_jump;
  j["eta_max"] = s.eta_max();
  j["min_rho"] = s.min_rho();
  j["tail"] = s.tail;
  j["payload"] = payload;
  if (!analysis.is_null()) j["analysis"] = analysis;
  return j;
}

inline std::string solution_text(const SolitonSolution& s, const std::string& payload = "csv", const Json& analysis = {}) {
  if (payload != "csv" && payload != "binary") throw ConfigError("payload must be csv or binary");
  std::string out = solution_header(s, payload, analysis).dump() + "\n---\n";
  const auto& f = s.fields;
  if (payload == "csv") {
    out += "x,rho,theta,eta\n";
    for (std::size_t j = 0; j < f.rho.size(); ++j)
      out += fmt17(s.grid().x(j)) + "," + fmt17(f.rho[j]) + "," + fmt17(f.theta[j]) + "," + fmt17(f.eta[j]) + "\n";
  } else {
    static_assert(std::endian::native == std::endian::little, "binary payload assumes a little-endian host");
    for (const RealField* col : {&f.rho, &f.theta, &f.eta})
      out.append(reinterpret_cast<const char*>(col->data()), col->size() * sizeof(double));
  }
  return out;
}

inline void write_solution(const std::string& path, const SolitonSolution& s, const std::string& payload = "csv",
                           const Json& analysis = {}) {
  write_atomic(path, solution_text(s, payload, analysis));
}

struct StoredSolution {
  Json header;
  PotentialSpec spec;
  Grid grid;
  double c = 0.0;
  RealField rho, theta, eta;
};

inline StoredSolution parse_solution(const std::string& text) {
  const auto nl = text.find('\n');
  if (nl == std::string::npos) throw ConfigError("solution file has no header line");
  StoredSolution s;
  try {
    s.header = Json::parse(text.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad solution header: ") + e.what());
  }
  if (s.header.value("format", "") != "nlgp-solution") throw ConfigError("not a solution file");
  s.spec = spec_from_json(s.header.at("spec"));
  s.c = s.header.at("c").get<double>();
  s.grid = Grid(s.header.at("L").get<double>(), s.header.at("N").get<std::size_t>());
  const std::size_t n = s.grid.size();
  const std::string sep = "---\n";
  if (text.compare(nl + 1, sep.size(), sep) != 0) throw ConfigError("solution file is missing the payload separator");
  const std::size_t body = nl + 1 + sep.size();
  const std::string payload = s.header.value("payload", "csv");
  s.rho.resize(n);
  s.theta.resize(n);
  s.eta.resize(n);
  if (payload == "binary") {
    if (text.size() - body != 3 * n * sizeof(double)) throw ConfigError("binary payload has the wrong length");
    std::memcpy(s.rho.data(), text.data() + body, n * sizeof(double));
    std::memcpy(s.theta.data(), text.data() + body + n * sizeof(double), n * sizeof(double));
    std::memcpy(s.eta.data(), text.data() + body + 2 * n * sizeof(double), n * sizeof(double));
    return s;
  }
  std::istringstream in(text.substr(body));
  std::string line;
  std::getline(in, line);
  if (detail::trim(line) != "x,rho,theta,eta") throw ConfigError("unexpected CSV payload header");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::getline(in, line)) throw ConfigError("CSV payload is short");
    double x = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x, &s.rho[j], &s.theta[j], &s.eta[j]) != 4)
      throw ConfigError("malformed CSV payload row " + std::to_string(j));
  }
  return s;
}

inline StoredSolution read_solution(const std::string& path) { return parse_solution(read_file(path)); }

struct BranchRow {
  double c, E, p, J, eta_max, min_rho, decay_rate_fit;
  std::size_t newton_iters;
};

inline BranchRow branch_row(const SolitonSolution& s) {
  double rate = std::numeric_limits<double>::quiet_NaN();
  try {
    rate = fit_exponential_levels(s.grid(), s.fields.eta).rate_or_power;
  } catch (const UnderresolvedTailError&) {
  }
  return {s.c(), s.E.defining, s.p.defining, s.J.J, s.eta_max(), s.min_rho(), rate, s.newton_iters};
}

inline std::string branch_csv(const std::vector<BranchRow>& rows) {
  std::string out = "c,E,p,J,eta_max,min_rho,decay_rate_fit,newton_iters\n";
  for (const auto& r : rows)
    out += fmt17(r.c) + "," + fmt17(r.E) + "," + fmt17(r.p) + "," + fmt17(r.J) + "," + fmt17(r.eta_max) + "," +
           fmt17(r.min_rho) + "," + fmt17(r.decay_rate_fit) + "," + std::to_string(r.newton_iters) + "\n";
  return out;
}

struct DecayRow {
  double c, rate_fit, rate_pred, r2, phase_jump;
};

inline std::string decay_csv(const std::vector<DecayRow>& rows) {
  std::string out = "c,rate_fit,rate_pred,r2,phase_jump\n";
  for (const auto& r : rows)
    out += fmt17(r.c) + "," + fmt17(r.rate_fit) + "," + fmt17(r.rate_pred) + "," + fmt17(r.r2) + "," + fmt17(r.phase_jump) + "\n";
  return out;
}

}  // namespace nlgp
