// nlgp: solve, continue and diagnose traveling waves of the nonlocal
// Gross-Pitaevskii equation from the command line.
//
// Exit codes: 0 ok, 2 configuration error, 3 solver failure, 4 verification
// failure, 5 speed outside the subsonic regime.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlgp/analysis.hpp"
#include "nlgp/config.hpp"
#include "nlgp/functionals.hpp"
#include "nlgp/io.hpp"
#include "nlgp/potentials.hpp"
#include "nlgp/solver.hpp"

namespace {

using namespace nlgp;

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kVerify = 4, kRegime = 5 };

struct Common {
  std::string config;
  std::string potential;
  std::optional<double> alpha, beta, lambda, kappa, a, b;
  std::string weights, shifts, table;
  std::optional<double> L;
  std::optional<std::size_t> N;
  std::optional<double> c, c_min, c_max;
  std::optional<std::uint64_t> seed;
  std::string out, payload;
  bool json = false;
};

void add_common(CLI::App* app, Common& o) {
  app->add_option("--config", o.config, "run configuration file");
  app->add_option("--potential", o.potential, "potential kind");
  app->add_option("--alpha", o.alpha);
  app->add_option("--beta", o.beta);
  app->add_option("--lambda", o.lambda);
  app->add_option("--kappa", o.kappa);
  app->add_option("--a", o.a);
  app->add_option("--b", o.b);
  app->add_option("--weights", o.weights, "measure_combo weights, comma separated");
  app->add_option("--shifts", o.shifts, "measure_combo shifts, comma separated");
  app->add_option("--table", o.table, "two-column CSV of symbol samples");
  app->add_option("--L", o.L, "grid half-length");
  app->add_option("--N", o.N, "grid size (power of two)");
  app->add_option("--seed", o.seed);
  app->add_option("--out", o.out, "output file");
  app->add_flag("--json", o.json, "machine-readable stdout");
}

RunConfig resolve(const Common& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.config.empty()) apply_env_overrides(cfg);
  if (!o.potential.empty() && o.potential != cfg.kind) {
    cfg.kind = o.potential;
    cfg.potential.clear();
  }
  auto set = [&](const char* k, const std::optional<double>& v) {
    if (v) cfg.potential[k] = fmt17(*v);
  };
  set("alpha", o.alpha);
  set("beta", o.beta);
  set("lambda", o.lambda);
  set("kappa", o.kappa);
  set("a", o.a);
  set("b", o.b);
  if (!o.weights.empty()) cfg.potential["weights"] = o.weights;
  if (!o.shifts.empty()) cfg.potential["shifts"] = o.shifts;
  if (!o.table.empty()) cfg.potential["file"] = o.table;
  if (o.L) cfg.L = *o.L;
  if (o.N) cfg.N = *o.N;
  if (o.c) cfg.run.c = *o.c;
  if (o.c_min) cfg.run.c_min = *o.c_min;
  if (o.c_max) cfg.run.c_max = *o.c_max;
  if (o.seed) cfg.run.seed = *o.seed;
  if (!o.out.empty()) cfg.run.output = o.out;
  if (!o.payload.empty()) cfg.run.payload = o.payload;
  return cfg;
}

Grid make_grid(const RunConfig& cfg) {
  try {
    return Grid(cfg.L, cfg.N);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void emit(const Common& o, const Json& j, const std::string& text) {
  if (o.json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
}

std::string line(const char* fmt, double v) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

Json solution_analysis(const SolitonSolution& s) {
  Json a;
  const auto pl = phase_limits(s.fields);
  a["phase"] = {{"theta_minus", pl.theta_minus}, {"theta_plus", pl.theta_plus}, {"jump", pl.jump},
                {"zero_jump", pl.zero_jump}, {"tail_warning", pl.tail_warning}};
  const auto sm = symmetry_metrics(s.fields);
  a["symmetry"] = {{"rho_asymmetry", sm.rho_asymmetry}, {"theta_asymmetry", sm.theta_asymmetry}};
  a["mass"] = mass(s.grid(), s.fields.eta);
  a["analyticity_radius"] = analyticity_proxy(s.grid(), s.fields.eta, default_mu_list()).radius;
  a["decay_prediction"] = to_json(decay_prediction(s.spec, s.c()));
  try {
    a["decay_fit"] = to_json(fit_exponential_levels(s.grid(), s.fields.eta));
  } catch (const UnderresolvedTailError& e) {
    a["decay_fit"] = {{"error", e.what()}};
  }
  return a;
}

int status_exit(SolveStatus st) {
  switch (st) {
    case SolveStatus::Converged: return kOk;
    case SolveStatus::IdentityFailure: return kVerify;
    default: return kSolver;
  }
}

int cmd_solve(const Common& o) {
  const auto cfg = resolve(o);
  const auto spec = make_potential(cfg);
  const auto s = newton_solve(spec, make_grid(cfg), cfg.run.c, cfg.solver);
  const std::string path = cfg.run.output.empty() ? "solution.nlgp" : cfg.run.output;
  const auto analysis = solution_analysis(s);
  write_solution(path, s, cfg.run.payload, analysis);
  Json j = solution_header(s, cfg.run.payload, analysis);
  j["file"] = path;
  std::string t = spec.describe() + line(" c = %.6g\n", s.c());
  t += std::string("status          ") + to_string(s.status) + "\n";
  t += line("grid L          %.6g\n", s.grid().half_length()) + line("grid N          %.0f\n", double(s.grid().size()));
  t += line("newton iters    %.0f\n", double(s.newton_iters)) + line("residual sup    %.3e\n", s.residual.sup);
  t += line("energy          %.15g\n", s.E.defining) + line("momentum        %.15g\n", s.p.defining);
  t += line("J_c             %.15g\n", s.J.J) + line("phase jump      %.15g\n", s.fields.phase_jump);
  t += line("worst identity  %.3e\n", s.identities.worst()) + "written to " + path + "\n";
  emit(o, j, t);
  return status_exit(s.status);
}

int cmd_verify(const Common& o, const std::string& input) {
  const auto st = read_solution(input);
  const double tol = st.header.value("identity_tol", 1e-6);
  const auto fields = assemble(st.grid, st.rho, st.c);
  const SampledSymbol sym(st.spec, st.grid);
  const auto rep = identity_suite(fields, sym, tol);
  const auto res = residual_rho(st.grid, st.rho, st.c, sym);
  std::size_t mismatches = 0;
  Json entries = Json::array();
  std::string t = "identity            residual     stored  now\n";
  for (const auto& e : rep.entries) {
    bool stored = false;
    for (const auto& s : st.header.at("identities"))
      if (s.at("name") == e.name) stored = s.at("pass").get<bool>();
    if (stored != e.pass) ++mismatches;
    entries.push_back({{"name", e.name}, {"residual_rel", e.residual_rel}, {"pass", e.pass}, {"stored_pass", stored}});
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-18s  %.3e    %-5s   %s\n", e.name.c_str(), e.residual_rel, stored ? "pass" : "FAIL",
                  e.pass ? "pass" : "FAIL");
    t += buf;
  }
  const bool ok = rep.all_pass() && mismatches == 0;
  t += line("rho residual sup %.3e\n", res.sup) + (ok ? "verified\n" : "verification FAILED\n");
  Json j = {{"file", input}, {"identities", entries}, {"residual_rho", to_json(res)}, {"mismatches", mismatches}, {"verified", ok}};
  emit(o, j, t);
  return ok ? kOk : kVerify;
}

int cmd_branch(const Common& o, const std::string& decay_out) {
  const auto cfg = resolve(o);
  const auto spec = make_potential(cfg);
  std::vector<BranchRow> rows;
  std::vector<DecayRow> drows;
  const auto br = continue_branch(spec, make_grid(cfg), cfg.run.c_min, cfg.run.c_max, cfg.solver, [&](const SolitonSolution& s) {
    rows.push_back(branch_row(s));
    double r2 = std::numeric_limits<double>::quiet_NaN();
    try {
      r2 = fit_exponential_levels(s.grid(), s.fields.eta).r_squared;
    } catch (const UnderresolvedTailError&) {
    }
    drows.push_back({s.c(), rows.back().decay_rate_fit, decay_prediction(spec, s.c()).value, r2, s.fields.phase_jump});
  });
  const std::string path = cfg.run.output.empty() ? "branch.csv" : cfg.run.output;
  write_atomic(path, branch_csv(rows));
  if (!decay_out.empty()) write_atomic(decay_out, decay_csv(drows));
  Json j = {{"spec", to_json(spec)}, {"members", rows.size()}, {"termination", to_string(br.termination)}, {"file", path}};
  std::string t = spec.describe() + ": " + std::to_string(rows.size()) + " members, " + to_string(br.termination) +
                  ", written to " + path + "\n";
  emit(o, j, t);
  return rows.empty() ? kSolver : kOk;
}

int cmd_dispersion(const Common& o, double xi_max, std::size_t points) {
  const auto cfg = resolve(o);
  const auto spec = make_potential(cfg);
  const double cs = sound_speed(spec);
  if (!(xi_max > 0.0)) xi_max = 4.0 * cs;
  std::string csv = "xi,w,imaginary,symbol,M_c\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double xi = xi_max * static_cast<double>(i) / static_cast<double>(points - 1);
    const auto d = dispersion(spec, xi);
    csv += fmt17(xi) + "," + fmt17(d.value) + "," + (d.imaginary ? "1" : "0") + "," + fmt17(spec.symbol(xi)) + "," +
           fmt17(mc_symbol(spec, cfg.run.c, xi)) + "\n";
  }
  if (!cfg.run.output.empty()) write_atomic(cfg.run.output, csv);
  Json crit = Json::array();
  std::string t = spec.describe() + line(": sound speed %.15g\n", cs);
  for (const auto& p : roton_maxon(spec, certification_lattice(spec))) {
    const char* type = p.type == CriticalType::Max ? "maxon" : "roton";
    crit.push_back({{"type", type}, {"xi", p.xi}, {"w", p.w}});
    char buf[120];
    std::snprintf(buf, sizeof buf, "%s at xi = %.8g, w = %.8g\n", type, p.xi, p.w);
    t += buf;
  }
  if (crit.empty()) t += "dispersion is monotone\n";
  if (cfg.run.output.empty() && !o.json) t += csv;
  emit(o, {{"spec", to_json(spec)}, {"sound_speed", cs}, {"critical_points", crit}}, t);
  return kOk;
}

int cmd_certify(const Common& o) {
  const auto cfg = resolve(o);
  const auto spec = make_potential(cfg);
  const auto lattice = certification_lattice(spec);
  const auto h1 = certify_h1(spec, lattice);
  Json j = {{"spec", to_json(spec)},
            {"sigma", h1.sigma},
            {"kappa", h1.kappa},
            {"best_sigma", h1.best_sigma()},
            {"guaranteed_speed", h1.guaranteed_speed()},
            {"sound_speed", h1.sound_speed},
            {"normalized", h1.normalized},
            {"h2_class", to_string(h1.h2_class)},
            {"lattice_size", h1.lattice_size},
            {"sampled", h1.sampled}};
  if (h1.critical_sigma) j["critical_sigma"] = *h1.critical_sigma;
  if (h1.h4_norm) j["h4_norm"] = *h1.h4_norm;
  std::string t = spec.describe() + "\n" + line("H1 sigma        %.6f\n", h1.sigma) + line("H1 kappa        %.6f\n", h1.kappa);
  if (h1.critical_sigma) t += line("sigma at kappa=1/2  %.6f\n", *h1.critical_sigma);
  t += std::string("H2 class        ") + to_string(h1.h2_class) + "\n";
  try {
    const auto h3 = certify_h3(spec, lattice);
    j["h3"] = {{"m", h3.m}, {"implied_bound_holds", h3.implied_bound_holds}, {"margin", h3.implied_bound_margin}};
    t += line("H3 m            %.6f\n", h3.m);
  } catch (const CertificationError& e) {
    j["h3"] = {{"error", e.what()}};
    t += std::string("H3              ") + e.what() + "\n";
  }
  emit(o, j, t);
  return kOk;
}

int cmd_mpass(const Common& o, std::optional<std::size_t> sweeps, std::optional<std::size_t> nodes) {
  auto cfg = resolve(o);
  if (sweeps) cfg.run.sweeps = *sweeps;
  if (nodes) cfg.run.nodes = *nodes;
  const auto spec = make_potential(cfg);
  const auto cert = certify_h1(spec);
  MountainPassOptions mo;
  mo.sweeps = cfg.run.sweeps;
  mo.nodes = cfg.run.nodes;
  mo.seed = cfg.run.seed;
  const auto grid = make_grid(cfg);
  const auto br = mountain_pass_bracket(spec, grid, cfg.run.c, cert, mo);
  Json j = to_json(br);
  j["seed"] = mo.seed;
  std::string t = spec.describe() + line(" c = %.6g\n", cfg.run.c) + line("lower     %.10g\n", br.lower) +
                  line("upper     %.10g\n", br.upper) + line("straight  %.10g\n", br.straight_upper) +
                  line("J(1-phi)  %.10g\n", br.phi.J);
  try {
    const auto s = newton_solve(spec, grid, cfg.run.c, cfg.solver);
    if (s.converged) {
      j["soliton_J"] = s.J.J;
      t += line("soliton J %.10g\n", s.J.J);
    }
  } catch (const Error&) {
  }
  if (!cfg.run.output.empty()) write_atomic(cfg.run.output, j.dump(2) + "\n");
  emit(o, j, t);
  return kOk;
}

int cmd_decay(const Common& o) {
  const auto cfg = resolve(o);
  const auto spec = make_potential(cfg);
  const auto pred = decay_prediction(spec, cfg.run.c);
  const auto s = newton_solve(spec, make_grid(cfg), cfg.run.c, cfg.solver);
  if (s.status == SolveStatus::NewtonFailed || s.status == SolveStatus::Trivialized) return kSolver;
  Json j = {{"spec", to_json(spec)}, {"c", cfg.run.c}, {"prediction", to_json(pred)}};
  std::string t = spec.describe() + line(" c = %.6g\n", cfg.run.c) +
                  std::string("predicted       ") + to_string(pred.model) + line(" %.8g\n", pred.value);
  if (pred.model == DecayModel::Algebraic) {
    const auto env = algebraic_envelope(s.grid(), s.fields.eta, 0.9);
    j["envelope"] = {{"ell", env.ell}, {"plus", env.envelope_plus}, {"minus", env.envelope_minus}, {"decreasing", env.decreasing}};
    t += std::string("|x|^0.9 envelope ") + (env.decreasing ? "decreasing\n" : "NOT decreasing\n");
  } else {
    try {
      const auto fit = fit_exponential_levels(s.grid(), s.fields.eta);
      j["fit"] = to_json(fit);
      t += line("fitted rate     %.8g\n", fit.rate_or_power) + line("r^2             %.6f\n", fit.r_squared);
      if (pred.model == DecayModel::Exponential) t += line("relative error  %.3e\n", std::abs(fit.rate_or_power / pred.value - 1.0));
    } catch (const UnderresolvedTailError& e) {
      j["fit"] = {{"error", e.what()}};
      t += std::string("fit failed: ") + e.what() + "\n";
    }
  }
  emit(o, j, t);
  return kOk;
}

int cmd_sonic(const Common& o) {
  const auto cfg = resolve(o);
  const auto spec = make_potential(cfg);
  const auto sw = sonic_sweep(spec, make_grid(cfg), default_sonic_gaps(), cfg.solver);
  Json rows = Json::array();
  std::string t = "gap        c          eta_max      E            nonvanishing\n";
  for (const auto& r : sw.rows) {
    rows.push_back({{"gap", r.gap}, {"c", r.c}, {"eta_max", r.eta_max}, {"E", r.E}, {"p", r.p}, {"converged", r.converged},
                    {"nonvanishing_pass", r.nonvanishing.pass}});
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-9.4g  %-9.6f  %.4e   %.4e   %s\n", r.gap, r.c, r.eta_max, r.E, r.nonvanishing.pass ? "pass" : "FAIL");
    t += buf;
  }
  t += line("gamma = %.6f\n", sw.gamma) + line("W''(0) = %.6g\n", sw.symbol_second_derivative);
  emit(o, {{"spec", to_json(spec)}, {"rows", rows}, {"gamma", sw.gamma}, {"symbol_second_derivative", sw.symbol_second_derivative},
           {"amplitude_decreasing", sw.amplitude_decreasing}, {"nonvanishing_everywhere", sw.nonvanishing_everywhere}},
       t);
  return sw.nonvanishing_everywhere ? kOk : kVerify;
}

// Markdown summary of solution files and JSON outputs.
int cmd_report(const Common& o, const std::vector<std::string>& inputs) {
  std::string md = "# Run report\n\n";
  std::string sol_rows;
  std::string other;
  for (const auto& path : inputs) {
    const std::string text = read_file(path);
    const auto first = text.substr(0, text.find('\n'));
    Json j;
    try {
      j = Json::parse(first.front() == '{' && text.find("\n---\n") != std::string::npos ? first : text);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("'" + path + "' is neither a solution file nor JSON");
    }
    if (j.value("format", "") == "nlgp-solution") {
      double worst = 0.0;
      for (const auto& e : j.at("identities")) worst = std::max(worst, e.at("residual_rel").get<double>());
      char buf[400];
      std::snprintf(buf, sizeof buf, "| %s | %.6g | %s | %.12g | %.12g | %.12g | %.2e |\n", j["spec"]["kind"].get<std::string>().c_str(),
                    j["c"].get<double>(), j["status"].get<std::string>().c_str(), j["E"]["defining"].get<double>(),
                    j["p"]["defining"].get<double>(), j["J"].get<double>(), worst);
      sol_rows += buf;
    } else {
      other += "## " + path + "\n\n";
      for (const auto& [k, v] : j.items())
        if (v.is_primitive()) other += "- " + k + ": " + v.dump() + "\n";
      other += "\n";
    }
  }
  if (!sol_rows.empty())
    md += "## Solutions\n\n| potential | c | status | E | p | J | worst identity |\n|---|---|---|---|---|---|---|\n" + sol_rows + "\n";
  md += other;
  if (!o.out.empty())
    write_atomic(o.out, md);
  else
    std::cout << md;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traveling waves of the nonlocal Gross-Pitaevskii equation"};
  app.require_subcommand(1);
  Common o;
  std::string input, decay_out;
  std::vector<std::string> inputs;
  double xi_max = 0.0;
  std::size_t points = 401;
  std::optional<std::size_t> sweeps, nodes;

  auto* solve = app.add_subcommand("solve", "Newton solve at one speed");
  add_common(solve, o);
  solve->add_option("--c", o.c, "speed");
  solve->add_option("--payload", o.payload, "csv or binary");

  auto* branch = app.add_subcommand("branch", "continuation over a speed range");
  add_common(branch, o);
  branch->add_option("--c-min", o.c_min);
  branch->add_option("--c-max", o.c_max);
  branch->add_option("--decay-out", decay_out, "decay table CSV");

  auto* verify = app.add_subcommand("verify", "recompute the identity battery of a stored solution");
  add_common(verify, o);
  verify->add_option("input", input, "solution file")->required();

  auto* disp = app.add_subcommand("dispersion", "dispersion relation, M_c and roton/maxon points");
  add_common(disp, o);
  disp->add_option("--c", o.c, "speed for M_c");
  disp->add_option("--xi-max", xi_max);
  disp->add_option("--points", points)->check(CLI::Range(2, 1000000));

  auto* cert = app.add_subcommand("certify", "sampled hypothesis certificates");
  add_common(cert, o);

  auto* mpass = app.add_subcommand("mpass", "mountain-pass bracket");
  add_common(mpass, o);
  mpass->add_option("--c", o.c);
  mpass->add_option("--sweeps", sweeps);
  mpass->add_option("--nodes", nodes);

  auto* decay = app.add_subcommand("decay", "tail fit against the predicted decay");
  add_common(decay, o);
  decay->add_option("--c", o.c);

  auto* sonic = app.add_subcommand("sonic", "amplitude sweep towards the sound speed");
  add_common(sonic, o);

  auto* report = app.add_subcommand("report", "Markdown summary of solution files and JSON outputs");
  report->add_option("inputs", inputs)->required();
  report->add_option("--out", o.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*branch) return cmd_branch(o, decay_out);
    if (*verify) return cmd_verify(o, input);
    if (*disp) return cmd_dispersion(o, xi_max, points);
    if (*cert) return cmd_certify(o);
    if (*mpass) return cmd_mpass(o, sweeps, nodes);
    if (*decay) return cmd_decay(o);
    if (*sonic) return cmd_sonic(o);
    if (*report) return cmd_report(o, inputs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const OutOfRegimeError& e) {
    std::cerr << "out of regime: " << e.what() << "\n";
    return kRegime;
  } catch (const NoSoundSpeedError& e) {
    std::cerr << "out of regime: " << e.what() << "\n";
    return kRegime;
  } catch (const SupersonicMultiplierError& e) {
    std::cerr << "out of regime: " << e.what() << "\n";
    return kRegime;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
