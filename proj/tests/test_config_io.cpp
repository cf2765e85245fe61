#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "nlgp/config.hpp"
#include "nlgp/io.hpp"

using namespace nlgp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nlgp_test_config_io";
  fs::create_directories(dir);
  return dir / name;
}

const char* kSample = R"(# gaussian run
[potential]
kind = "gaussian"
lambda = 0.3

[grid]
L = 64
N = 2048
auto_refine = false

[solver]
tol_newton = 1e-11
symmetry = full_grid

[run]
c = 0.9
payload = binary
output = "out.sol"
)";

}  // namespace

TEST(Config, ParsesSections) {
  const auto cfg = parse_config(kSample);
  EXPECT_EQ(cfg.kind, "gaussian");
  EXPECT_EQ(cfg.potential.at("lambda"), "0.3");
  EXPECT_EQ(cfg.L, 64.0);
  EXPECT_EQ(cfg.N, 2048u);
  EXPECT_FALSE(cfg.solver.auto_refine);
  EXPECT_EQ(cfg.solver.tol_newton, 1e-11);
  EXPECT_EQ(cfg.solver.symmetry, SymmetryMode::FullGrid);
  EXPECT_EQ(cfg.solver.max_iter, SolverOptions{}.max_iter);
  EXPECT_EQ(cfg.run.c, 0.9);
  EXPECT_EQ(cfg.run.payload, "binary");
  EXPECT_EQ(cfg.run.output, "out.sol");
  EXPECT_EQ(make_potential(cfg).symbol(1.0), PotentialSpec::gaussian(0.3).symbol(1.0));
}

TEST(Config, DefaultsWhenEmpty) {
  const auto cfg = parse_config("");
  EXPECT_EQ(cfg.kind, "delta");
  EXPECT_EQ(cfg.L, 128.0);
  EXPECT_EQ(cfg.N, 4096u);
  EXPECT_TRUE(cfg.solver.auto_refine);
  EXPECT_EQ(cfg.run.seed, 20240611u);
}

TEST(Config, SerializeRoundTrip) {
  const auto cfg = parse_config(kSample);
  const auto text = serialize_config(cfg);
  const auto back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.solver.tol_newton, cfg.solver.tol_newton);
  EXPECT_EQ(back.run.c, cfg.run.c);
  EXPECT_EQ(back.potential, cfg.potential);
}

TEST(Config, RejectsUnknownKeysAndSections) {
  EXPECT_THROW(parse_config("[grid]\nLL = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[solver]\ntolerance = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nspeed = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[output]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[potential]\nkind = gaussian\nlambda = 0.3\nkappa = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("L = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nL 3\n"), ConfigError);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_config("[potential]\nkind = magnet\n"), ConfigError);
  EXPECT_THROW(parse_config("[potential]\nkind = gaussian\n"), ConfigError);
  EXPECT_THROW(parse_config("[potential]\nkind = gaussian\nlambda = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("[potential]\nkind = exp_repulsive\nalpha = 2\nbeta = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nL = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nN = 12x\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nauto_refine = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("[solver]\nsymmetry = odd\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\npayload = hdf5\n"), ConfigError);
}

TEST(Config, MeasureComboAndTabulated) {
  const auto cfg = parse_config("[potential]\nkind = measure_combo\nweights = 0.5, 0.25\nshifts = 1, 2\n");
  const auto spec = make_potential(cfg);
  EXPECT_NEAR(spec.symbol(0.7), PotentialSpec::measure_combo({0.5, 0.25}, {1.0, 2.0}).symbol(0.7), 1e-15);

  const auto table = scratch("table.csv");
  {
    std::ofstream out(table);
    out << "0,1\n1,0.8\n2,0.5\n";
  }
  const auto tab = make_potential(parse_config("[potential]\nkind = tabulated\nfile = " + table.string() + "\n"));
  EXPECT_EQ(tab.name(), "tabulated");
  EXPECT_NEAR(tab.symbol(1.0), 0.8, 1e-15);
  EXPECT_THROW(make_potential(parse_config("[potential]\nkind = tabulated\nfile = /nonexistent/t.csv\n")), ConfigError);
}

TEST(Config, EnvironmentOverridesGrid) {
  const auto path = scratch("env.toml");
  {
    std::ofstream out(path);
    out << kSample;
  }
  ::setenv("NLGP_GRID_L", "32", 1);
  ::setenv("NLGP_GRID_N", "512", 1);
  const auto cfg = load_config(path.string());
  ::unsetenv("NLGP_GRID_L");
  ::unsetenv("NLGP_GRID_N");
  EXPECT_EQ(cfg.L, 32.0);
  EXPECT_EQ(cfg.N, 512u);
  EXPECT_EQ(load_config(path.string()).L, 64.0);
  ::setenv("NLGP_GRID_N", "lots", 1);
  EXPECT_THROW(load_config(path.string()), ConfigError);
  ::unsetenv("NLGP_GRID_N");
  EXPECT_THROW(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST(Io, SpecJsonRoundTrip) {
  const std::vector<PotentialSpec> specs = {
      PotentialSpec::delta(),           PotentialSpec::exp_repulsive(1.0, 3.0),
      PotentialSpec::shifted_deltas(0.5), PotentialSpec::gaussian(0.3),
      PotentialSpec::soft_core(1.2),    PotentialSpec::bochner_riesz(0.4),
      PotentialSpec::berloff(-36.0, 2687.0, 30.0), PotentialSpec::measure_combo({0.5}, {1.5}),
      PotentialSpec::tabulated({0.0, 1.0, 2.0}, {1.0, 0.7, 0.2})};
  for (const auto& spec : specs) {
    const auto back = spec_from_json(Json::parse(to_json(spec).dump()));
    EXPECT_EQ(back.name(), spec.name());
    for (double xi : {0.0, 0.3, 1.1, 1.9}) EXPECT_EQ(back.symbol(xi), spec.symbol(xi)) << spec.describe();
  }
  EXPECT_THROW(spec_from_json(Json{{"kind", "magnet"}}), ConfigError);
  EXPECT_THROW(spec_from_json(Json{{"kind", "gaussian"}}), ConfigError);
  EXPECT_THROW(spec_from_json(Json{{"kind", "gaussian"}, {"lambda", -1.0}}), ConfigError);
}

class SolutionFiles : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { sol_ = new SolitonSolution(newton_solve(PotentialSpec::gaussian(0.3), Grid(32.0, 512), 1.0)); }
  static void TearDownTestSuite() {
    delete sol_;
    sol_ = nullptr;
  }
  static SolitonSolution* sol_;
};

SolitonSolution* SolutionFiles::sol_ = nullptr;

TEST_F(SolutionFiles, CsvRoundTripIsExact) {
  const auto& s = *sol_;
  const auto path = scratch("sol.csv.sol");
  write_solution(path.string(), s, "csv");
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  const auto r = read_solution(path.string());
  EXPECT_EQ(r.spec.name(), "gaussian");
  EXPECT_EQ(r.c, 1.0);
  EXPECT_EQ(r.grid, s.grid());
  EXPECT_EQ(r.rho, s.fields.rho);
  EXPECT_EQ(r.theta, s.fields.theta);
  EXPECT_EQ(r.eta, s.fields.eta);
  EXPECT_EQ(r.header.at("status"), "converged");
  EXPECT_EQ(r.header.at("E").at("defining").get<double>(), s.E.defining);
  EXPECT_EQ(r.header.at("identities").size(), s.identities.entries.size());
}

TEST_F(SolutionFiles, BinaryRoundTripIsExact) {
  const auto& s = *sol_;
  const auto r = parse_solution(solution_text(s, "binary"));
  EXPECT_EQ(r.rho, s.fields.rho);
  EXPECT_EQ(r.theta, s.fields.theta);
  EXPECT_EQ(r.eta, s.fields.eta);
  EXPECT_THROW(solution_text(s, "hdf5"), ConfigError);
}

TEST_F(SolutionFiles, AnalysisBlockIsCarried) {
  const Json analysis = {{"note", "x"}, {"radius", 2.5}};
  const auto r = parse_solution(solution_text(*sol_, "csv", analysis));
  EXPECT_EQ(r.header.at("analysis"), analysis);
}

TEST_F(SolutionFiles, DeterministicOutput) {
  const auto again = newton_solve(PotentialSpec::gaussian(0.3), Grid(32.0, 512), 1.0);
  auto a = solution_header(*sol_, "csv");
  auto b = solution_header(again, "csv");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(solution_text(*sol_, "binary"), solution_text(again, "binary"));
}

TEST_F(SolutionFiles, CorruptFilesAreRejected) {
  const auto text = solution_text(*sol_, "csv");
  EXPECT_THROW(parse_solution("not json\n---\n"), ConfigError);
  EXPECT_THROW(parse_solution("{\"format\":\"other\"}\n---\n"), ConfigError);
  EXPECT_THROW(parse_solution(text.substr(0, text.size() / 2)), ConfigError);
  const auto bin = solution_text(*sol_, "binary");
  EXPECT_THROW(parse_solution(bin.substr(0, bin.size() - 8)), ConfigError);
  EXPECT_THROW(read_solution("/nonexistent/file.sol"), ConfigError);
}

TEST_F(SolutionFiles, BranchAndDecayTables) {
  const auto row = branch_row(*sol_);
  EXPECT_EQ(row.c, 1.0);
  EXPECT_EQ(row.E, sol_->E.defining);
  const auto csv = branch_csv({row, row});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "c,E,p,J,eta_max,min_rho,decay_rate_fit,newton_iters");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto d = decay_csv({{1.0, 0.9, 0.95, 0.999, 1.5}});
  EXPECT_EQ(d, "c,rate_fit,rate_pred,r2,phase_jump\n1,0.90000000000000002,0.94999999999999996,0.999,1.5\n");
}

TEST(Io, Fmt17RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(fmt17(v)), v);
}
