#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlgp/io.hpp"

using namespace nlgp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "nlgp_test_cli";
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args) {
  const std::string cmd = std::string(NLGP_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SolveThenVerify) {
  const auto file = scratch() / "delta.sol";
  const auto s = run("solve --c 1 --L 64 --N 1024 --json --out " + file.string());
  ASSERT_EQ(s.code, 0) << s.out;
  const auto j = Json::parse(s.out);
  EXPECT_EQ(j.at("status"), "converged");
  EXPECT_NEAR(j.at("E").at("defining").get<double>(), 1.0 / 3.0, 1e-8);
  EXPECT_TRUE(j.at("analysis").contains("decay_fit"));
  const auto v = run("verify " + file.string());
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_NE(v.out.find("verified"), std::string::npos);
}

TEST(Cli, VerifyDetectsTampering) {
  const auto file = scratch() / "tampered.sol";
  ASSERT_EQ(run("solve --potential gaussian --lambda 0.3 --c 1 --L 32 --N 512 --payload binary --out " + file.string()).code, 0);
  auto text = slurp(file);
  const auto body = text.find("\n---\n") + 5;
  const std::size_t n = 512;
  double bump = 0.5;
  std::memcpy(text.data() + body + (n / 2) * sizeof(double), &bump, sizeof bump);
  {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << text;
  }
  const auto v = run("verify --json " + file.string());
  EXPECT_EQ(v.code, 4) << v.out;
  EXPECT_FALSE(Json::parse(v.out).at("verified").get<bool>());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("solve --c 1.5 --L 32 --N 512 --out " + (scratch() / "x.sol").string()).code, 5);
  EXPECT_EQ(run("solve --potential magnet --out " + (scratch() / "x.sol").string()).code, 2);
  EXPECT_EQ(run("solve --potential gaussian --lambda -1").code, 2);
  EXPECT_EQ(run("solve --N 100 --L 32").code, 2);
  EXPECT_EQ(run("solve --config /nonexistent/run.toml").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("verify /nonexistent/file.sol").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, ConfigFileDrivesTheRun) {
  const auto dir = scratch();
  const auto cfg = dir / "run.toml";
  const auto file = dir / "cfg.sol";
  {
    std::ofstream out(cfg);
    out << "[potential]\nkind = exp_repulsive\nalpha = 1\nbeta = 3\n\n[grid]\nL = 64\nN = 1024\n\n[run]\nc = 0.9\noutput = "
        << file.string() << "\n";
  }
  const auto r = run("solve --json --config " + cfg.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto st = read_solution(file.string());
  EXPECT_EQ(st.spec.name(), "exp_repulsive");
  EXPECT_EQ(st.c, 0.9);

  std::ofstream(cfg, std::ios::app) << "bogus = 1\n";
  EXPECT_EQ(run("solve --config " + cfg.string()).code, 2);
}

TEST(Cli, OutputsAreReproducible) {
  const auto a = scratch() / "rep_a.sol", b = scratch() / "rep_b.sol";
  const auto ra = run("solve --potential soft_core --lambda 1 --c 0.8 --L 32 --N 512 --json --out " + a.string());
  const auto rb = run("solve --potential soft_core --lambda 1 --c 0.8 --L 32 --N 512 --json --out " + b.string());
  ASSERT_EQ(ra.code, 0);
  ASSERT_EQ(rb.code, 0);
  auto ja = Json::parse(ra.out), jb = Json::parse(rb.out);
  ja.erase("file");
  jb.erase("file");
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, CertifyBerloff) {
  const auto r = run("certify --potential berloff --a -36 --b 2687 --lambda 30 --json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = Json::parse(r.out);
  EXPECT_NEAR(j.at("sigma").get<double>(), 0.1745, 1e-3);
  EXPECT_GT(j.at("kappa").get<double>(), 0.0);
  EXPECT_TRUE(j.at("h3").contains("error") || j.at("h3").contains("m"));
}

TEST(Cli, DispersionTable) {
  const auto csv = scratch() / "disp.csv";
  const auto r = run("dispersion --potential berloff --a -36 --b 2687 --lambda 30 --points 5 --json --out " + csv.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = Json::parse(r.out);
  EXPECT_NEAR(j.at("sound_speed").get<double>(), std::sqrt(2.0), 1e-15);
  ASSERT_EQ(j.at("critical_points").size(), 2u);
  EXPECT_EQ(j.at("critical_points")[0].at("type"), "maxon");
  EXPECT_EQ(j.at("critical_points")[1].at("type"), "roton");
  const auto text = slurp(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "xi,w,imaginary,symbol,M_c");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  EXPECT_EQ(run("dispersion --points 1").code, 2);
}

TEST(Cli, BranchWritesTables) {
  const auto csv = scratch() / "branch.csv", decay = scratch() / "decay.csv";
  const auto r = run("branch --c-min 0.8 --c-max 1.0 --L 64 --N 1024 --json --out " + csv.string() + " --decay-out " + decay.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(Json::parse(r.out).at("termination"), "reached_cmax");
  const auto text = slurp(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "c,E,p,J,eta_max,min_rho,decay_rate_fit,newton_iters");
  EXPECT_GE(std::count(text.begin(), text.end(), '\n'), 4);
  const auto d = slurp(decay);
  EXPECT_EQ(d.substr(0, d.find('\n')), "c,rate_fit,rate_pred,r2,phase_jump");
}

TEST(Cli, MountainPassDecayAndSonic) {
  const auto mp = run("mpass --c 1 --L 32 --N 512 --sweeps 5 --nodes 7 --json");
  ASSERT_EQ(mp.code, 0) << mp.out;
  const auto jm = Json::parse(mp.out);
  EXPECT_GT(jm.at("lower").get<double>(), 0.0);
  EXPECT_LE(jm.at("lower").get<double>(), jm.at("upper").get<double>());
  EXPECT_EQ(jm.at("seed").get<std::uint64_t>(), 20240611u);

  const auto dc = run("decay --c 1 --L 32 --N 1024 --json");
  ASSERT_EQ(dc.code, 0) << dc.out;
  EXPECT_NEAR(Json::parse(dc.out).at("fit").at("value").get<double>(), 1.0, 0.02);

  const auto so = run("sonic --L 128 --N 2048 --json");
  ASSERT_EQ(so.code, 0) << so.out;
  EXPECT_NEAR(Json::parse(so.out).at("gamma").get<double>(), 1.0, 1e-6);
}

TEST(Cli, ReportSummarizesInputs) {
  const auto dir = scratch();
  const auto sol = dir / "report.sol", cert = dir / "cert.json", md = dir / "report.md";
  ASSERT_EQ(run("solve --c 1 --L 64 --N 1024 --out " + sol.string()).code, 0);
  std::ofstream(cert) << run("certify --potential gaussian --lambda 0.3 --json").out;
  ASSERT_EQ(run("report " + sol.string() + " " + cert.string() + " --out " + md.string()).code, 0);
  const auto text = slurp(md);
  EXPECT_NE(text.find("# Run report"), std::string::npos);
  EXPECT_NE(text.find("| delta | 1 | converged |"), std::string::npos);
  EXPECT_NE(text.find("- sigma: "), std::string::npos);
  std::ofstream(dir / "junk.txt") << "hello\n";
  EXPECT_EQ(run("report " + (dir / "junk.txt").string()).code, 2);
}
