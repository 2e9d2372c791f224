#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PPM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t got = fread(buf, 1, sizeof buf, pipe)) {
    out.append(buf, got);
  }
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string temp_path(const std::string& name) { return ::testing::TempDir() + "ppm_cli_" + name; }

TEST(Cli, Thresholds) {
  const auto r = run("thresholds --n 1000 --m 2 --pobs 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "n,m,p_obs,pi0_sufficient,pi0_necessary,kl_sufficient,kl_necessary\n"
            "1000,2,1,0.118126,0.11695,0.0277001,0.0275619\n");
}

TEST(Cli, SweepHeaderAndDeterminism) {
  const std::string args = "sweep --n 40,50 --m 3 --pi0 0.4,0.8 --trials 2 --seed 9 --iters 10";
  const auto a = run(args), b = run(args);
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out.rfind("n,param,m,p_obs,trials,mean_mcr,exact_recovery_frac,mean_iters\n", 0), 0u);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 5);
  EXPECT_EQ(a.out.find('\r'), std::string::npos);
}

TEST(Cli, ConfigFileWithOverride) {
  const std::string path = temp_path("sweep.cfg");
  std::ofstream(path) << "n = 40\nm = 3\npi0 = 0.9\ntrials = 2\nmu = inf\n";
  const auto r = run("sweep --config " + path + " --trials 3");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\n40,0.9,3,1,3,"), std::string::npos) << r.out;

  std::ofstream(path) << "n = 40\nspeed = 3\n";
  EXPECT_EQ(run("sweep --config " + path).code, 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("sweep --m 1").code, 2);
  EXPECT_EQ(run("sweep --mu sideways").code, 2);
  EXPECT_EQ(run("sweep --unknown-flag 3").code, 2);
  EXPECT_EQ(run("align --model modified_gaussian --m 4").code, 2);
  EXPECT_EQ(run("sweep --config /nonexistent/file.cfg").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("match --n 1").code, 2);
}

TEST(Cli, AlignWritesTraceAndObservations) {
  const std::string out = temp_path("trace.csv"), obs = temp_path("obs.csv");
  const auto r =
      run("align --n 80 --m 3 --pi0 0.7 --seed 4 --out " + out + " --dump-observations " + obs);
  EXPECT_EQ(r.code, 0);
  std::ifstream trace(out), edges(obs);
  std::string line;
  std::getline(trace, line);
  EXPECT_EQ(line, "t,mcr");
  std::string last;
  while (std::getline(trace, line)) {
    last = line;
  }
  EXPECT_EQ(last, "final,0");
  std::getline(edges, line);
  EXPECT_EQ(line, "i,j,y");
}

TEST(Cli, MatchSynthetic) {
  const auto r = run("match --n 20 --m 5 --seed 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("i,feature,assigned\n", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 20 * 5);
  EXPECT_EQ(r.out, run("match --n 20 --m 5 --seed 2").out);
}

}  // namespace
