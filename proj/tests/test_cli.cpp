#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const std::string kCli = OCCU_CLI_PATH;

struct Run {
  int exit_code = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string out_path =
      (fs::temp_directory_path() / "occu_cli_capture.txt").string();
  const std::string cmd = kCli + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "occu_cli_scratch";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
  const auto path = scratch_dir() / name;
  std::ofstream f(path);
  f << body;
  return path.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("cli: exact subcommand emits the documented CSV") {
  const auto cfg = write_config("exact.json",
                                R"({"distribution": {"family": "uniform", "m": 10},
                                    "n": [100], "r": [0, 1]})");
  const auto r = run_cli("exact --config " + cfg);
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("dist,family_params,n,r,exact_EM,exact_EM_lo,exact_EM_hi,exact_EK,"
                    "atoms_used\n",
                    0) == 0);
  CHECK(r.out.find("uniform(10),m=10,100,0,") != std::string::npos);
  // 12 significant digits
  CHECK(r.out.find("2.65613988876e-05") != std::string::npos);
}

TEST_CASE("cli: exit codes follow the usage/io/verdict contract") {
  // config with r beyond every n is a schema violation
  const auto bad_r = write_config("bad_r.json",
                                  R"({"distribution": {"family": "uniform", "m": 10},
                                      "n": [5], "r": [7]})");
  CHECK(run_cli("exact --config " + bad_r).exit_code == 2);

  const auto unknown = write_config("unknown.json",
                                    R"({"distribution": {"family": "uniform", "m": 10},
                                        "n": [5], "r": [1], "bogus": true})");
  CHECK(run_cli("exact --config " + unknown).exit_code == 2);

  const auto bad_family = write_config("bad_family.json",
                                       R"({"distribution": {"family": "cauchy"},
                                           "n": [5], "r": [1]})");
  CHECK(run_cli("exact --config " + bad_family).exit_code == 2);

  // missing config file is an I/O failure
  CHECK(run_cli("exact --config /nonexistent/nope.json").exit_code == 3);
  // unwritable output directory is an I/O failure
  const auto ok = write_config("ok.json",
                               R"({"distribution": {"family": "uniform", "m": 10},
                                   "n": [5], "r": [1]})");
  CHECK(run_cli("exact --config " + ok + " --out /proc/no_such_dir").exit_code == 3);
  // bad flags are usage errors
  CHECK(run_cli("exact").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("exact --config " + ok + " --format yaml").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("cli: bounds battery reports sandwich verdicts") {
  const auto cfg = write_config("bounds.json",
                                R"({"distributions": [{"family": "uniform", "m": 10},
                                                      {"family": "zipf", "alpha": 0.5}],
                                    "n": [10, 100], "r": [0, 1]})");
  const auto r = run_cli("bounds --config " + cfg);
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("dist,family_params,n,r,exact,bound_source,bound_value,optimizer_eps,"
                    "applicable,verdict\n",
                    0) == 0);
  CHECK(r.out.find(",fail") == std::string::npos);
  CHECK(r.out.find("zipf(0.5),alpha=0.5,100,0,") != std::string::npos);

  const auto rj = run_cli("bounds --config " + cfg + " --format json");
  CHECK(rj.exit_code == 0);
  const auto parsed = nlohmann::json::parse(rj.out);
  CHECK(parsed.contains("points"));
  CHECK(parsed.at("all_pass").get<bool>());
}

TEST_CASE("cli: simulate respects the seed contract") {
  const auto cfg = write_config("sim.json",
                                R"({"distribution": {"family": "zipf", "alpha": 0.5},
                                    "n": 200, "r": [0, 1], "replicates": 40,
                                    "master_seed": 12})");
  const auto a = run_cli("simulate --config " + cfg);
  const auto b = run_cli("simulate --config " + cfg);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);  // byte-identical reruns
  const auto c = run_cli("simulate --config " + cfg + " --seed 13");
  CHECK(c.exit_code == 0);
  CHECK(a.out != c.out);  // the --seed flag overrides the config seed
}

TEST_CASE("cli: estimate handles histograms and intervals") {
  const auto cfg = write_config("est.json",
                                R"({"distribution": {"family": "zipf", "alpha": 0.5},
                                    "histogram": {"a": 5, "b": 3, "c": 1, "d": 1},
                                    "estimators": [{"kind": "turing", "r": 0},
                                                   {"kind": "modified", "s": 2}],
                                    "intervals": [{"method": "missing_mass", "t": 3.0}]})");
  const auto r = run_cli("estimate --config " + cfg);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("turing,0,,0.2,") != std::string::npos);
  CHECK(r.out.find("missing_mass") != std::string::npos);
}

TEST_CASE("cli: poisson and metric subcommands run their verdicts") {
  const auto pcfg = write_config("poi.json",
                                 R"({"distribution": {"family": "zipf", "alpha": 0.5},
                                     "Lambda": [100.0], "r": [0, 1]})");
  const auto pr = run_cli("poisson --config " + pcfg);
  CHECK(pr.exit_code == 0);
  CHECK(pr.out.find("poisson_split") != std::string::npos);
  CHECK(pr.out.find(",fail") == std::string::npos);

  const auto icfg = write_config("poi_intensity.json",
                                 R"({"distribution": {"family": "uniform", "m": 10},
                                     "intensity": {"form": "power", "a": 2.0, "b": 1.0},
                                     "t": [10.0], "r": [0]})");
  const auto ir = run_cli("poisson --config " + icfg);
  CHECK(ir.exit_code == 0);
  CHECK(ir.out.find(",100,0,") != std::string::npos);  // Lambda_10 = 2*10^2/2

  const auto mcfg = write_config("met.json",
                                 R"({"model": {"space": "segment", "a": 0.0, "b": 1.0},
                                     "delta": 0.5, "n": 1, "r": [0],
                                     "nu_eps": [0.6]})");
  const auto mr = run_cli("metric --config " + mcfg);
  CHECK(mr.exit_code == 0);
  CHECK(mr.out.find("exact_EM_delta,0.5,1,0,,0.25,") != std::string::npos);
  CHECK(mr.out.find("cover_upper") != std::string::npos);
}

TEST_CASE("cli: suite reports are byte-identical across runs and thread counts") {
  const auto out1 = (scratch_dir() / "suite1").string();
  const auto out2 = (scratch_dir() / "suite2").string();
  const auto out3 = (scratch_dir() / "suite3").string();
  std::error_code ec;
  for (const auto& p : {out1, out2, out3}) fs::remove_all(p, ec);
  CHECK(run_cli("suite --seed 5 --out " + out1).exit_code == 0);
  CHECK(run_cli("suite --seed 5 --out " + out2).exit_code == 0);
  CHECK(run_cli("suite --seed 5 --jobs 8 --out " + out3).exit_code == 0);
  for (const auto* name : {"bounds.csv", "simulate.csv", "poisson.csv", "summary.json"}) {
    const auto a = slurp(fs::path(out1) / name);
    REQUIRE(!a.empty());
    CHECK(a == slurp(fs::path(out2) / name));
    CHECK(a == slurp(fs::path(out3) / name));
  }
  const auto summary = nlohmann::json::parse(slurp(fs::path(out1) / "summary.json"));
  CHECK(summary.at("all_pass").get<bool>());
}
