#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"

namespace {

struct CmdResult {
  int exit_code;
  std::string out;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args) {
  const std::string out_file = "cli_test_stdout.tmp";
  const std::string cmd = std::string(QMETRO_BIN_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out_file)};
}

std::vector<std::string> lines_without_version(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (line.rfind("# qmetro_version=", 0) != 0) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("list prints the scenario catalogue") {
  const CmdResult r = run_cli("list");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("mzi-single-photon") != std::string::npos);
  CHECK(r.out.find("displacement") != std::string::npos);
}

TEST_CASE("scenario command is a test oracle via its exit code") {
  SUBCASE("targets met: exit 0") {
    const CmdResult r = run_cli("scenario mzi-single-photon t=0.70710678118654752 phi=1.5707963267948966");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
  }

  SUBCASE("displacement table shows the RLD inverse") {
    const CmdResult r = run_cli("scenario displacement alpha_re=1 alpha_im=0 --nmax 25");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("jinv_01_im") != std::string::npos);
    CHECK(r.out.find("-0.25") != std::string::npos);
  }

  SUBCASE("a cutoff too tight to meet the stated tolerances: exit 1") {
    const CmdResult r = run_cli("scenario displacement alpha_re=0.5 alpha_im=0.3 --nmax 6");
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("FAIL") != std::string::npos);
  }

  SUBCASE("unknown scenario: exit 2") { CHECK(run_cli("scenario warp-drive").exit_code == 2); }
  SUBCASE("unknown parameter: exit 2") {
    CHECK(run_cli("scenario mzi-single-photon tau=0.5").exit_code == 2);
  }
  SUBCASE("unknown flag: exit 2") { CHECK(run_cli("scenario mzi-single-photon --frmat csv").exit_code == 2); }
  SUBCASE("missing command: exit 2") { CHECK(run_cli("").exit_code == 2); }
}

TEST_CASE("study emits a deterministic CSV that replays from its own header") {
  const std::string base = "study mzi-single-photon --mlist 20,50 --r 20 --seed 7 --format csv";
  const CmdResult r1 = run_cli(base + " --out cli_study1.csv");
  REQUIRE(r1.exit_code == 0);
  const CmdResult r2 = run_cli(base + " --out cli_study2.csv");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp("cli_study1.csv") == slurp("cli_study2.csv"));

  // the emitted file doubles as a config: replaying it reproduces the bytes
  const CmdResult r3 = run_cli("study --config cli_study1.csv --out cli_study3.csv");
  REQUIRE(r3.exit_code == 0);
  CHECK(lines_without_version(slurp("cli_study1.csv")) == lines_without_version(slurp("cli_study3.csv")));

  const std::string csv = slurp("cli_study1.csv");
  CHECK(csv.find("# command=study") != std::string::npos);
  CHECK(csv.find("# seed=7") != std::string::npos);
  CHECK(csv.find("M,mean_estimate,variance,crb,ratio,p_value") != std::string::npos);
}

TEST_CASE("json and csv carry the same numbers") {
  const std::string base = "study mzi-single-photon --mlist 40 --r 25 --seed 11";
  REQUIRE(run_cli(base + " --format csv --out cli_nums.csv").exit_code == 0);
  REQUIRE(run_cli(base + " --format json --out cli_nums.json").exit_code == 0);
  const std::string csv = slurp("cli_nums.csv");
  const std::string json = slurp("cli_nums.json");

  // pull the variance field out of the csv data row and find it in the json
  std::stringstream ss(csv);
  std::string line, data;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] == '4' && line.rfind("40,", 0) == 0) data = line;
  REQUIRE(!data.empty());
  std::stringstream fields(data);
  std::string field;
  std::getline(fields, field, ',');  // M
  std::getline(fields, field, ',');  // mean
  std::getline(fields, field, ',');  // variance
  CHECK(json.find("\"variance\":" + field) != std::string::npos);
}

TEST_CASE("study rejects bad inputs") {
  CHECK(run_cli("study mzi-coherent").exit_code == 2);  // no discrete model
  CHECK(run_cli("study mzi-single-photon --estimator magic").exit_code == 2);
  CHECK(run_cli("study mzi-single-photon --r 5000").exit_code == 2);
  CHECK(run_cli("study mzi-single-photon --mlist ,,").exit_code == 2);
  CHECK(run_cli("study mzi-single-photon --b 10").exit_code == 2);
}

TEST_CASE("bootstrap column appears when requested") {
  const CmdResult r =
      run_cli("study mzi-single-photon --mlist 60 --r 15 --b 150 --seed 5 --format csv --out cli_b.csv");
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp("cli_b.csv");
  CHECK(csv.find("p_value,bootstrap_var") != std::string::npos);
  CHECK(csv.find("# b=150") != std::string::npos);
}

TEST_CASE("posterior dump writes a density curve") {
  const CmdResult r = run_cli(
      "study mzi-single-photon --mlist 20 --r 10 --seed 3 --out cli_p.csv --dump-posterior cli_post.csv");
  REQUIRE(r.exit_code == 0);
  const std::string post = slurp("cli_post.csv");
  CHECK(post.find("phi,density") != std::string::npos);
  // 2048 grid rows plus the header block
  CHECK(lines_without_version(post).size() > 2048);
}

TEST_CASE("sweep traces a closed-form curve") {
  const CmdResult r =
      run_cli("sweep mzi-single-photon --param t --from 0 --to 1 --steps 11 --format csv --out cli_sweep.csv");
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp("cli_sweep.csv");
  CHECK(csv.find("t,f,h_sld") != std::string::npos);

  // the quantum information column reads 4 t^2 (1 - t^2): 0.75 at t = 0.5,
  // with its maximum at the balanced splitter
  std::stringstream ss(csv);
  std::string line;
  bool found = false;
  double best_h = -1.0, best_t = -1.0;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::stringstream fields(line);
    std::string tfield, ffield, hfield;
    std::getline(fields, tfield, ',');
    std::getline(fields, ffield, ',');
    std::getline(fields, hfield, ',');
    const double t = std::stod(tfield), h = std::stod(hfield);
    if (h > best_h) best_h = h, best_t = t;
    if (tfield == "0.5") {
      CHECK(std::abs(h - 0.75) < 1e-9);
      found = true;
    }
  }
  CHECK(found);
  CHECK(std::abs(best_t - 0.7) < 0.11);  // 11-point grid around 1/sqrt(2)

  CHECK(run_cli("sweep mzi-single-photon --param t --from 0 --to 1 --steps 0").exit_code == 2);
  CHECK(run_cli("sweep mzi-single-photon --param t --from 1 --to 1 --steps 5").exit_code == 2);
  CHECK(run_cli("sweep mzi-single-photon --param bogus --from 0 --to 1 --steps 5").exit_code == 2);
}

TEST_CASE("sweep over transmission reproduces the eta^N decay") {
  const CmdResult r = run_cli(
      "sweep noon-lossy n=3 --param eta --from 0.5 --to 1 --steps 6 --format csv --out cli_noon.csv");
  REQUIRE(r.exit_code == 0);
  std::stringstream ss(slurp("cli_noon.csv"));
  std::string line;
  std::vector<std::string> header;
  int fi_col = -1;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (fi_col < 0) {
      std::stringstream fields(line);
      std::string f;
      for (int i = 0; std::getline(fields, f, ','); ++i)
        if (f == "fi_postselected") fi_col = i;
      REQUIRE(fi_col > 0);
      continue;
    }
    std::stringstream fields(line);
    std::string f;
    double eta = 0.0;
    for (int i = 0; i <= fi_col; ++i) {
      std::getline(fields, f, ',');
      if (i == 0) eta = std::stod(f);
    }
    CHECK(std::abs(std::stod(f) - 9.0 * eta * eta * eta) < 1e-6);
  }
}

TEST_CASE("command line overrides the config file") {
  {
    std::ofstream cfg("cli_cfg.txt");
    cfg << "command=scenario\nscenario=mzi-single-photon\nt=0.5\nphi=1.0\nformat=csv\n";
  }
  const CmdResult r = run_cli("scenario --config cli_cfg.txt phi=2.0 --out cli_cfg_out.csv");
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp("cli_cfg_out.csv");
  CHECK(csv.find("# phi=2\n") != std::string::npos);  // CLI wins
  CHECK(csv.find("# t=0.5\n") != std::string::npos);  // config fills the rest

  // a config written by another command is refused
  CHECK(run_cli("study --config cli_cfg_out.csv").exit_code == 2);
}
