#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path;
  ScratchDir() : path(fs::temp_directory_path() / ("auglab_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

const fs::path& scratch() {
  static const ScratchDir dir;
  return dir.path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code = -1;
  std::string err;
};

Result cli(const std::string& args) {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + AUGLAB_CLI + "\" " + args + " 2> \"" + err.string() + "\" > /dev/null";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

std::string out_dir(const std::string& name) { return (scratch() / name).string(); }

std::string header_of(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string src(const std::string& rel) { return "\"" + testing::source_path(rel).string() + "\""; }

}  // namespace

TEST_CASE("check-properties passes on the default calibration") {
  const Result r = cli("--out " + out_dir("props") + " check-properties");
  CHECK(r.code == 0);
  const std::string report = slurp(scratch() / "props" / "properties.csv");
  CHECK(report.find("P5_design_composition_complementarity,1,") != std::string::npos);
  std::istringstream lines(report);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.substr(line.find(',') + 1, 2) == "1,");
  }
  CHECK(rows == 5);
}

TEST_CASE("error exit codes") {
  const fs::path bad = scratch() / "bad.params";
  std::ofstream(bad) << "g_floor = 0.5\nbogus_key = 1\n";
  Result r = cli("--params \"" + bad.string() + "\" --out " + out_dir("bad") + " optimize");
  CHECK(r.code == 11);
  CHECK(r.err.rfind("error kind=params code=11:", 0) == 0);
  CHECK(r.err.find("bogus_key") != std::string::npos);

  CHECK(cli("--out " + out_dir("x") + " optimize --no-such-flag").code == 2);
  CHECK(cli("--out " + out_dir("x")).code == 2);
  r = cli("--params /nonexistent/file.params --out " + out_dir("x") + " optimize");
  CHECK(r.code == 15);
  CHECK(r.err.rfind("error kind=io code=15:", 0) == 0);
  CHECK(cli("--out " + out_dir("x") + " regress --input /nonexistent.csv").code == 15);
  CHECK(cli("--out " + out_dir("x") + " optimize --share 1.5").code == 10);
  CHECK(cli("--out " + out_dir("x") + " optimize --labor-mode sometimes").code == 12);
  CHECK(cli("--out " + out_dir("x") + " optimize --statics").code == 0);
  // one line, machine-parseable
  r = cli("--out " + out_dir("x") + " wadi-score --responses /nonexistent.csv");
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("artifacts and manifest") {
  const std::string dir = out_dir("opt");
  REQUIRE(cli("--seed 3 --out " + dir + " optimize --share 0.8 --statics").code == 0);
  CHECK(header_of(fs::path(dir) / "optimize.csv").rfind("w1,w2,w3,w4,w5,profit,", 0) == 0);
  CHECK(fs::exists(fs::path(dir) / "statics.csv"));

  const nlohmann::json m = nlohmann::json::parse(slurp(fs::path(dir) / "manifest.json"));
  CHECK(m["command"] == "optimize");
  CHECK(m["seed"] == 3);
  CHECK(m["options"]["share"] == "0.8");
  CHECK(m["calibration"] == "calibration-default");
  REQUIRE(m["artifacts"].size() == 2);
  for (const auto& a : m["artifacts"]) {
    const fs::path file = fs::path(dir) / a["file"].get<std::string>();
    CHECK(fs::exists(file));
    CHECK(a["bytes"] == fs::file_size(file));
  }

  // the parameter file is hashed into the manifest
  const std::string pdir = out_dir("opt_params");
  REQUIRE(cli("--params " + src("config/calibration-default.params") + " --out " + pdir + " threshold").code == 0);
  const nlohmann::json pm = nlohmann::json::parse(slurp(fs::path(pdir) / "manifest.json"));
  CHECK(pm["params_hash_fnv1a64"].get<std::string>().size() == 16);
  CHECK(header_of(fs::path(pdir) / "threshold.csv") == "dimension,kind,share,bracket_lo,bracket_hi");
}

TEST_CASE("reruns are byte-identical") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"wedge", {"wedge.csv"}},
      {"frontier", {"frontier.csv"}},
      {"wadi-score --responses " + src("tests/fixtures/wadi_three_respondents.csv"),
       {"wadi_scores.csv", "wadi_warnings.csv"}},
  };
  int i = 0;
  for (const auto& [args, files] : runs) {
    const std::string a = out_dir("det_a" + std::to_string(i)), b = out_dir("det_b" + std::to_string(i));
    ++i;
    REQUIRE(cli("--seed 5 --out " + a + " " + args).code == 0);
    REQUIRE(cli("--seed 5 --out " + b + " " + args).code == 0);
    for (const auto& f : files) CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
    CHECK(slurp(fs::path(a) / "manifest.json") == slurp(fs::path(b) / "manifest.json"));
  }
}

TEST_CASE("econometrics pipeline through files") {
  const std::string dir = out_dir("synth");
  REQUIRE(cli("--params " + src("config/trap-calibration.params") + " --seed 1 --out " + dir + " synth --sectors 120")
              .code == 0);
  const std::string sectors = (fs::path(dir) / "sectors.csv").string();
  CHECK(header_of(sectors).rfind("sector_id,", 0) == 0);

  REQUIRE(cli("--out " + dir + " regress --input \"" + sectors + "\"").code == 0);
  const std::string reg = slurp(fs::path(dir) / "regression.csv");
  CHECK(reg.rfind("term,coefficient,robust_se,t_stat\n", 0) == 0);
  CHECK(reg.find("mqc_x_ln_tii,") != std::string::npos);

  REQUIRE(cli("--out " + dir + " crosstab --input \"" + sectors + "\" --correlate mqc,hcq,innov_share").code == 0);
  CHECK(fs::exists(fs::path(dir) / "crosstab.csv"));
  CHECK(fs::exists(fs::path(dir) / "correlations.csv"));

  REQUIRE(cli("--out " + dir + " bimodal --input \"" + sectors + "\"").code == 0);
  CHECK(fs::exists(fs::path(dir) / "bimodal.csv"));
  CHECK(cli("--out " + dir + " bimodal --input \"" + sectors + "\" --field nope").code == 12);
}

TEST_CASE("wadi-score options") {
  const std::string dir = out_dir("wadi");
  const std::string responses = src("tests/fixtures/wadi_three_respondents.csv");
  REQUIRE(cli("--out " + dir + " wadi-score --responses " + responses + " --composite theory").code == 0);
  const fs::path weights = scratch() / "weights.csv";
  std::ofstream(weights) << "dimension,weight\n1,1\n2,1\n3,2\n4,0\n5,1\n";
  CHECK(cli("--out " + dir + " wadi-score --responses " + responses + " --composite cfa --weights \"" +
            weights.string() + "\"")
            .code == 0);
  CHECK(cli("--out " + dir + " wadi-score --responses " + responses + " --composite cfa").code != 0);
  CHECK(cli("--out " + dir + " wadi-score --responses " + responses + " --norm-pool region").code == 12);
}

TEST_CASE("dynamics commands on the trap calibration") {
  const std::string dir = out_dir("trap");
  const std::string params = "--params " + src("config/trap-calibration.params");
  REQUIRE(cli(params + " --out " + dir + " phase").code == 0);
  const std::string svg = slurp(fs::path(dir) / "phase.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(header_of(fs::path(dir) / "steady_states.csv").rfind("ha,w1,w2,w3,w4,w5,stability,", 0) == 0);
  const std::string ss = slurp(fs::path(dir) / "steady_states.csv");
  CHECK(std::count(ss.begin(), ss.end(), '\n') == 4);
}
