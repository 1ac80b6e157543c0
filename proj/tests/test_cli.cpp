#include "doctest.h"

#include "qmisdr/cli/commands.hpp"
#include "qmisdr/cli/config.hpp"
#include "qmisdr/synthetic.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

using namespace qmisdr;
using namespace qmisdr::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("qmisdr_cli_" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    out.push_back(line);
  }
  return out;
}

int run(const Section& s, const std::filesystem::path& out, unsigned threads = 1) {
  std::ostringstream err;
  return run_command(s, RunOptions{out, threads}, err);
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults fill in missing keys and sections") {
    const Section s = parse_section("[sdr]\nn = 50\n", "sdr", ".");
    CHECK(s.get_int("n", 2) == 50);
    CHECK(s.get_int("restarts", 1) == 10);
    CHECK(s.get_string("method") == "lsqmid-fp");
    const Section b = parse_section("[sdr]\nn = 50\n", "bench", ".");
    CHECK(b.get_int("n_train", 2) == 100);
  }
  SUBCASE("comments, whitespace and lists") {
    const Section s = parse_section("# c\n[illustrate]\n; other\n  sigmas =  0.5 , 2  \n", "illustrate", ".");
    CHECK(s.get_doubles("sigmas") == std::vector<double>{0.5, 2.0});
  }
  SUBCASE("unknown keys, sections and stray keys are rejected") {
    CHECK_THROWS_AS(parse_section("[sdr]\nrestart = 3\n", "sdr", "."), ConfigError);
    CHECK_THROWS_AS(parse_section("[bench]\nrestart = 3\n", "sdr", "."), ConfigError);
    CHECK_THROWS_AS(parse_section("[fit]\nn = 3\n", "sdr", "."), ConfigError);
    CHECK_THROWS_AS(parse_section("n = 3\n[sdr]\n", "sdr", "."), ConfigError);
  }
  SUBCASE("typed access validates values") {
    const Section s = parse_section("[sdr]\nn = ten\ntol = nan\nrecord_timing = maybe\nrestarts = 0\n", "sdr", ".");
    CHECK_THROWS_AS(s.get_int("n", 2), ConfigError);
    CHECK_THROWS_AS(s.get_double("tol"), ConfigError);
    CHECK_THROWS_AS(s.get_bool("record_timing"), ConfigError);
    CHECK_THROWS_AS(s.get_int("restarts", 1), ConfigError);
  }
  SUBCASE("relative paths resolve against the config directory") {
    const Section s = parse_section("[bench]\ncsv = data/b.csv\n", "bench", "/base");
    CHECK(*s.get_path("csv") == std::filesystem::path("/base/data/b.csv"));
  }
  SUBCASE("overrides and hashing") {
    Section s = parse_section("[sdr]\n", "sdr", ".");
    const std::string before = fnv1a_hex(s.canonical());
    CHECK(before.size() == 16);
    CHECK(fnv1a_hex(parse_section("[sdr]\n", "sdr", ".").canonical()) == before);
    s.set("seed", "5");
    CHECK(fnv1a_hex(s.canonical()) != before);
    CHECK_THROWS_AS(s.set("sead", "5"), ConfigError);
  }
  SUBCASE("FNV-1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_section("/nonexistent/qmisdr.ini", "sdr"), ConfigError);
  }
}

TEST_CASE("illustrate command") {
  const auto dir = scratch("illustrate");
  SUBCASE("one grid point and one trial give one row") {
    const Section s = parse_section("[illustrate]\nn = 100\ntrials = 1\ntheta_points = 1\n", "illustrate", ".");
    REQUIRE(run(s, dir) == kExitOk);
    const std::string text = slurp(dir / "illustrate.csv");
    CHECK(data_lines(text).size() == 1);
    CHECK(text.find("trial,theta,qmi_tilde,dqmi_lsqmid,qmi_lsqmi,dqmi_lsqmi_fd\n") != std::string::npos);
    CHECK(text.rfind("# tool: qmi-sdr", 0) == 0);
    CHECK(text.find("# config_hash: " + fnv1a_hex(s.canonical())) != std::string::npos);
  }
  SUBCASE("byte-identical reruns, also across thread counts") {
    const Section s = parse_section("[illustrate]\nn = 120\ntrials = 3\ntheta_points = 4\n", "illustrate", ".");
    REQUIRE(run(s, dir / "a") == kExitOk);
    REQUIRE(run(s, dir / "b") == kExitOk);
    REQUIRE(run(s, dir / "c", 3) == kExitOk);
    const std::string a = slurp(dir / "a" / "illustrate.csv");
    CHECK(data_lines(a).size() == 12);
    CHECK(a == slurp(dir / "b" / "illustrate.csv"));
    CHECK(a == slurp(dir / "c" / "illustrate.csv"));
  }
}

TEST_CASE("sdr command") {
  const auto dir = scratch("sdr");
  const std::string small = "[sdr]\ndataset = A\nn = 80\nrestarts = 2\nmax_iters = 5\n";
  SUBCASE("one trial gives one orthonormal record and a summary") {
    REQUIRE(run(parse_section(small + "trials = 1\n", "sdr", "."), dir) == kExitOk);
    const std::string json = slurp(dir / "sdr_trials.json");
    CHECK(json.find("\"_meta\"") != std::string::npos);
    CHECK(json.find("\"status\": \"ok\"") != std::string::npos);
    CHECK(json.find("wall_time_s") == std::string::npos);
    CHECK(data_lines(slurp(dir / "sdr_summary.csv")).size() == 1);
  }
  SUBCASE("byte-identical reruns") {
    const Section s = parse_section(small + "trials = 2\n", "sdr", ".");
    REQUIRE(run(s, dir / "a") == kExitOk);
    REQUIRE(run(s, dir / "b", 2) == kExitOk);
    CHECK(slurp(dir / "a" / "sdr_trials.json") == slurp(dir / "b" / "sdr_trials.json"));
    CHECK(slurp(dir / "a" / "sdr_summary.csv") == slurp(dir / "b" / "sdr_summary.csv"));
  }
  SUBCASE("timing is opt-in") {
    REQUIRE(run(parse_section(small + "trials = 1\nrecord_timing = true\n", "sdr", "."), dir) == kExitOk);
    CHECK(slurp(dir / "sdr_trials.json").find("wall_time_s") != std::string::npos);
  }
  SUBCASE("config errors exit with 2") {
    CHECK_THROWS_AS(parse_section("[sdr]\nn = 1\nn = 2\n", "sdr", "."), ConfigError);
    CHECK(run(parse_section("[sdr]\ndataset = Z\n", "sdr", "."), dir) == kExitConfig);
    CHECK(run(parse_section("[sdr]\nmethod = newton\n", "sdr", "."), dir) == kExitConfig);
    CHECK(run(parse_section("[sdr]\ndataset = C\nmethod = lsqmid-grad1d\n", "sdr", "."), dir) == kExitConfig);
    CHECK(run(parse_section("[sdr]\ncsv = missing.csv\ndz = 1\n", "sdr", dir), dir) == kExitConfig);
  }
}

TEST_CASE("bench command") {
  const auto dir = scratch("bench");
  {
    std::ofstream out(dir / "b.csv");
    write_csv(out, generate({SyntheticName::B, 150, 3, 0.0}).data);
  }
  SUBCASE("single dz, single trial, single method give one row") {
    const Section s = parse_section(
        "[bench]\ncsv = b.csv\nn_train = 60\ntrials = 1\ndz = 1\nmethods = lsqmid-fp\nrestarts = 1\nmax_iters = 5\n",
        "bench", dir);
    REQUIRE(run(s, dir) == kExitOk);
    const auto rows = data_lines(slurp(dir / "bench_rmse.csv"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].rfind("0,1,lsqmid-fp,", 0) == 0);
  }
  SUBCASE("byte-identical reruns") {
    const Section s = parse_section(
        "[bench]\ncsv = b.csv\nn_train = 60\ntrials = 2\nrestarts = 1\nmax_iters = 5\n", "bench", dir);
    REQUIRE(run(s, dir / "a") == kExitOk);
    REQUIRE(run(s, dir / "b", 2) == kExitOk);
    CHECK(slurp(dir / "a" / "bench_rmse.csv") == slurp(dir / "b" / "bench_rmse.csv"));
    CHECK(data_lines(slurp(dir / "a" / "bench_rmse.csv")).size() == 4);
  }
  SUBCASE("missing CSV and bad sizes exit with 2") {
    CHECK(run(parse_section("[bench]\ncsv = nope.csv\n", "bench", dir), dir) == kExitConfig);
    CHECK(run(parse_section("[bench]\n", "bench", dir), dir) == kExitConfig);
    CHECK(run(parse_section("[bench]\ncsv = b.csv\nn_train = 150\n", "bench", dir), dir) == kExitConfig);
    CHECK(run(parse_section("[bench]\ncsv = b.csv\ndz = 11\n", "bench", dir), dir) == kExitConfig);
  }
}
