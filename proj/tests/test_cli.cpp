#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "autocal/io.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("autocal_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args, const std::string& env = "") {
  const auto out = scratch() / "stdout.txt";
  const std::string cmd = env + " \"" AUTOCAL_CLI_PATH "\" " + args + " > \"" + out.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

std::string cfg(const std::string& name) { return "\"" + oracle::fixture(name) + "\""; }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("validate", "[cli]") {
  auto r = cli("validate " + cfg("example1"));
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("C6  FAIL"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("warning"));

  r = cli("validate " + cfg("example3"));
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("result: pass\n"));

  // h - OS_1 - d_n + b = 0.5
  const auto bad = scratch() / "bad_c3.json";
  std::ofstream(bad) << R"({"geometry": {"h": 6, "rho_max": 11, "v": 1, "b": 1},
      "layout": {"sensor_heights": [2, 5], "mark_positions": [10, 9, 8, 7, 6, 4.5]}})";
  r = cli("validate \"" + bad.string() + "\"");
  CHECK(r.code == 2);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("C3  FAIL"));
}

TEST_CASE("usage and parse errors exit 1", "[cli]") {
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("validate /nonexistent/config.json").code == 1);
  const auto junk = scratch() / "junk.json";
  std::ofstream(junk) << "{not json";
  CHECK(cli("validate \"" + junk.string() + "\"").code == 1);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("config directory from the environment", "[cli]") {
  const auto r = cli("validate example3.json", "AUTOCAL_CONFIG_DIR=\"" AUTOCAL_DATA_DIR "\"");
  CHECK(r.code == 0);
}

TEST_CASE("events", "[cli]") {
  const auto raw = scratch() / "raw.csv";
  CHECK(cli("events " + cfg("example1") + " --raw --csv \"" + raw.string() + "\"").code == 0);
  auto l = lines_of(slurp(raw));
  REQUIRE(l.size() == 13);
  CHECK(l[1] == "2.00,1,2,9.00,");

  const auto rect = scratch() / "rect.csv";
  CHECK(cli("events " + cfg("example1") + " --rectified --csv \"" + rect.string() + "\"").code == 0);
  l = lines_of(slurp(rect));
  REQUIRE(l.size() == 10);
  CHECK(l.back() == "10.00,6,1,1.00,1.00");

  std::ifstream in(rect);
  CHECK(autocal::io::read_events_csv(in, true) == autocal::rectified_events(oracle::load_design("example1")));

  const auto single = scratch() / "single.json";
  std::ofstream(single) << R"({"geometry": {"h": 3, "rho_max": 3, "v": 1, "b": 1},
      "layout": {"sensor_heights": [2], "mark_positions": [2]}})";
  const auto r = cli("events \"" + single.string() + "\"");
  CHECK(r.code == 0);
  CHECK(lines_of(r.out).size() == 2);

  const auto full = cli("events " + cfg("example3") + " --full-precision");
  CHECK_THAT(full.out, Catch::Matchers::ContainsSubstring("0.5,1,5,31.5,"));
}

TEST_CASE("simulate", "[cli]") {
  const auto t = scratch() / "t.csv";
  CHECK(cli("simulate " + cfg("autocal") + " --start 13 --stop 1 -o \"" + t.string() + "\"").code == 0);
  CHECK(lines_of(slurp(t)).size() == 27);

  const auto e = scratch() / "e.csv";
  CHECK(cli("simulate " + cfg("autocal") + " --start 5 --stop 5 -o \"" + e.string() + "\"").code == 0);
  CHECK(slurp(e) == std::string(autocal::io::kTraceCsvHeader) + "\n");

  const auto a = scratch() / "a.csv", b = scratch() / "b.csv";
  const std::string noisy = " --start 13 --stop 1 --scale 1.01 --noise 0.01 --seed 7 -o ";
  CHECK(cli("simulate " + cfg("autocal") + noisy + "\"" + a.string() + "\"").code == 0);
  CHECK(cli("simulate " + cfg("autocal") + noisy + "\"" + b.string() + "\"").code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("calibrate", "[cli]") {
  const auto t = scratch() / "scenario.csv";
  REQUIRE(cli("simulate " + cfg("autocal") + " --start 9.05 --stop 1 -o \"" + t.string() + "\"").code == 0);
  auto r = cli("calibrate " + cfg("autocal") + " --trace \"" + t.string() + "\"");
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("26 -> 11 -> 2 -> 1"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("rho: 7.50 m"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("stroke: 1.50 m"));

  // First two detections only.
  auto l = lines_of(slurp(t));
  const auto two = scratch() / "two.csv";
  std::ofstream(two) << l[0] << '\n' << l[1] << '\n' << l[2] << '\n';
  CHECK(cli("calibrate " + cfg("autocal") + " --trace \"" + two.string() + "\"").code == 4);

  const auto broken = scratch() / "broken.csv";
  std::ofstream(broken) << "t,encoder_reading\n0,0\n1,7.3\n";
  CHECK(cli("calibrate " + cfg("autocal") + " --trace \"" + broken.string() + "\"").code == 3);

  const auto json = scratch() / "result.json";
  CHECK(cli("calibrate " + cfg("autocal") + " --trace \"" + t.string() + "\" --json \"" + json.string() + "\"").code == 0);
  const auto j = autocal::io::json::parse(slurp(json));
  CHECK(j["rho"].get<double>() == 7.5);
}

TEST_CASE("optimize", "[cli]") {
  const auto out = scratch() / "opt.json";
  const auto rep = scratch() / "opt.csv";
  auto r = cli("optimize " + cfg("example2") + " --budget 200 -o \"" + out.string() + "\" --report \"" +
               rep.string() + "\"");
  CHECK(r.code == 0);
  CHECK(cli("validate \"" + out.string() + "\"").code == 0);
  CHECK(lines_of(slurp(rep)).front() == autocal::io::kOptimizeCsvHeader);

  const auto zero = scratch() / "zero.json";
  CHECK(cli("optimize " + cfg("example2") + " --budget 0 -o \"" + zero.string() + "\"").code == 0);
  const auto echoed = autocal::io::resolve_design(autocal::io::parse_config(slurp(zero)));
  CHECK(echoed == oracle::load_design("example2"));

  const auto constant = cli("optimize " + cfg("example1") + " --budget 5");
  CHECK(constant.code == 0);
  CHECK_THAT(constant.out, Catch::Matchers::ContainsSubstring("C6  FAIL"));

  CHECK(cli("optimize " + cfg("example1_layout")).code == 1);
}
