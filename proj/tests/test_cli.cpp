#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("steinmd_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch() / "stdout.txt";
  const std::string cmd = env + " \"" STEINMD_CLI "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          (scratch() / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

std::string config(const std::string& name, const json& j) {
  const fs::path p = scratch() / (name + ".json");
  std::ofstream(p) << j.dump();
  return "--config \"" + p.string() + "\"";
}

std::string shipped(const std::string& name) {
  return std::string("--config \"") + STEINMD_SOURCE_DIR "/configs/" + name + "\"";
}

}  // namespace

TEST_CASE("bounds: triangle regime and b_N") {
  const Run r = run("bounds " + shipped("triangle_bounds.json"));
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["regime"] == "3");
  CHECK(j.contains("version"));
  CHECK(j["config"]["N"] == 100);
  for (const auto& pt : j["points"]) {
    const double z = pt["z"];
    CHECK(pt["subgraph"]["details"]["b_N"].get<double>() == doctest::Approx((1 + z) / std::sqrt(3000.0)).epsilon(1e-12));
  }
}

TEST_CASE("bounds: dependency graph rate and CSV") {
  const fs::path csv = scratch() / "bounds.csv";
  const Run r = run("bounds " + shipped("depgraph_direct.json") + " --csv \"" + csv.string() + "\"");
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["be_rate"].get<double>() == doctest::Approx(0.28284).epsilon(1e-5));
  CHECK(j["points"][2]["depgraph"]["valid"] == false);
  const std::string text = slurp(csv);
  CHECK(text.rfind("z,", 0) == 0);
}

TEST_CASE("config errors exit 2") {
  CHECK(run("bounds " + config("badpat", {{"kind", "subgraph"}, {"N", 10}, {"p", 0.3}, {"pattern", "v=3; edges=1-1"}})).code == 2);
  CHECK(run("bounds " + config("badp", {{"kind", "subgraph"}, {"N", 10}, {"p", 1.5}, {"pattern", "triangle"}})).code == 2);
  CHECK(run("bounds " + config("unknown", {{"kind", "subgraph"}, {"N", 10}, {"p", 0.3}, {"colour", 1}})).code == 2);
  CHECK(run("bounds --config /nonexistent/x.json").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("bounds").code == 2);
  CHECK(run("bounds " + shipped("triangle_bounds.json") + " --z-grid 3:1:0.5").code == 2);
  CHECK(run("bounds " + shipped("triangle_bounds.json") + " --d0 -1").code == 2);
  const std::string err = slurp(scratch() / "stderr.txt");
  CHECK(json::parse(err)["exit_code"] == 2);
}

TEST_CASE("resource errors exit 3") {
  const auto big = config("big", {{"kind", "subgraph"}, {"N", 30}, {"p", 0.3}, {"pattern", "triangle"}});
  CHECK(run("enumerate " + big + " --cap 100").code == 3);
  CHECK(run("oracle " + big).code == 3);
}

TEST_CASE("assertion failure exits 1") {
  // four pair draws, none of which moves the chosen copy
  const Run r = run("pair-check " + config("weak", {{"kind", "subgraph"}, {"N", 6}, {"p", 0.5}, {"pattern", "triangle"},
                                                   {"pair_draws", 4}, {"seed", 5}}));
  CHECK(r.code == 1);
  CHECK(json::parse(r.out)["pass"] == false);
}

TEST_CASE("pair-check on the N=8 triangle") {
  const Run r = run("pair-check " + shipped("pair_triangle_n8.json") + " --threads 2");
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["pair"]["lambda"].get<double>() == doctest::Approx(1.0 / 56));
  CHECK(j["pair"]["slope"].get<double>() == doctest::Approx(1.0 / 56).epsilon(0.05));
  CHECK(j["pass"] == true);
}

TEST_CASE("pair-check on local fields") {
  const Run iid = run("pair-check " + config("iid", {{"kind", "local"},
                                                     {"generator", {{"kind", "iid"}, {"n", 100}}},
                                                     {"pair_draws", 100000}}));
  REQUIRE(iid.code == 0);
  CHECK(json::parse(iid.out)["pair"]["slope"].get<double>() == doctest::Approx(0.01).epsilon(0.05));
  const Run ms = run("pair-check " + config("ms", {{"kind", "local"},
                                                   {"generator", {{"kind", "m_dependent_moving_sum"}, {"n", 100}, {"m", 1}}},
                                                   {"pair_draws", 100000}}));
  REQUIRE(ms.code == 0);
  const auto j = json::parse(ms.out)["pair"];
  CHECK(std::abs(j["intercept"].get<double>()) <= 3 * j["intercept_se"].get<double>());
}

TEST_CASE("enumerate and oracle") {
  const auto k4 = config("k4", {{"kind", "subgraph"}, {"N", 4}, {"p", 0.5}, {"pattern", "2-path"}});
  const Run e = run("enumerate " + k4);
  REQUIRE(e.code == 0);
  CHECK(json::parse(e.out)["count"] == 12);
  const Run o = run("oracle " + shipped("oracle_triangle_n4.json") + " --drift");
  REQUIRE(o.code == 0);
  const auto j = json::parse(o.out);
  CHECK(j["pass"] == true);
}

TEST_CASE("verify warns on thin tails and writes artifacts") {
  const fs::path out = scratch() / "thin";
  const Run r = run("verify --quiet " + shipped("triangle_verify.json") + " --reps 500 --z-grid 0:3:1 --out \"" +
                    out.string() + "\"");
  REQUIRE(r.code <= 1);
  const auto j = json::parse(r.out);
  bool warned = false;
  for (const auto& w : j["warnings"]) warned |= w["warning"] == "insufficient exceedances";
  CHECK(warned);
  CHECK(fs::exists(out / "curve.csv"));
  CHECK(json::parse(slurp(out / "report.json"))["command"] == "verify");
}

TEST_CASE("normal oracle verify passes") {
  const fs::path out = scratch() / "normal";
  const Run r = run("verify --quiet " + shipped("normal_oracle.json") + " --reps 200000 --out \"" + out.string() + "\"");
  CHECK(r.code == 0);
}

TEST_CASE("default output directory comes from the environment") {
  const fs::path dir = scratch() / "envdir";
  const Run r = run("verify --quiet " + shipped("normal_oracle.json") + " --reps 2000",
                    "STEINMD_OUT_DIR=\"" + dir.string() + "\"");
  CHECK(r.code <= 1);
  CHECK(fs::exists(dir / "curve.csv"));
}

TEST_CASE("results do not depend on threads") {
  const fs::path a = scratch() / "t1", b = scratch() / "t3";
  const std::string base = "verify --quiet " + shipped("triangle_verify.json") + " --reps 20000";
  REQUIRE(run(base + " --threads 1 --out \"" + a.string() + "\"").code <= 1);
  REQUIRE(run(base + " --threads 3 --out \"" + b.string() + "\"").code <= 1);
  CHECK(slurp(a / "curve.csv") == slurp(b / "curve.csv"));
}

TEST_CASE("version flag") {
  const Run r = run("--version");
  CHECK(r.code == 0);
  CHECK(r.out.find("0.1.0") != std::string::npos);
}
