#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("ciasim-cli-test-" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = scratch_dir() / ("stdout." + std::to_string(counter));
  const fs::path err = scratch_dir() / ("stderr." + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string("'") + CIASIM_CLI_PATH + "' " + args +
                          " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  RunResult res;
  res.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// One shared tiny channel file for the codec-facing subcommands.
fs::path tiny_channel_file() {
  static fs::path path = [] {
    fs::path p = scratch_dir() / "tiny-channel.json";
    RunResult r = run_cli("gen-channel --M 2 --K 2 --J 1 --seed 5 --out '" +
                          p.string() + "'");
    REQUIRE(r.code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("version and help") {
  RunResult v = run_cli("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find("ciasim 0.1.0") != std::string::npos);

  RunResult h = run_cli("--help");
  CHECK(h.code == 0);
  CHECK(h.out.find("gen-channel") != std::string::npos);
  CHECK(h.out.find("dof-sweep") != std::string::npos);
}

TEST_CASE("argument problems exit with the config code") {
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("params --n 1 --P 10").code == 2);  // missing --channel
  CHECK(run_cli("gen-channel --M 2 --K 2 --J 1 --bogus").code == 2);
  CHECK(run_cli("").code == 2);  // a subcommand is required
}

TEST_CASE("gen-channel writes audited, reproducible draws") {
  const fs::path a = scratch_dir() / "chan-a.json";
  const fs::path b = scratch_dir() / "chan-b.json";
  RunResult ra = run_cli("gen-channel --M 2 --K 2 --J 2 --seed 42 --out '" +
                         a.string() + "'");
  CHECK(ra.code == 0);
  CHECK(ra.out.find(a.string()) != std::string::npos);
  RunResult rb = run_cli("gen-channel --M 2 --K 2 --J 2 --seed 42 --out '" +
                         b.string() + "'");
  CHECK(rb.code == 0);
  CHECK(slurp(a) == slurp(b));

  json doc = json::parse(slurp(a));
  CHECK(doc["format"] == "ciasim-channel/1");
  CHECK(doc["config"]["M"] == 2);
  CHECK(doc["config"]["J"] == json::array({2, 2}));

  // Without --out the document goes to stdout.
  RunResult direct = run_cli("gen-channel --M 2 --K 3 --J 1 --seed 1");
  CHECK(direct.code == 0);
  json doc2 = json::parse(direct.out);
  CHECK(doc2["config"]["K"] == 3);
}

TEST_CASE("params reports the codec operating point") {
  RunResult r = run_cli("params --channel '" + tiny_channel_file().string() +
                        "' --n 1 --eps 0.05 --P 2e4");
  REQUIRE(r.code == 0);
  json doc = json::parse(r.out);
  CHECK(doc["format"] == "ciasim-params/1");
  CHECK(doc["xi"] == 6);
  CHECK(doc["Q"] == 2);
  CHECK(doc["q_overridden"] == false);
  CHECK(doc["total_streams"] == 4);
  CHECK(doc["L"] == json::array({1, 1}));
  CHECK(doc["kappa"] == json::array({4, 4}));
  CHECK(doc["nominal_dof"]["limit"]["value"] == "2/3");
  CHECK(doc["reference_dof"]["complex"]["value"] == "4/3");
  CHECK(doc["reference_dof"]["real"]["value"] == "8/7");

  RunResult rq = run_cli("params --channel '" + tiny_channel_file().string() +
                         "' --n 1 --eps 0.05 --P 2e4 --q-override 5");
  REQUIRE(rq.code == 0);
  json docq = json::parse(rq.out);
  CHECK(docq["Q"] == 5);
  CHECK(docq["q_overridden"] == true);
}

TEST_CASE("infeasible power exits 3 and leaves no file behind") {
  const fs::path out = scratch_dir() / "params-infeasible.json";
  RunResult r = run_cli("params --channel '" + tiny_channel_file().string() +
                        "' --n 1 --eps 0.05 --P 0.5 --out '" + out.string() +
                        "'");
  CHECK(r.code == 3);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("missing channel file exits 2") {
  CHECK(run_cli("params --channel /nonexistent/ch.json --n 1 --P 10").code ==
        2);
}

TEST_CASE("align-check audits the headline configuration") {
  RunResult r =
      run_cli("align-check --M 2 --K 2 --J 2,2 --n 2,3 --r 1 --state 1");
  REQUIRE(r.code == 0);
  json doc = json::parse(r.out);
  CHECK(doc["ok"] == true);
  CHECK(doc["favorite"]["count"] == 32);
  CHECK(doc["favorite"]["disjoint"] == true);
  REQUIRE(doc["interference"].size() == 1);
  CHECK(doc["interference"][0]["interferer"] == 2);
  CHECK(doc["interference"][0]["box_count"] == 144);
  CHECK(doc["interference"][0]["kappa"] == 144);
  CHECK(doc["interference"][0]["exact_union"] == 126);
  CHECK(doc["interference"][0]["contained"] == true);
  CHECK(doc["total_observed"] == 176);

  CHECK(run_cli("align-check --M 2 --K 2 --J 2,2 --n 2 --r 3 --state 1")
            .code == 2);
}

TEST_CASE("bounds audit reports before failing") {
  RunResult ok = run_cli("bounds --M 2 --K 2 --profile 0.5,0.5");
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["ok"] == true);

  const fs::path out = scratch_dir() / "bounds-bad.json";
  RunResult bad =
      run_cli("bounds --M 2 --K 2 --profile 1,1 --out '" + out.string() + "'");
  CHECK(bad.code == 4);
  REQUIRE(fs::exists(out));  // the report itself is still written
  json doc = json::parse(slurp(out));
  CHECK(doc["ok"] == false);
  CHECK(doc["aggregate_slack"].get<double>() == doctest::Approx(-2.0));
}

TEST_CASE("constellation summary and CSV point list") {
  const fs::path csv = scratch_dir() / "points.csv";
  RunResult r = run_cli("constellation --channel '" +
                        tiny_channel_file().string() +
                        "' --n 1 --eps 0.05 --P 1e6 --q-override 2 --r 1 "
                        "--state 1 --csv '" +
                        csv.string() + "'");
  REQUIRE(r.code == 0);
  json doc = json::parse(r.out);
  CHECK(doc["points"] == 21609);
  CHECK(doc["favorite_digits"] == 2);
  CHECK(doc["merged_digits"] == 4);
  CHECK(doc["Q"] == 2);
  CHECK(doc["min_distance"].get<double>() > 0.0);

  const std::string text = slurp(csv);
  CHECK(text.rfind("# ciasim-constellation/1", 0) == 0);
  CHECK(text.find("index,value,favorite_part\n") != std::string::npos);
  CHECK(count_lines(text) == 21609 + 2);
  CHECK(text.find("\n0,") != std::string::npos);
}

TEST_CASE("simulate runs a sweep from a config file") {
  const fs::path cfg = scratch_dir() / "sweep.json";
  spill(cfg, R"({
    "scheme": "x", "M": 2, "K": 2, "J": [1, 1], "n": 1,
    "eps": 0.05, "P_grid": [2e4], "trials_per_P": 2,
    "symbols_per_trial": 100, "seed": 7, "noise_stddev": 0.0, "threads": 1
  })");

  const fs::path rep1 = scratch_dir() / "rep1.json";
  const fs::path rep2 = scratch_dir() / "rep2.json";
  RunResult r1 = run_cli("simulate --config '" + cfg.string() + "' --out '" +
                         rep1.string() + "'");
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("sweep: 1 power points") != std::string::npos);
  RunResult r2 = run_cli("simulate --config '" + cfg.string() + "' --out '" +
                         rep2.string() + "'");
  REQUIRE(r2.code == 0);
  CHECK(slurp(rep1) == slurp(rep2));

  json doc = json::parse(slurp(rep1));
  CHECK(doc["format"] == "ciasim-report/1");
  REQUIRE(doc["rows"].size() == 1);
  CHECK(doc["rows"][0]["ser"].get<double>() == 0.0);
  CHECK(doc["rows"][0]["Q"] == 2);
  CHECK(doc["rows"][0].contains("half_log2P"));
  CHECK(doc["nominal_dof"]["limit"] == "2/3");
  CHECK(doc["bounds"]["ok"] == true);
  CHECK_FALSE(doc.contains("fit"));

  // A seed override lands in the echoed config and changes the draw.
  RunResult r3 = run_cli("simulate --config '" + cfg.string() + "' --seed 9");
  REQUIRE(r3.code == 0);
  json doc3 = json::parse(r3.out);
  CHECK(doc3["config"]["seed"] == 9);
  CHECK(doc3["rows"][0]["dmin"].get<double>() !=
        doc["rows"][0]["dmin"].get<double>());
}

TEST_CASE("bad sweep configs exit 2 without partial output") {
  const fs::path cfg = scratch_dir() / "bad-sweep.json";
  spill(cfg, R"({"scheme":"x","M":2,"K":2,"n":1,"P_grid":[1e4],"bogus":true})");
  const fs::path out = scratch_dir() / "bad-rep.json";
  RunResult r = run_cli("simulate --config '" + cfg.string() + "' --out '" +
                        out.string() + "'");
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("dof-sweep adds the slope fit") {
  const fs::path cfg = scratch_dir() / "fit-sweep.json";
  spill(cfg, R"({
    "scheme": "x", "M": 2, "K": 2, "n": 1, "q_override": 2,
    "eps": 0.05, "P_grid": [1e4, 1e5, 1e6], "trials_per_P": 1,
    "symbols_per_trial": 50, "seed": 2, "noise_stddev": 0.0, "threads": 1
  })");
  const fs::path csv = scratch_dir() / "fit.csv";
  RunResult r = run_cli("dof-sweep --config '" + cfg.string() + "' --csv '" +
                        csv.string() + "'");
  REQUIRE(r.code == 0);
  json doc = json::parse(r.out);
  REQUIRE(doc.contains("fit"));
  CHECK(doc["fit"]["points"] == 3);
  // Q is pinned, the channel noiseless: every row decodes the same bit
  // count, so the fitted slope collapses to zero.
  CHECK(std::abs(doc["fit"]["dof"].get<double>()) < 1e-9);

  const std::string text = slurp(csv);
  CHECK(text.find("P,half_log2P,Q,") != std::string::npos);
  CHECK(count_lines(text) == 5);
}

TEST_CASE("hybrid report covers precoding and the ladder") {
  RunResult r = run_cli("hybrid --M 2 --JM 2 --n 1 --seed 5 --eps 0.49 --P 1e7");
  REQUIRE(r.code == 0);
  json doc = json::parse(r.out);
  CHECK(doc["format"] == "ciasim-hybrid/1");
  CHECK(doc["Q"] == 2);
  CHECK(doc["xi"] == 5);
  CHECK(doc["total_streams"] == 3);
  CHECK(doc["complement_rank"] == 2);
  CHECK(doc["clean_check"]["ok"] == true);
  CHECK(doc["clean_check"]["max_leak_ratio"].get<double>() < 1e-9);
  REQUIRE(doc["receivers"].size() == 3);  // one zero-forced + two states
  CHECK(doc["receivers"][0]["points"] == 9);
  CHECK(doc["receivers"][1]["points"] == 7203);
  CHECK(doc["nominal_dof"]["limit"]["value"] == "3/5");
  CHECK(doc["reference_dof"]["value"] == "3/2");
  for (const auto& rc : doc["receivers"])
    CHECK(rc["min_distance"].get<double>() > 0.0);
}

TEST_CASE("json error reporting") {
  RunResult r = run_cli("--json-errors params --channel /nonexistent/ch.json "
                        "--n 1 --P 10");
  CHECK(r.code == 2);
  json err = json::parse(r.err);
  CHECK(err["error"]["type"] == "config");
  CHECK_FALSE(err["error"]["message"].get<std::string>().empty());
}
