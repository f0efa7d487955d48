#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"

#include "ciasim/channel.hpp"
#include "ciasim/errors.hpp"
#include "ciasim/sim.hpp"

using namespace ciasim;
namespace fs = std::filesystem;

namespace {

SweepConfig tiny_sweep() {
  SweepConfig cfg;
  cfg.scheme = "x";
  cfg.dims = Dims{2, 2, {1, 1}};
  cfg.field = Field::Real;
  cfg.n_list = {1, 1};
  cfg.eps = 0.05;
  cfg.P_grid = {2.0e4};
  cfg.trials_per_P = 2;
  cfg.symbols_per_trial = 100;
  cfg.seed = 7;
  cfg.noise_stddev = 0.0;
  cfg.threads = 1;
  return cfg;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ciasim-sim-test-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("pairwise error bound") {
  CHECK(pe_bound(4.0, 1.0) == doctest::Approx(0.0227501).epsilon(1e-4));
  CHECK(pe_bound(0.0, 1.0) == doctest::Approx(0.5));
  CHECK(pe_bound(1.0, 0.0) == 0.0);
  CHECK(pe_bound(0.0, 0.0) == doctest::Approx(0.5));
  CHECK(pe_bound(2.0, 1.0) > pe_bound(4.0, 1.0));
  CHECK_THROWS_AS((void)pe_bound(-1.0, 1.0), ConfigError);
}

TEST_CASE("slope estimation is exact on synthetic lines") {
  std::vector<SweepRow> rows;
  for (int i = 0; i < 5; ++i) {
    SweepRow row;
    row.x_axis = 3.0 + 2.0 * i;
    row.bits_ok = 1.0 + 0.75 * row.x_axis;
    row.ser = 0.0;
    rows.push_back(row);
  }
  int used = 0;
  CHECK(estimate_dof(rows, 1e-2, &used) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(used == 5);

  // The gate removes unreliable rows from the fit.
  rows[4].ser = 0.9;
  rows[4].bits_ok = 0.0;
  CHECK(estimate_dof(rows, 1e-2, &used) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(used == 4);

  rows[2].ser = 0.9;
  rows[3].ser = 0.9;
  CHECK_THROWS_AS((void)estimate_dof(rows, 1e-2, nullptr), InfeasibleError);

  std::vector<SweepRow> flat(3);
  for (auto& row : flat) {
    row.x_axis = 1.0;
    row.ser = 0.0;
  }
  CHECK_THROWS_AS((void)estimate_dof(flat, 1e-2, nullptr), InfeasibleError);
}

TEST_CASE("outer bound audit") {
  std::vector<double> tight{2.0 / 3.0, 2.0 / 3.0};
  BoundCheck a = check_outer_bounds(tight, 2, 2);
  CHECK(a.ok);
  CHECK(a.rotation_slack[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(a.rotation_slack[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(a.aggregate_slack == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<double> greedy{1.0, 1.0};
  BoundCheck b = check_outer_bounds(greedy, 2, 2);
  CHECK_FALSE(b.ok);
  CHECK(b.rotation_slack[0] == doctest::Approx(-1.0));
  CHECK(b.aggregate_slack == doctest::Approx(-2.0));

  // One receiver per antenna plus a 1/M ladder share: only the rotation
  // that weights the ladder receiver is met, and exactly so.
  std::vector<double> ladder{1.0, 1.0, 1.0 / 3.0};
  BoundCheck c = check_outer_bounds(ladder, 3, 3);
  CHECK_FALSE(c.ok);
  CHECK(c.rotation_slack[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.rotation_slack[0] < 0.0);

  CHECK_THROWS_AS((void)check_outer_bounds(tight, 2, 3), ConfigError);
  std::vector<double> bad{0.5, -0.1};
  CHECK_THROWS_AS((void)check_outer_bounds(bad, 2, 2), ConfigError);
}

TEST_CASE("noiseless sweep decodes every stream") {
  SweepConfig cfg = tiny_sweep();
  SimReport rep = run_sweep(cfg, false);
  REQUIRE(rep.rows.size() == 1);
  const SweepRow& row = rep.rows[0];
  CHECK(row.Q == 2);
  CHECK(row.points == 21609);
  CHECK(row.ser == 0.0);
  CHECK(row.ser_stderr == 0.0);
  CHECK(row.dmin > 0.0);
  CHECK(row.pe == 0.0);
  CHECK(row.x_axis == doctest::Approx(0.5 * std::log2(2.0e4)));
  CHECK(row.bits_ok == doctest::Approx(4.0 * std::log2(3.0)).epsilon(1e-12));

  CHECK(rep.nominal_limit == Rational(2, 3));
  CHECK(rep.reference == Rational(4, 3));
  REQUIRE(rep.profile_limit.size() == 2);
  CHECK(rep.profile_limit[0] == doctest::Approx(1.0 / 3.0));
  CHECK(rep.bounds.ok);
  CHECK(rep.nominal_at_eps == doctest::Approx(4.0 * 0.95 / 6.05).epsilon(1e-12));
  CHECK_FALSE(rep.fitted_dof.has_value());
}

TEST_CASE("complex sweeps use the full log2 axis") {
  SweepConfig cfg = tiny_sweep();
  cfg.field = Field::Complex;
  cfg.eps = 0.49;
  cfg.trials_per_P = 1;
  cfg.symbols_per_trial = 50;
  SimReport rep = run_sweep(cfg, false);
  const SweepRow& row = rep.rows[0];
  CHECK(row.Q == 2);
  CHECK(row.x_axis == doctest::Approx(std::log2(2.0e4)));
  CHECK(row.ser == 0.0);
  CHECK(rep.nominal_at_eps ==
        doctest::Approx(4.0 * 0.51 / 6.98).epsilon(1e-12));
}

TEST_CASE("hybrid sweep reports the ladder split") {
  SweepConfig cfg;
  cfg.scheme = "hybrid";
  cfg.hyb_M = 2;
  cfg.hyb_JM = 2;
  cfg.hyb_n = 1;
  cfg.eps = 0.49;
  cfg.P_grid = {1.0e7};
  cfg.trials_per_P = 2;
  cfg.symbols_per_trial = 100;
  cfg.seed = 11;
  cfg.noise_stddev = 0.0;
  cfg.threads = 1;

  SimReport rep = run_sweep(cfg, false);
  const SweepRow& row = rep.rows[0];
  CHECK(row.Q == 2);
  CHECK(row.points == 7203);
  CHECK(row.ser == 0.0);
  CHECK(row.bits_ok == doctest::Approx(3.0 * std::log2(3.0)).epsilon(1e-12));
  CHECK(row.x_axis == doctest::Approx(0.5 * std::log2(1.0e7)));

  CHECK(rep.nominal_limit == Rational(3, 5));
  CHECK(rep.reference == Rational(3, 2));
  REQUIRE(rep.profile_limit.size() == 2);
  CHECK(rep.profile_limit[0] == doctest::Approx(0.4));
  CHECK(rep.profile_limit[1] == doctest::Approx(0.2));
  CHECK(rep.bounds.ok);  // the finite-n profile sits inside the region
}

TEST_CASE("reports are bit-identical across reruns") {
  SweepConfig cfg = tiny_sweep();
  cfg.noise_stddev = 0.5;
  cfg.trials_per_P = 3;
  SimReport a = run_sweep(cfg, false);
  SimReport b = run_sweep(cfg, false);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(report_to_csv(a) == report_to_csv(b));

  cfg.seed = 8;
  SimReport c = run_sweep(cfg, false);
  CHECK(report_to_json(a) != report_to_json(c));
}

TEST_CASE("channel modes control redraw granularity") {
  SweepConfig cfg = tiny_sweep();
  cfg.trials_per_P = 3;
  cfg.channel_mode = ChannelMode::PerTrial;
  SimReport per_trial = run_sweep(cfg, false);
  cfg.channel_mode = ChannelMode::PerPoint;
  SimReport per_point = run_sweep(cfg, false);
  // Same seed: the per-point run reuses trial 0's channel, so its dmin can
  // only be at least the per-trial minimum.
  CHECK(per_point.rows[0].dmin >= per_trial.rows[0].dmin);

  CHECK(to_string(ChannelMode::PerTrial) == "per-trial");
  CHECK(channel_mode_from_string("per-point") == ChannelMode::PerPoint);
  CHECK_THROWS_AS((void)channel_mode_from_string("sometimes"), ConfigError);
}

TEST_CASE("file mode pins the channel exactly") {
  TempDir tmp;
  ChannelConfig cc;
  cc.dims = Dims{2, 2, {1, 1}};
  cc.seed = 99;
  ChannelRealization ch = sample_channel(cc);
  const std::string path = (tmp.path / "chan.json").string();
  save_channel(ch, path);

  SweepConfig cfg = tiny_sweep();
  cfg.channel_mode = ChannelMode::File;
  cfg.channel_file = path;
  cfg.trials_per_P = 3;
  SimReport a = run_sweep(cfg, false);
  SimReport b = run_sweep(cfg, false);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(a.rows[0].ser == 0.0);

  // The file's channel must match the sweep dimensions.
  ChannelConfig other;
  other.dims = Dims{2, 2, {2, 2}};
  other.seed = 1;
  const std::string path2 = (tmp.path / "chan2.json").string();
  save_channel(sample_channel(other), path2);
  cfg.channel_file = path2;
  CHECK_THROWS_AS((void)run_sweep(cfg, false), ConfigError);
}

TEST_CASE("symbol errors fade as power grows") {
  SweepConfig cfg = tiny_sweep();
  cfg.P_grid = {1.0e4, 1.0e7, 1.0e10};
  cfg.q_override = 2;
  cfg.noise_stddev = 1.0e-4;
  cfg.trials_per_P = 4;
  cfg.symbols_per_trial = 500;
  cfg.seed = 3;
  SimReport rep = run_sweep(cfg, false);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].ser > 0.01);
  CHECK(rep.rows[1].ser < rep.rows[0].ser);
  CHECK(rep.rows[2].ser <= rep.rows[1].ser);
  CHECK(rep.rows[2].ser == 0.0);
  CHECK(rep.rows[2].bits_ok ==
        doctest::Approx(4.0 * std::log2(3.0)).epsilon(1e-12));
  // Fixed Q: the gap scales exactly with sqrt(P) per channel.
  CHECK(rep.rows[2].dmin > rep.rows[0].dmin);
}

TEST_CASE("sweep config JSON is strict") {
  const std::string good = R"({
    "scheme": "x", "M": 2, "K": 2, "J": [1, 1], "n": 2,
    "eps": 0.1, "P_grid": [100.0, 1000.0], "seed": 5, "threads": 1
  })";
  SweepConfig cfg = sweep_config_from_json(good);
  CHECK(cfg.dims.M == 2);
  REQUIRE(cfg.n_list.size() == 2);
  CHECK(cfg.n_list[0] == 2);  // scalar n broadcasts over receivers
  CHECK(cfg.eps == doctest::Approx(0.1));
  CHECK(cfg.P_grid.size() == 2);

  const std::string listn = R"({
    "scheme": "x", "M": 2, "K": 2, "n": [2, 3], "P_grid": [100.0]
  })";
  SweepConfig cfg2 = sweep_config_from_json(listn);
  CHECK(cfg2.n_list == std::vector<int>{2, 3});
  CHECK(cfg2.dims.J == std::vector<int>{1, 1});  // default single state

  CHECK_THROWS_AS((void)sweep_config_from_json("not json"), ConfigError);
  CHECK_THROWS_AS((void)sweep_config_from_json("[1,2]"), ConfigError);
  CHECK_THROWS_AS(
      (void)sweep_config_from_json(
          R"({"scheme":"x","M":2,"K":2,"n":1,"P_grid":[10.0],"bogus":1})"),
      ConfigError);
  // channel_file is an x-scheme knob; the hybrid draws its own channel.
  CHECK_THROWS_AS(
      (void)sweep_config_from_json(
          R"({"scheme":"hybrid","M":2,"JM":2,"n":1,"P_grid":[10.0],
              "channel_file":"x.json"})"),
      ConfigError);
  CHECK_THROWS_AS(
      (void)sweep_config_from_json(
          R"({"scheme":"hybrid","M":2,"JM":2,"n":1,"P_grid":[10.0],
              "channel_mode":"file"})"),
      ConfigError);
  CHECK_THROWS_AS(
      (void)sweep_config_from_json(R"({"scheme":"x","K":2,"n":1,"P_grid":[1.0]})"),
      ConfigError);
  CHECK_THROWS_AS(
      (void)sweep_config_from_json(
          R"({"scheme":"x","M":2,"K":2,"n":1,"P_grid":[]})"),
      ConfigError);

  // Serialization round-trips through the parser.
  SweepConfig again = sweep_config_from_json(sweep_config_to_json(cfg));
  CHECK(sweep_config_to_json(again) == sweep_config_to_json(cfg));
}

TEST_CASE("CSV report is one line per power point") {
  SweepConfig cfg = tiny_sweep();
  cfg.P_grid = {1.0e4, 1.0e5};
  SimReport rep = run_sweep(cfg, false);
  const std::string csv = report_to_csv(rep);
  CHECK(csv.rfind("# ciasim", 0) == 0);
  CHECK(csv.find("P,half_log2P,Q,points,dmin,ser,ser_stderr,bits_ok,pe_bound") !=
        std::string::npos);
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 4);  // comment, header, two rows
}

TEST_CASE("config validation rejects bad sweeps") {
  SweepConfig cfg = tiny_sweep();
  cfg.scheme = "other";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_sweep();
  cfg.P_grid = {-5.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_sweep();
  cfg.eps = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_sweep();
  cfg.n_list = {1};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_sweep();
  cfg.channel_mode = ChannelMode::File;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no file given
  cfg = tiny_sweep();
  cfg.ser_gate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_sweep();
  cfg.trials_per_P = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
