#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ciasim/codec.hpp"
#include "ciasim/hybrid.hpp"

namespace ciasim {

enum class ChannelMode { PerTrial, PerPoint, File };

std::string to_string(ChannelMode m);
ChannelMode channel_mode_from_string(const std::string& s);

// Monte Carlo sweep over a transmit power grid.
struct SweepConfig {
  std::string scheme = "x";  // "x" or "hybrid"

  // scheme == "x"
  Dims dims;
  Field field = Field::Real;
  std::vector<int> n_list;

  // scheme == "hybrid"
  int hyb_M = 2;
  int hyb_JM = 2;
  int hyb_n = 1;

  double eps = 0.05;
  std::vector<double> P_grid;
  int trials_per_P = 20;
  int symbols_per_trial = 10'000;
  uint64_t seed = 0;
  double noise_stddev = 1.0;  // 0 disables noise
  ChannelMode channel_mode = ChannelMode::PerTrial;
  std::string channel_file;
  std::optional<long long> q_override;
  uint64_t constellation_cap = kDefaultPointCap;
  uint64_t basis_cap = kDefaultBasisCap;
  double ser_gate = 1e-2;  // reliability gate for the slope fit
  int threads = 0;         // 0: CIA_SIM_THREADS env var, else hardware
  double magnitude_floor = 1e-3;

  void validate() const;
};

struct SweepRow {
  double P = 0.0;
  double x_axis = 0.0;  // 0.5*log2(P) real, log2(P) complex
  long long Q = 0;
  uint64_t points = 0;  // largest constellation in the row
  double dmin = 0.0;    // smallest over receivers, states and trials
  double ser = 0.0;     // worst receiver's symbol error rate
  double ser_stderr = 0.0;
  double bits_ok = 0.0;  // correctly decoded bits per channel use, all streams
  double pe = 0.0;       // pe_bound(dmin, noise_stddev)
};

// Union-bound flavored pairwise error estimate Q(d / (2 sigma)).
double pe_bound(double dmin, double noise_stddev = 1.0);

// Least-squares slope of bits_ok against x_axis over rows with
// ser <= ser_gate; fewer than 3 such rows throws InfeasibleError.
double estimate_dof(std::span<const SweepRow> rows, double ser_gate,
                    int* used_points = nullptr);

// Converse audit: a claimed per-receiver profile d_1..d_K must satisfy, for
// every rotation r, sum_{r' != r} d_r' + M * d_r <= M, and in aggregate
// (M + K - 1) * sum d <= M * K, within tolerance.
struct BoundCheck {
  std::vector<double> profile;
  std::vector<double> rotation_slack;  // M - (sum_{r' != r} d + M d_r)
  double aggregate_slack = 0.0;        // MK - (M+K-1) * sum d
  bool ok = false;
};

BoundCheck check_outer_bounds(std::span<const double> profile, int M, int K,
                              double tol = 1e-9);

struct SimReport {
  SweepConfig cfg;
  std::vector<SweepRow> rows;
  double nominal_at_eps = 0.0;
  Rational nominal_limit{0};
  Rational reference{0};  // complex-field benchmark total for the setting
  std::vector<double> profile_limit;
  BoundCheck bounds;
  std::optional<double> fitted_dof;
  int fit_points = 0;
};

SimReport run_sweep(const SweepConfig& cfg, bool fit_slope);

// Strict JSON config (unknown keys rejected) and report serialization.
SweepConfig sweep_config_from_json(const std::string& text);
std::string sweep_config_to_json(const SweepConfig& cfg);
std::string report_to_json(const SimReport& report);
std::string report_to_csv(const SimReport& report);

}  // namespace ciasim
