#include "ciasim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>
#include <sstream>
#include <thread>

#include "ciasim/io.hpp"
#include "ciasim/rng.hpp"
#include "ciasim/version.hpp"
#include "json.hpp"

namespace ciasim {

using nlohmann::json;

std::string to_string(ChannelMode m) {
  switch (m) {
    case ChannelMode::PerTrial:
      return "per-trial";
    case ChannelMode::PerPoint:
      return "per-point";
    case ChannelMode::File:
      return "file";
  }
  throw ConfigError("invalid channel mode");
}

ChannelMode channel_mode_from_string(const std::string& s) {
  if (s == "per-trial") return ChannelMode::PerTrial;
  if (s == "per-point") return ChannelMode::PerPoint;
  if (s == "file") return ChannelMode::File;
  throw ConfigError("unknown channel_mode '" + s +
                    "' (expected per-trial, per-point or file)");
}

void SweepConfig::validate() const {
  if (scheme != "x" && scheme != "hybrid")
    throw ConfigError("scheme must be 'x' or 'hybrid'");
  if (scheme == "x") {
    dims.validate();
    if (static_cast<int>(n_list.size()) != dims.K)
      throw ConfigError("need one layer parameter n per receiver");
    for (int n : n_list)
      if (n < 1) throw ConfigError("layer parameter n must be >= 1");
  } else {
    if (hyb_M < 2) throw ConfigError("hybrid setting needs M >= 2");
    if (hyb_JM < 1) throw ConfigError("JM must be >= 1");
    if (hyb_n < 1) throw ConfigError("n must be >= 1");
    if (channel_mode == ChannelMode::File)
      throw ConfigError("the hybrid scheme draws its own channel; "
                        "channel_mode 'file' is not supported");
  }
  if (!(eps >= 0.0) || !(eps < 0.5)) throw ConfigError("eps must lie in [0, 0.5)");
  if (P_grid.empty()) throw ConfigError("P_grid must not be empty");
  for (double P : P_grid)
    if (!(P > 0.0) || !std::isfinite(P))
      throw ConfigError("every P in the grid must be finite and positive");
  if (trials_per_P < 1) throw ConfigError("trials_per_P must be >= 1");
  if (symbols_per_trial < 1) throw ConfigError("symbols_per_trial must be >= 1");
  if (!(noise_stddev >= 0.0) || !std::isfinite(noise_stddev))
    throw ConfigError("noise_stddev must be finite and >= 0");
  if (channel_mode == ChannelMode::File && channel_file.empty())
    throw ConfigError("channel_mode 'file' requires channel_file");
  if (q_override && *q_override < 1) throw ConfigError("q_override must be >= 1");
  if (constellation_cap < 1 || basis_cap < 1)
    throw ConfigError("caps must be >= 1");
  if (!(ser_gate > 0.0) || !(ser_gate <= 1.0))
    throw ConfigError("ser_gate must lie in (0, 1]");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (!(magnitude_floor >= 0.0) || magnitude_floor >= 1.0)
    throw ConfigError("magnitude_floor must lie in [0, 1)");
}

double pe_bound(double dmin, double noise_stddev) {
  if (!(dmin >= 0.0)) throw ConfigError("dmin must be >= 0");
  if (noise_stddev <= 0.0) return dmin > 0.0 ? 0.0 : 0.5;
  const double arg = dmin / (2.0 * noise_stddev);
  return 0.5 * std::erfc(arg / std::numbers::sqrt2);
}

double estimate_dof(std::span<const SweepRow> rows, double ser_gate,
                    int* used_points) {
  std::vector<const SweepRow*> usable;
  for (const SweepRow& row : rows)
    if (row.ser <= ser_gate) usable.push_back(&row);
  if (used_points) *used_points = static_cast<int>(usable.size());
  if (usable.size() < 3)
    throw InfeasibleError(
        "slope fit needs at least 3 sweep points with ser <= gate; got " +
        std::to_string(usable.size()));
  double sx = 0, sy = 0;
  for (const SweepRow* row : usable) {
    sx += row->x_axis;
    sy += row->bits_ok;
  }
  const double n = static_cast<double>(usable.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const SweepRow* row : usable) {
    sxx += (row->x_axis - mx) * (row->x_axis - mx);
    sxy += (row->x_axis - mx) * (row->bits_ok - my);
  }
  if (!(sxx > 0.0))
    throw InfeasibleError("slope fit needs distinct power points");
  return sxy / sxx;
}

BoundCheck check_outer_bounds(std::span<const double> profile, int M, int K,
                              double tol) {
  if (M < 1 || K < 1) throw ConfigError("M and K must be >= 1");
  if (static_cast<int>(profile.size()) != K)
    throw ConfigError("profile must list one value per receiver");
  for (double d : profile)
    if (!(d >= 0.0) || !std::isfinite(d))
      throw ConfigError("profile entries must be finite and >= 0");

  BoundCheck out;
  out.profile.assign(profile.begin(), profile.end());
  double total = 0.0;
  for (double d : profile) total += d;
  bool ok = true;
  for (int r = 0; r < K; ++r) {
    const double weighted = total - profile[r] + M * profile[r];
    out.rotation_slack.push_back(M - weighted);
    if (weighted > M * (1.0 + tol)) ok = false;
  }
  const double aggregate = (M + K - 1.0) * total;
  out.aggregate_slack = static_cast<double>(M) * K - aggregate;
  if (aggregate > static_cast<double>(M) * K * (1.0 + tol)) ok = false;
  out.ok = ok;
  return out;
}

namespace {

int resolve_threads(int requested, int trials) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("CIA_SIM_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end && *end == '\0' && v >= 1 && v <= 4096) n = static_cast<int>(v);
    }
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  return std::min(n, std::max(trials, 1));
}

struct ReceiverStateCtx {
  std::vector<cdouble> hrow;
  AlignedConstellation cst;
};

struct ReceiverCtx {
  std::vector<uint64_t> fav_streams;  // flat ids, constellation digit order
  std::vector<ReceiverStateCtx> states;
};

struct BuiltInstance {
  Field field = Field::Real;
  int M = 0;
  long long Q = 0;
  uint64_t total_streams = 0;
  uint64_t points_max = 0;
  double dmin_min = 0.0;
  std::vector<ReceiverCtx> receivers;
  std::function<EncodedBlock(const StreamBlock&)> encode_fn;
};

BuiltInstance build_instance_x(const SweepConfig& cfg, double P,
                               const ChannelRealization& ch) {
  auto tables = std::make_shared<SchemeTables>(
      build_tables(ch, cfg.n_list, cfg.basis_cap));
  auto params = std::make_shared<CodecParams>(
      make_params(ch, *tables, cfg.eps, P, cfg.q_override));

  BuiltInstance inst;
  inst.field = params->field;
  inst.M = params->dims.M;
  inst.Q = params->Q;
  inst.total_streams = params->total_streams;
  inst.dmin_min = std::numeric_limits<double>::infinity();

  const Dims& dims = params->dims;
  for (int r = 0; r < dims.K; ++r) {
    ReceiverCtx rc;
    const uint64_t L = tables->basis[r].size();
    for (int t = 0; t < dims.M; ++t)
      for (uint64_t l = 0; l < L; ++l)
        rc.fav_streams.push_back(tables->stream_offset[r] +
                                 static_cast<uint64_t>(t) * L + l);
    for (int s = 0; s < dims.J[r]; ++s) {
      ReceiverStateCtx sc{
          {},
          build_received_constellation(ch, *params, *tables, r, s,
                                       cfg.constellation_cap)};
      for (int t = 0; t < dims.M; ++t) sc.hrow.push_back(ch.coeff_c(r, t, s));
      inst.points_max = std::max(inst.points_max, sc.cst.size());
      inst.dmin_min = std::min(inst.dmin_min, sc.cst.min_distance());
      rc.states.push_back(std::move(sc));
    }
    inst.receivers.push_back(std::move(rc));
  }
  inst.encode_fn = [tables, params](const StreamBlock& block) {
    return encode(*params, *tables, block);
  };
  return inst;
}

BuiltInstance build_instance_hybrid(const SweepConfig& cfg, double P,
                                    uint64_t scheme_seed) {
  HybridConfig hc;
  hc.M = cfg.hyb_M;
  hc.JM = cfg.hyb_JM;
  hc.n = cfg.hyb_n;
  hc.seed = scheme_seed;
  hc.magnitude_floor = cfg.magnitude_floor;
  auto scheme = std::make_shared<HybridScheme>(build_hybrid(hc));
  auto params = std::make_shared<HybridParams>(
      make_hybrid_params(*scheme, cfg.eps, P, cfg.q_override));

  BuiltInstance inst;
  inst.field = Field::Real;
  inst.M = hc.M;
  inst.Q = params->Q;
  inst.total_streams = params->total_streams;
  inst.dmin_min = std::numeric_limits<double>::infinity();

  const uint64_t L = scheme->L;
  for (int r = 0; r < hc.M; ++r) {
    ReceiverCtx rc;
    if (r < hc.M - 1) {
      for (int i = 0; i < hc.M; ++i)
        for (uint64_t l = 0; l < L; ++l)
          rc.fav_streams.push_back((static_cast<uint64_t>(r) * hc.M + i) * L + l);
      ReceiverStateCtx sc{
          {}, hybrid_receiver_constellation(*scheme, *params, r, 0,
                                            cfg.constellation_cap)};
      for (int t = 0; t < hc.M; ++t)
        sc.hrow.push_back(cdouble(scheme->Hfirst(r, t), 0.0));
      inst.points_max = std::max(inst.points_max, sc.cst.size());
      inst.dmin_min = std::min(inst.dmin_min, sc.cst.min_distance());
      rc.states.push_back(std::move(sc));
    } else {
      const uint64_t ladder_base =
          static_cast<uint64_t>(hc.M - 1) * hc.M * L;
      for (uint64_t l = 0; l < L; ++l)
        rc.fav_streams.push_back(ladder_base + l);
      for (int s = 0; s < hc.JM; ++s) {
        ReceiverStateCtx sc{
            {}, hybrid_receiver_constellation(*scheme, *params, r, s,
                                              cfg.constellation_cap)};
        for (int t = 0; t < hc.M; ++t)
          sc.hrow.push_back(cdouble(scheme->HM(s, t), 0.0));
        inst.points_max = std::max(inst.points_max, sc.cst.size());
        inst.dmin_min = std::min(inst.dmin_min, sc.cst.min_distance());
        rc.states.push_back(std::move(sc));
      }
    }
    inst.receivers.push_back(std::move(rc));
  }
  inst.encode_fn = [scheme, params](const StreamBlock& block) {
    return hybrid_encode(*scheme, *params, block);
  };
  return inst;
}

struct TrialOutcome {
  std::vector<uint64_t> symbol_errors;             // per receiver
  std::vector<std::vector<uint64_t>> stream_ok;    // per receiver, per stream
  uint64_t points = 0;
  long long Q = 0;
  double dmin = std::numeric_limits<double>::infinity();
};

TrialOutcome run_trial(const BuiltInstance& inst, const SweepConfig& cfg,
                       uint64_t data_seed, uint64_t noise_seed) {
  const int T = cfg.symbols_per_trial;
  const StreamBlock block =
      random_streams(inst.total_streams, inst.Q, data_seed, T);
  const EncodedBlock x = inst.encode_fn(block);

  TrialOutcome out;
  out.points = inst.points_max;
  out.Q = inst.Q;
  out.dmin = inst.dmin_min;
  out.symbol_errors.assign(inst.receivers.size(), 0);

  rng::Stream noise(noise_seed);
  const double sigma = cfg.noise_stddev;
  const uint64_t radix = 2 * static_cast<uint64_t>(inst.Q) - 1;
  const long long shift = inst.Q - 1;

  std::vector<uint64_t> det;
  for (std::size_t r = 0; r < inst.receivers.size(); ++r) {
    const ReceiverCtx& rc = inst.receivers[r];
    const std::size_t nstreams = rc.fav_streams.size();
    out.stream_ok.emplace_back(nstreams, 0);
    det.assign(rc.states.size() * static_cast<std::size_t>(T), 0);

    for (std::size_t s = 0; s < rc.states.size(); ++s) {
      const ReceiverStateCtx& sc = rc.states[s];
      for (int m = 0; m < T; ++m) {
        uint64_t idx;
        if (inst.field == Field::Real) {
          double y = 0.0;
          for (int t = 0; t < inst.M; ++t)
            y += sc.hrow[t].real() * x.x[static_cast<std::size_t>(t) * T + m];
          if (sigma > 0.0) y += sigma * noise.normal();
          idx = sc.cst.detect(y);
        } else {
          cdouble y(0.0, 0.0);
          for (int t = 0; t < inst.M; ++t)
            y += sc.hrow[t] * x.xc[static_cast<std::size_t>(t) * T + m];
          if (sigma > 0.0) y += sigma * noise.cnormal();
          idx = sc.cst.detect(y);
        }
        det[s * T + m] = sc.cst.favorite_part(idx);
      }
    }

    std::vector<long long> tx_digit(nstreams), rx_digit(nstreams);
    for (int m = 0; m < T; ++m) {
      uint64_t tx = 0;
      for (std::size_t j = 0; j < nstreams; ++j) {
        tx_digit[j] = block.at(rc.fav_streams[j], m) + shift;
        tx = tx * radix + static_cast<uint64_t>(tx_digit[j]);
      }
      bool symbol_ok = true;
      std::vector<bool> ok(nstreams, true);
      for (std::size_t s = 0; s < rc.states.size(); ++s) {
        uint64_t got = det[s * T + m];
        if (got != tx) symbol_ok = false;
        for (std::size_t j = nstreams; j-- > 0;) {
          rx_digit[j] = static_cast<long long>(got % radix);
          got /= radix;
        }
        for (std::size_t j = 0; j < nstreams; ++j)
          if (rx_digit[j] != tx_digit[j]) ok[j] = false;
      }
      if (!symbol_ok) ++out.symbol_errors[r];
      for (std::size_t j = 0; j < nstreams; ++j)
        if (ok[j]) ++out.stream_ok[r][j];
    }
  }
  return out;
}

SweepRow run_point(const SweepConfig& cfg, bool hybrid, int p_index, double P,
                   const ChannelRealization* file_channel) {
  const uint64_t seed_pt = rng::derive(cfg.seed, static_cast<uint64_t>(p_index));

  std::shared_ptr<const BuiltInstance> shared;
  auto build_for_trial = [&](int trial) {
    const uint64_t chan_seed =
        rng::derive3(seed_pt, static_cast<uint64_t>(trial), rng::kTagChannel);
    if (hybrid) return build_instance_hybrid(cfg, P, chan_seed);
    if (cfg.channel_mode == ChannelMode::File)
      return build_instance_x(cfg, P, *file_channel);
    ChannelConfig cc;
    cc.dims = cfg.dims;
    cc.field = cfg.field;
    cc.seed = chan_seed;
    cc.magnitude_floor = cfg.magnitude_floor;
    return build_instance_x(cfg, P, sample_channel(cc));
  };
  if (cfg.channel_mode != ChannelMode::PerTrial)
    shared = std::make_shared<const BuiltInstance>(build_for_trial(0));

  const int trials = cfg.trials_per_P;
  std::vector<TrialOutcome> outcomes(trials);
  std::vector<std::exception_ptr> failures(trials);
  const int nthreads = resolve_threads(cfg.threads, trials);

  auto worker = [&](int first, int step) {
    for (int trial = first; trial < trials; trial += step) {
      try {
        std::shared_ptr<const BuiltInstance> local = shared;
        if (!local)
          local = std::make_shared<const BuiltInstance>(build_for_trial(trial));
        outcomes[trial] = run_trial(
            *local, cfg,
            rng::derive3(seed_pt, static_cast<uint64_t>(trial), rng::kTagData),
            rng::derive3(seed_pt, static_cast<uint64_t>(trial), rng::kTagNoise));
      } catch (...) {
        failures[trial] = std::current_exception();
      }
    }
  };
  if (nthreads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker, i, nthreads);
    for (auto& th : pool) th.join();
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  SweepRow row;
  row.P = P;
  row.Q = outcomes.front().Q;
  row.dmin = std::numeric_limits<double>::infinity();
  const std::size_t K = outcomes.front().symbol_errors.size();
  std::vector<uint64_t> errors(K, 0);
  std::vector<std::vector<uint64_t>> ok;
  for (const TrialOutcome& oc : outcomes) {
    row.points = std::max(row.points, oc.points);
    row.dmin = std::min(row.dmin, oc.dmin);
    for (std::size_t r = 0; r < K; ++r) errors[r] += oc.symbol_errors[r];
    if (ok.empty()) {
      ok = oc.stream_ok;
    } else {
      for (std::size_t r = 0; r < K; ++r)
        for (std::size_t j = 0; j < ok[r].size(); ++j)
          ok[r][j] += oc.stream_ok[r][j];
    }
  }
  const double denom =
      static_cast<double>(trials) * cfg.symbols_per_trial;
  double worst = 0.0;
  for (std::size_t r = 0; r < K; ++r)
    worst = std::max(worst, static_cast<double>(errors[r]) / denom);
  row.ser = worst;
  row.ser_stderr = std::sqrt(std::max(0.0, worst * (1.0 - worst) / denom));
  double bits = 0.0;
  const double bits_per_digit =
      std::log2(2.0 * static_cast<double>(row.Q) - 1.0);
  for (std::size_t r = 0; r < K; ++r)
    for (uint64_t streak : ok[r])
      bits += bits_per_digit * static_cast<double>(streak) / denom;
  row.bits_ok = bits;
  row.pe = pe_bound(row.dmin, cfg.noise_stddev);
  return row;
}

}  // namespace

SimReport run_sweep(const SweepConfig& cfg, bool fit_slope) {
  cfg.validate();
  const bool hybrid = cfg.scheme == "hybrid";

  SimReport rep;
  rep.cfg = cfg;

  if (hybrid) {
    rep.nominal_limit = hybrid_nominal_dof(cfg.hyb_M, cfg.hyb_JM, cfg.hyb_n);
    rep.reference = hybrid_dof_reference(cfg.hyb_M);
    const std::vector<Rational> profile =
        hybrid_dof_profile(cfg.hyb_M, cfg.hyb_JM, cfg.hyb_n);
    for (const Rational& d : profile) rep.profile_limit.push_back(to_double(d));
    rep.bounds = check_outer_bounds(rep.profile_limit, cfg.hyb_M, cfg.hyb_M);
  } else {
    rep.nominal_limit = nominal_dof(cfg.dims, cfg.n_list);
    rep.reference = dof_reference(cfg.dims.M, cfg.dims.K).complex_total;
    const std::vector<Rational> profile = dof_profile(cfg.dims, cfg.n_list);
    for (const Rational& d : profile) rep.profile_limit.push_back(to_double(d));
    rep.bounds = check_outer_bounds(rep.profile_limit, cfg.dims.M, cfg.dims.K);
  }
  // nominal at the configured eps, in doubles
  {
    double streams, xi_value;
    if (hybrid) {
      const uint64_t L =
          checked_pow(static_cast<uint64_t>(cfg.hyb_n),
                      static_cast<uint32_t>(cfg.hyb_M * cfg.hyb_JM));
      streams = static_cast<double>(
          (static_cast<uint64_t>(cfg.hyb_M - 1) * cfg.hyb_M + 1) * L);
      const uint64_t inner = checked_pow(
          static_cast<uint64_t>(cfg.hyb_n),
          static_cast<uint32_t>(cfg.hyb_M * (cfg.hyb_JM - 1)));
      const uint64_t outer =
          checked_pow(static_cast<uint64_t>(cfg.hyb_n) + 1,
                      static_cast<uint32_t>(cfg.hyb_M));
      xi_value = static_cast<double>(cfg.hyb_M - 1) *
                     static_cast<double>(inner) * static_cast<double>(outer) +
                 static_cast<double>(L);
    } else {
      const XiBreakdown xb = xi_breakdown(cfg.dims, cfg.n_list);
      double total_layers = 0;
      for (uint64_t L : xb.L) total_layers += static_cast<double>(L);
      streams = static_cast<double>(cfg.dims.M) * total_layers;
      xi_value = static_cast<double>(xb.xi);
    }
    // Expected slope of bits against the x axis at this eps. The complex
    // symbol range grows like P^((1-eps)/(xi+2eps)) against log2(P), the
    // real one like (P/M)^((1-eps)/(2(xi+eps))) against 0.5*log2(P); both
    // meet streams/xi as eps -> 0.
    const bool complex_field = !hybrid && cfg.field == Field::Complex;
    const double denom = complex_field ? xi_value + 2.0 * cfg.eps
                                       : xi_value + cfg.eps;
    rep.nominal_at_eps = streams * (1.0 - cfg.eps) / denom;
  }

  std::unique_ptr<ChannelRealization> file_channel;
  if (!hybrid && cfg.channel_mode == ChannelMode::File) {
    file_channel =
        std::make_unique<ChannelRealization>(load_channel(cfg.channel_file));
    if (!(file_channel->dims() == cfg.dims) ||
        file_channel->field() != cfg.field)
      throw ConfigError(
          "channel file dimensions or field do not match the sweep config");
  }

  const bool complex_field = !hybrid && cfg.field == Field::Complex;
  for (std::size_t p = 0; p < cfg.P_grid.size(); ++p) {
    SweepRow row = run_point(cfg, hybrid, static_cast<int>(p), cfg.P_grid[p],
                             file_channel.get());
    row.x_axis = complex_field ? std::log2(row.P) : 0.5 * std::log2(row.P);
    rep.rows.push_back(row);
  }

  if (fit_slope)
    rep.fitted_dof = estimate_dof(rep.rows, cfg.ser_gate, &rep.fit_points);
  return rep;
}

namespace {

json rational_json(const Rational& r) {
  return json{{"fraction", to_string(r)}, {"decimal", to_double(r)}};
}

}  // namespace

SweepConfig sweep_config_from_json(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!in.is_object()) throw ConfigError("config must be a JSON object");

  SweepConfig cfg;
  cfg.scheme = in.value("scheme", std::string("x"));
  const bool hybrid = cfg.scheme == "hybrid";

  static const std::vector<std::string> x_keys = {
      "scheme", "M", "K", "J", "field", "n", "eps", "P_grid", "trials_per_P",
      "symbols_per_trial", "seed", "noise_stddev", "channel_mode",
      "channel_file", "q_override", "constellation_cap", "basis_cap",
      "ser_gate", "threads", "magnitude_floor"};
  static const std::vector<std::string> hybrid_keys = {
      "scheme", "M", "JM", "n", "eps", "P_grid", "trials_per_P",
      "symbols_per_trial", "seed", "noise_stddev", "channel_mode",
      "q_override", "constellation_cap", "basis_cap", "ser_gate", "threads",
      "magnitude_floor"};
  const auto& allowed = hybrid ? hybrid_keys : x_keys;
  for (auto it = in.begin(); it != in.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown key '" + it.key() + "' in sweep config for scheme '" +
                        cfg.scheme + "'");

  try {
    if (hybrid) {
      cfg.hyb_M = in.value("M", 2);
      cfg.hyb_JM = in.value("JM", 2);
      if (!in.contains("n") || !in["n"].is_number_integer())
        throw ConfigError("hybrid config needs an integer 'n'");
      cfg.hyb_n = in["n"].get<int>();
    } else {
      if (!in.contains("M") || !in.contains("K"))
        throw ConfigError("config needs 'M' and 'K'");
      cfg.dims.M = in["M"].get<int>();
      cfg.dims.K = in["K"].get<int>();
      if (in.contains("J"))
        cfg.dims.J = in["J"].get<std::vector<int>>();
      else
        cfg.dims.J.assign(cfg.dims.K, 1);
      cfg.field = field_from_string(in.value("field", std::string("real")));
      if (!in.contains("n")) throw ConfigError("config needs 'n'");
      if (in["n"].is_number_integer())
        cfg.n_list.assign(cfg.dims.K, in["n"].get<int>());
      else
        cfg.n_list = in["n"].get<std::vector<int>>();
    }
    cfg.eps = in.value("eps", 0.05);
    if (!in.contains("P_grid")) throw ConfigError("config needs 'P_grid'");
    cfg.P_grid = in["P_grid"].get<std::vector<double>>();
    cfg.trials_per_P = in.value("trials_per_P", 20);
    cfg.symbols_per_trial = in.value("symbols_per_trial", 10'000);
    cfg.seed = in.value("seed", uint64_t{0});
    cfg.noise_stddev = in.value("noise_stddev", 1.0);
    cfg.channel_mode =
        channel_mode_from_string(in.value("channel_mode", std::string("per-trial")));
    cfg.channel_file = in.value("channel_file", std::string());
    if (in.contains("q_override")) cfg.q_override = in["q_override"].get<long long>();
    cfg.constellation_cap = in.value("constellation_cap", kDefaultPointCap);
    cfg.basis_cap = in.value("basis_cap", kDefaultBasisCap);
    cfg.ser_gate = in.value("ser_gate", 1e-2);
    cfg.threads = in.value("threads", 0);
    cfg.magnitude_floor = in.value("magnitude_floor", 1e-3);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string sweep_config_to_json(const SweepConfig& cfg) {
  json out;
  out["scheme"] = cfg.scheme;
  if (cfg.scheme == "hybrid") {
    out["M"] = cfg.hyb_M;
    out["JM"] = cfg.hyb_JM;
    out["n"] = cfg.hyb_n;
  } else {
    out["M"] = cfg.dims.M;
    out["K"] = cfg.dims.K;
    out["J"] = cfg.dims.J;
    out["field"] = to_string(cfg.field);
    out["n"] = cfg.n_list;
  }
  out["eps"] = cfg.eps;
  out["P_grid"] = cfg.P_grid;
  out["trials_per_P"] = cfg.trials_per_P;
  out["symbols_per_trial"] = cfg.symbols_per_trial;
  out["seed"] = cfg.seed;
  out["noise_stddev"] = cfg.noise_stddev;
  out["channel_mode"] = to_string(cfg.channel_mode);
  if (!cfg.channel_file.empty()) out["channel_file"] = cfg.channel_file;
  if (cfg.q_override) out["q_override"] = *cfg.q_override;
  out["constellation_cap"] = cfg.constellation_cap;
  out["basis_cap"] = cfg.basis_cap;
  out["ser_gate"] = cfg.ser_gate;
  out["threads"] = cfg.threads;
  out["magnitude_floor"] = cfg.magnitude_floor;
  return out.dump(2) + "\n";
}

std::string report_to_json(const SimReport& rep) {
  json out;
  out["format"] = "ciasim-report/1";
  out["tool"] = {{"name", "ciasim"},
                 {"version", kVersion},
                 {"rng", rng::kAlgorithmId}};
  out["config"] = json::parse(sweep_config_to_json(rep.cfg));
  json rows = json::array();
  const bool complex_field =
      rep.cfg.scheme == "x" && rep.cfg.field == Field::Complex;
  const char* xname = complex_field ? "log2P" : "half_log2P";
  for (const SweepRow& row : rep.rows)
    rows.push_back(json{{"P", row.P},
                        {xname, row.x_axis},
                        {"Q", row.Q},
                        {"points", row.points},
                        {"dmin", row.dmin},
                        {"ser", row.ser},
                        {"ser_stderr", row.ser_stderr},
                        {"bits_ok", row.bits_ok},
                        {"pe_bound", row.pe}});
  out["rows"] = std::move(rows);
  out["nominal_dof"] = {{"at_eps", rep.nominal_at_eps},
                        {"limit", to_string(rep.nominal_limit)},
                        {"limit_decimal", to_double(rep.nominal_limit)}};
  out["reference_dof"] = rational_json(rep.reference);
  out["profile_limit"] = rep.profile_limit;
  out["bounds"] = {{"rotation_slack", rep.bounds.rotation_slack},
                   {"aggregate_slack", rep.bounds.aggregate_slack},
                   {"ok", rep.bounds.ok}};
  if (rep.fitted_dof)
    out["fit"] = {{"dof", *rep.fitted_dof}, {"points", rep.fit_points}};
  return out.dump(2) + "\n";
}

std::string report_to_csv(const SimReport& rep) {
  std::ostringstream out;
  out.precision(12);
  out << "# ciasim " << kVersion << " rng=" << rng::kAlgorithmId
      << " seed=" << rep.cfg.seed << "\n";
  const bool complex_field =
      rep.cfg.scheme == "x" && rep.cfg.field == Field::Complex;
  out << "P," << (complex_field ? "log2P" : "half_log2P")
      << ",Q,points,dmin,ser,ser_stderr,bits_ok,pe_bound\n";
  for (const SweepRow& row : rep.rows)
    out << row.P << "," << row.x_axis << "," << row.Q << "," << row.points
        << "," << row.dmin << "," << row.ser << "," << row.ser_stderr << ","
        << row.bits_ok << "," << row.pe << "\n";
  return out.str();
}

}  // namespace ciasim
