// Command line front end. Subcommands map one-to-one onto the library
// modules; every machine-readable output is JSON (or CSV where a point list
// is more useful) and every file write is atomic.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ciasim/channel.hpp"
#include "ciasim/codec.hpp"
#include "ciasim/errors.hpp"
#include "ciasim/hybrid.hpp"
#include "ciasim/io.hpp"
#include "ciasim/monomial.hpp"
#include "ciasim/rng.hpp"
#include "ciasim/sim.hpp"
#include "ciasim/version.hpp"

namespace {

using nlohmann::json;
using namespace ciasim;

json tool_stamp() {
  return json{
      {"name", "ciasim"}, {"version", kVersion}, {"rng", rng::kAlgorithmId}};
}

// Emit a result document: to a file (atomically) when a path was given,
// to stdout otherwise.
void emit(const std::string& out_path, const json& doc,
          const std::string& note) {
  std::string text = doc.dump(2);
  text.push_back('\n');
  if (out_path.empty()) {
    std::cout << text;
  } else {
    atomic_write(out_path, text);
    std::cout << note << " -> " << out_path << "\n";
  }
}

Dims make_dims(int M, int K, std::vector<int> J) {
  if (J.size() == 1 && K > 1) J.assign(static_cast<std::size_t>(K), J[0]);
  Dims dims{M, K, std::move(J)};
  dims.validate();
  return dims;
}

std::vector<int> broadcast_n(std::vector<int> n, int K) {
  if (n.size() == 1 && K > 1) n.assign(static_cast<std::size_t>(K), n[0]);
  return n;
}

int check_receiver_state(const Dims& dims, int r1, int s1) {
  if (r1 < 1 || r1 > dims.K)
    throw ConfigError("receiver index out of range: " + std::to_string(r1));
  if (s1 < 1 || s1 > dims.J[static_cast<std::size_t>(r1 - 1)])
    throw ConfigError("state index out of range: " + std::to_string(s1));
  return 0;
}

json rational_json(const Rational& q) {
  return json{{"value", to_string(q)}, {"decimal", to_double(q)}};
}

// ---------------------------------------------------------------- commands

struct GenChannelArgs {
  int M = 2, K = 2;
  std::vector<int> J{1};
  std::string field = "real";
  uint64_t seed = 0;
  double floor = 1e-3;
  std::string out;
};

int cmd_gen_channel(const GenChannelArgs& a) {
  ChannelConfig cfg;
  cfg.dims = make_dims(a.M, a.K, a.J);
  cfg.field = field_from_string(a.field);
  cfg.seed = a.seed;
  cfg.magnitude_floor = a.floor;
  ChannelRealization ch = sample_channel(cfg);
  GenericityReport rep = validate_genericity(ch);
  if (!rep.ok) {
    std::string why = rep.notes.empty() ? "degenerate draw" : rep.notes.front();
    throw DiagnosticError("channel draw failed the genericity audit: " + why);
  }
  if (a.out.empty()) {
    std::cout << channel_to_json(ch);
  } else {
    save_channel(ch, a.out);
    std::cout << "channel M=" << cfg.dims.M << " K=" << cfg.dims.K
              << " coeffs=" << ch.count() << " min|h|=" << rep.min_abs
              << " min gap=" << rep.min_pair_gap << " -> " << a.out << "\n";
  }
  return kExitOk;
}

struct AlignCheckArgs {
  int M = 2, K = 2;
  std::vector<int> J{1};
  std::vector<int> n{1};
  int r = 1, state = 1;
  uint64_t cap = kDefaultBasisCap;
  std::string out;
};

int cmd_align_check(const AlignCheckArgs& a) {
  Dims dims = make_dims(a.M, a.K, a.J);
  std::vector<int> n = broadcast_n(a.n, dims.K);
  check_receiver_state(dims, a.r, a.state);
  AlignmentCheck chk = verify_alignment(dims, n, a.r - 1, a.state - 1, a.cap);

  json cells = json::array();
  for (const auto& c : chk.interference) {
    cells.push_back({{"interferer", c.interferer + 1},
                     {"box_count", c.box_count},
                     {"kappa", c.kappa_expected},
                     {"exact_union", c.exact_union},
                     {"contained", c.contained},
                     {"disjoint_from_favorite", c.disjoint_from_favorite}});
  }
  json doc{{"format", "ciasim-align/1"},
           {"tool", tool_stamp()},
           {"dims", {{"M", dims.M}, {"K", dims.K}, {"J", dims.J}}},
           {"n", n},
           {"receiver", a.r},
           {"state", a.state},
           {"favorite",
            {{"count", chk.favorite_count},
             {"expected", chk.favorite_expected},
             {"disjoint", chk.favorite_disjoint}}},
           {"interference", cells},
           {"total_observed", chk.total_observed},
           {"ok", chk.ok}};
  emit(a.out, doc, "alignment report");
  if (!chk.ok) {
    std::cerr << "alignment audit failed at receiver " << a.r << " state "
              << a.state << "\n";
    return kExitDiagnostic;
  }
  return kExitOk;
}

struct ParamsArgs {
  std::string channel;
  std::vector<int> n{1};
  double eps = 0.05;
  double P = 1e6;
  std::optional<long long> q_override;
  std::string out;
};

int cmd_params(const ParamsArgs& a) {
  ChannelRealization ch = load_channel(a.channel);
  std::vector<int> n = broadcast_n(a.n, ch.dims().K);
  SchemeTables tables = build_tables(ch, n);
  CodecParams p = make_params(ch, tables, a.eps, a.P, a.q_override);

  std::vector<Rational> prof = dof_profile(p.dims, n);
  json profile = json::array();
  for (const auto& d : prof) profile.push_back(rational_json(d));
  DofReference ref = dof_reference(p.dims.M, p.dims.K);
  double at_eps = static_cast<double>(p.total_streams) * (1.0 - p.eps) /
                  (static_cast<double>(p.xi) + p.eps);

  json doc{{"format", "ciasim-params/1"},
           {"tool", tool_stamp()},
           {"dims", {{"M", p.dims.M}, {"K", p.dims.K}, {"J", p.dims.J}}},
           {"field", to_string(p.field)},
           {"n", n},
           {"eps", p.eps},
           {"P", p.P},
           {"L", p.L},
           {"kappa", p.kap},
           {"xi", p.xi},
           {"total_streams", p.total_streams},
           {"Q", p.Q},
           {"q_overridden", p.q_overridden},
           {"gamma", p.gamma},
           {"lambda", p.lambda},
           {"nominal_dof",
            {{"at_eps", at_eps},
             {"limit", rational_json(nominal_dof(p.dims, n))},
             {"profile", profile}}},
           {"reference_dof",
            {{"complex", rational_json(ref.complex_total)},
             {"real", rational_json(ref.real_total)}}}};
  emit(a.out, doc, "codec parameters");
  return kExitOk;
}

struct ConstellationArgs {
  std::string channel;
  std::vector<int> n{1};
  double eps = 0.05;
  double P = 1e6;
  int r = 1, state = 1;
  std::optional<long long> q_override;
  uint64_t cap = kDefaultPointCap;
  std::string csv;
  std::string out;
};

int cmd_constellation(const ConstellationArgs& a) {
  ChannelRealization ch = load_channel(a.channel);
  std::vector<int> n = broadcast_n(a.n, ch.dims().K);
  check_receiver_state(ch.dims(), a.r, a.state);
  SchemeTables tables = build_tables(ch, n);
  CodecParams p = make_params(ch, tables, a.eps, a.P, a.q_override);
  AlignedConstellation cst = build_received_constellation(
      ch, p, tables, a.r - 1, a.state - 1, a.cap);

  int merged = static_cast<int>(cst.digits().size()) - cst.favorite_digits();
  json doc{{"format", "ciasim-constellation/1"},
           {"tool", tool_stamp()},
           {"receiver", a.r},
           {"state", a.state},
           {"field", to_string(cst.field())},
           {"Q", p.Q},
           {"lambda", p.lambda},
           {"points", cst.size()},
           {"favorite_digits", cst.favorite_digits()},
           {"merged_digits", merged},
           {"min_distance", cst.min_distance()}};
  if (!a.csv.empty()) {
    std::string text;
    text += "# ciasim-constellation/1 receiver=" + std::to_string(a.r) +
            " state=" + std::to_string(a.state) + "\n";
    bool cx = cst.field() == Field::Complex;
    text += cx ? "index,re,im,favorite_part\n" : "index,value,favorite_part\n";
    char buf[96];
    for (uint64_t i = 0; i < cst.size(); ++i) {
      if (cx) {
        cdouble v = cst.cvalue_at(i);
        std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%llu\n",
                      static_cast<unsigned long long>(i), v.real(), v.imag(),
                      static_cast<unsigned long long>(cst.favorite_part(i)));
      } else {
        std::snprintf(buf, sizeof buf, "%llu,%.17g,%llu\n",
                      static_cast<unsigned long long>(i), cst.value_at(i),
                      static_cast<unsigned long long>(cst.favorite_part(i)));
      }
      text += buf;
    }
    atomic_write(a.csv, text);
    doc["csv"] = a.csv;
  }
  emit(a.out, doc, "constellation summary");
  return kExitOk;
}

struct SimArgs {
  std::string config;
  std::string out;
  std::string csv;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
};

int cmd_simulate(const SimArgs& a, bool fit) {
  SweepConfig cfg = sweep_config_from_json(read_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  SimReport rep = run_sweep(cfg, fit);
  if (!a.csv.empty()) atomic_write(a.csv, report_to_csv(rep));
  std::string text = report_to_json(rep);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    atomic_write(a.out, text);
    std::cout << "sweep: " << rep.rows.size() << " power points";
    if (rep.fitted_dof)
      std::cout << ", fitted dof " << *rep.fitted_dof << " over "
                << rep.fit_points << " points (nominal " << rep.nominal_at_eps
                << ")";
    std::cout << " -> " << a.out << "\n";
  }
  return kExitOk;
}

struct HybridArgs {
  int M = 2, JM = 2, n = 1;
  double eps = 0.05;
  double P = 1e6;
  uint64_t seed = 0;
  double floor = 1e-3;
  std::optional<long long> q_override;
  uint64_t cap = kDefaultPointCap;
  std::string out;
};

int cmd_hybrid(const HybridArgs& a) {
  HybridConfig cfg;
  cfg.M = a.M;
  cfg.JM = a.JM;
  cfg.n = a.n;
  cfg.seed = a.seed;
  cfg.magnitude_floor = a.floor;
  HybridScheme scheme = build_hybrid(cfg);
  CleanCheckReport clean = receiver_clean_check(scheme);
  HybridParams p = make_hybrid_params(scheme, a.eps, a.P, a.q_override);

  json receivers = json::array();
  for (int r = 0; r < a.M; ++r) {
    int states = (r == a.M - 1) ? a.JM : 1;
    for (int s = 0; s < states; ++s) {
      AlignedConstellation cst =
          hybrid_receiver_constellation(scheme, p, r, s, a.cap);
      receivers.push_back({{"receiver", r + 1},
                           {"state", s + 1},
                           {"points", cst.size()},
                           {"favorite_digits", cst.favorite_digits()},
                           {"min_distance", cst.min_distance()}});
    }
  }
  std::vector<Rational> prof = hybrid_dof_profile(a.M, a.JM, a.n);
  json profile = json::array();
  for (const auto& d : prof) profile.push_back(rational_json(d));
  double at_eps = static_cast<double>(p.total_streams) * (1.0 - p.eps) /
                  (static_cast<double>(p.xi_h) + p.eps);

  json doc{{"format", "ciasim-hybrid/1"},
           {"tool", tool_stamp()},
           {"M", a.M},
           {"JM", a.JM},
           {"n", a.n},
           {"seed", a.seed},
           {"eps", p.eps},
           {"P", p.P},
           {"L", p.L},
           {"kappa", p.kappa_m},
           {"xi", p.xi_h},
           {"total_streams", p.total_streams},
           {"Q", p.Q},
           {"q_overridden", p.q_overridden},
           {"gamma", p.gamma},
           {"lambda", p.lambda},
           {"beta", scheme.beta},
           {"complement_rank", scheme.complement_rank},
           {"clean_check",
            {{"max_leak_ratio", clean.max_leak_ratio}, {"ok", clean.ok}}},
           {"receivers", receivers},
           {"nominal_dof",
            {{"at_eps", at_eps},
             {"limit", rational_json(hybrid_nominal_dof(a.M, a.JM, a.n))},
             {"profile", profile}}},
           {"reference_dof", rational_json(hybrid_dof_reference(a.M))}};
  emit(a.out, doc, "hybrid report");
  if (!clean.ok) {
    std::cerr << "zero-forcing leakage above tolerance: " << clean.max_leak_ratio
              << "\n";
    return kExitDiagnostic;
  }
  return kExitOk;
}

struct BoundsArgs {
  int M = 2, K = 2;
  std::vector<double> profile;
  std::string out;
};

int cmd_bounds(const BoundsArgs& a) {
  BoundCheck chk = check_outer_bounds(a.profile, a.M, a.K);
  json doc{{"format", "ciasim-bounds/1"},
           {"tool", tool_stamp()},
           {"M", a.M},
           {"K", a.K},
           {"profile", chk.profile},
           {"rotation_slack", chk.rotation_slack},
           {"aggregate_slack", chk.aggregate_slack},
           {"ok", chk.ok}};
  emit(a.out, doc, "bound check");
  if (!chk.ok) {
    std::cerr << "profile violates the outer bounds\n";
    return kExitDiagnostic;
  }
  return kExitOk;
}

// ----------------------------------------------------------------- driver

void report_error(bool json_errors, const char* type, const std::string& msg) {
  if (json_errors) {
    json doc{{"error", {{"type", type}, {"message", msg}}}};
    std::cerr << doc.dump() << "\n";
  } else {
    std::cerr << "ciasim: " << msg << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  bool json_errors = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--json-errors") json_errors = true;

  CLI::App app{"compound interference alignment simulator"};
  app.set_version_flag("--version", std::string("ciasim ") + ciasim::kVersion);
  app.add_flag("--json-errors", json_errors,
               "report errors as JSON on stderr");
  app.require_subcommand(1);

  GenChannelArgs gen;
  auto* cgen = app.add_subcommand("gen-channel", "draw a compound channel");
  cgen->add_option("--M", gen.M, "transmit antennas")->required();
  cgen->add_option("--K", gen.K, "receivers")->required();
  cgen->add_option("--J", gen.J, "states per receiver (one value broadcasts)")
      ->required()
      ->delimiter(',');
  cgen->add_option("--field", gen.field, "real or complex");
  cgen->add_option("--seed", gen.seed, "rng seed");
  cgen->add_option("--floor", gen.floor, "magnitude rejection floor");
  cgen->add_option("--out", gen.out, "output file (stdout when omitted)");

  AlignCheckArgs ali;
  auto* cali = app.add_subcommand("align-check",
                                  "audit the receive-side direction layout");
  cali->add_option("--M", ali.M)->required();
  cali->add_option("--K", ali.K)->required();
  cali->add_option("--J", ali.J)->required()->delimiter(',');
  cali->add_option("--n", ali.n, "layer parameter per receiver")
      ->required()
      ->delimiter(',');
  cali->add_option("--r", ali.r, "receiver, 1-based")->required();
  cali->add_option("--state", ali.state, "state, 1-based")->required();
  cali->add_option("--cap", ali.cap, "enumeration cap");
  cali->add_option("--out", ali.out);

  ParamsArgs par;
  auto* cpar = app.add_subcommand("params", "derive codec parameters");
  cpar->add_option("--channel", par.channel, "channel file")->required();
  cpar->add_option("--n", par.n)->required()->delimiter(',');
  cpar->add_option("--eps", par.eps, "rate back-off, in [0, 0.5)");
  cpar->add_option("--P", par.P, "transmit power")->required();
  cpar->add_option("--q-override", par.q_override, "pin the symbol range");
  cpar->add_option("--out", par.out);

  ConstellationArgs con;
  auto* ccon = app.add_subcommand("constellation",
                                  "materialize one receive constellation");
  ccon->add_option("--channel", con.channel)->required();
  ccon->add_option("--n", con.n)->required()->delimiter(',');
  ccon->add_option("--eps", con.eps);
  ccon->add_option("--P", con.P)->required();
  ccon->add_option("--r", con.r)->required();
  ccon->add_option("--state", con.state)->required();
  ccon->add_option("--q-override", con.q_override);
  ccon->add_option("--cap", con.cap, "point cap");
  ccon->add_option("--csv", con.csv, "also write the point list as CSV");
  ccon->add_option("--out", con.out);

  SimArgs sim;
  auto* csim = app.add_subcommand("simulate", "run a Monte Carlo power sweep");
  csim->add_option("--config", sim.config, "sweep config (JSON)")->required();
  csim->add_option("--out", sim.out);
  csim->add_option("--csv", sim.csv, "also write rows as CSV");
  csim->add_option("--seed", sim.seed, "override the config seed");
  csim->add_option("--threads", sim.threads, "worker threads (0: auto)");

  SimArgs dof = sim;
  auto* cdof = app.add_subcommand("dof-sweep",
                                  "power sweep plus a rate-slope fit");
  cdof->add_option("--config", dof.config, "sweep config (JSON)")->required();
  cdof->add_option("--out", dof.out);
  cdof->add_option("--csv", dof.csv);
  cdof->add_option("--seed", dof.seed);
  cdof->add_option("--threads", dof.threads);

  HybridArgs hyb;
  auto* chyb = app.add_subcommand("hybrid",
                                  "zero-forcing hybrid scheme report");
  chyb->add_option("--M", hyb.M, "antennas and receivers")->required();
  chyb->add_option("--JM", hyb.JM, "states of the compound receiver")
      ->required();
  chyb->add_option("--n", hyb.n, "layer parameter")->required();
  chyb->add_option("--eps", hyb.eps);
  chyb->add_option("--P", hyb.P)->required();
  chyb->add_option("--seed", hyb.seed);
  chyb->add_option("--floor", hyb.floor);
  chyb->add_option("--q-override", hyb.q_override);
  chyb->add_option("--cap", hyb.cap);
  chyb->add_option("--out", hyb.out);

  BoundsArgs bnd;
  auto* cbnd = app.add_subcommand("bounds", "audit a dof profile");
  cbnd->add_option("--M", bnd.M)->required();
  cbnd->add_option("--K", bnd.K)->required();
  cbnd->add_option("--profile", bnd.profile, "per-receiver dof values")
      ->required()
      ->delimiter(',');
  cbnd->add_option("--out", bnd.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(json_errors, "config", e.what());
    return ciasim::kExitConfig;
  }

  try {
    if (cgen->parsed()) return cmd_gen_channel(gen);
    if (cali->parsed()) return cmd_align_check(ali);
    if (cpar->parsed()) return cmd_params(par);
    if (ccon->parsed()) return cmd_constellation(con);
    if (csim->parsed()) return cmd_simulate(sim, false);
    if (cdof->parsed()) return cmd_simulate(dof, true);
    if (chyb->parsed()) return cmd_hybrid(hyb);
    if (cbnd->parsed()) return cmd_bounds(bnd);
  } catch (const ciasim::ConfigError& e) {
    report_error(json_errors, "config", e.what());
    return ciasim::kExitConfig;
  } catch (const ciasim::InfeasibleError& e) {
    report_error(json_errors, "infeasible", e.what());
    return ciasim::kExitInfeasible;
  } catch (const ciasim::DiagnosticError& e) {
    report_error(json_errors, "diagnostic", e.what());
    return ciasim::kExitDiagnostic;
  } catch (const std::exception& e) {
    report_error(json_errors, "internal", e.what());
    return 1;
  }
  return ciasim::kExitOk;
}
