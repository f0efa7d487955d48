// Python bindings for the core operations: channel draws, direction-set
// counting, codec construction, constellations, hybrid precoding, sweeps.
// Exact rationals cross the boundary as fractions.Fraction.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ciasim/channel.hpp"
#include "ciasim/codec.hpp"
#include "ciasim/errors.hpp"
#include "ciasim/hybrid.hpp"
#include "ciasim/monomial.hpp"
#include "ciasim/rng.hpp"
#include "ciasim/sim.hpp"
#include "ciasim/version.hpp"

namespace py = pybind11;
using namespace ciasim;

namespace {

Dims make_dims(int M, int K, const std::vector<int>& J) {
  Dims dims{M, K, J};
  dims.validate();
  return dims;
}

py::object to_fraction(const Rational& q) {
  py::object fraction = py::module_::import("fractions").attr("Fraction");
  return fraction(py::int_(q.numerator()), py::int_(q.denominator()));
}

py::list to_fractions(const std::vector<Rational>& qs) {
  py::list out;
  for (const Rational& q : qs) out.append(to_fraction(q));
  return out;
}

// Accepts int or fractions.Fraction (anything with exact numerator and
// denominator attributes); None means zero.
Rational rational_from(const py::object& obj) {
  if (obj.is_none()) return Rational(0);
  const long long num = py::cast<long long>(obj.attr("numerator"));
  const long long den = py::cast<long long>(obj.attr("denominator"));
  return Rational(num, den);
}

py::list matrix_rows(const Eigen::MatrixXd& m) {
  py::list rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    py::list row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.append(m(i, j));
    rows.append(row);
  }
  return rows;
}

py::dict alignment_dict(const AlignmentCheck& chk) {
  py::dict d;
  d["receiver"] = chk.receiver;
  d["state"] = chk.state;
  d["favorite_count"] = chk.favorite_count;
  d["favorite_expected"] = chk.favorite_expected;
  d["favorite_disjoint"] = chk.favorite_disjoint;
  py::list cells;
  for (const AlignmentCheck::InterferenceCell& cell : chk.interference) {
    py::dict c;
    c["interferer"] = cell.interferer;
    c["box_count"] = cell.box_count;
    c["kappa_expected"] = cell.kappa_expected;
    c["exact_union"] = cell.exact_union;
    c["contained"] = cell.contained;
    c["disjoint_from_favorite"] = cell.disjoint_from_favorite;
    cells.append(c);
  }
  d["interference"] = cells;
  d["total_observed"] = chk.total_observed;
  d["ok"] = chk.ok;
  return d;
}

StreamBlock block_from_lists(const std::vector<std::vector<int32_t>>& u,
                             long long Q) {
  if (u.empty()) throw ConfigError("streams must be non-empty");
  StreamBlock block;
  block.streams = u.size();
  block.T = static_cast<int>(u.front().size());
  block.Q = Q;
  block.u.reserve(u.size() * u.front().size());
  for (const auto& row : u) {
    if (row.size() != u.front().size())
      throw ConfigError("stream rows must share one length");
    block.u.insert(block.u.end(), row.begin(), row.end());
  }
  return block;
}

class PyConstellation {
 public:
  explicit PyConstellation(AlignedConstellation cst) : cst_(std::move(cst)) {}

  uint64_t size() const { return cst_.size(); }
  std::string field() const { return to_string(cst_.field()); }
  double min_distance() const { return cst_.min_distance(); }
  int favorite_digits() const { return cst_.favorite_digits(); }
  std::size_t digit_count() const { return cst_.digits().size(); }

  py::list digits() const {
    py::list out;
    for (const AlignedConstellation::Digit& d : cst_.digits()) {
      py::dict e;
      e["lo"] = d.lo;
      e["hi"] = d.hi;
      e["coeff"] = d.coeff;
      e["favorite"] = d.favorite;
      out.append(e);
    }
    return out;
  }

  py::object value_at(uint64_t i) const {
    if (cst_.field() == Field::Real) return py::float_(cst_.value_at(i));
    return py::cast(cst_.cvalue_at(i));
  }

  uint64_t detect(const py::object& y) const {
    if (cst_.field() == Field::Real) return cst_.detect(py::cast<double>(y));
    return cst_.detect(py::cast<cdouble>(y));
  }

  std::vector<long long> label_of(uint64_t i) const { return cst_.label_of(i); }
  uint64_t favorite_part(uint64_t i) const { return cst_.favorite_part(i); }

 private:
  AlignedConstellation cst_;
};

class PyChannel {
 public:
  explicit PyChannel(ChannelRealization ch) : ch_(std::move(ch)) {}

  static PyChannel sample(int M, int K, const std::vector<int>& J,
                          const std::string& field, uint64_t seed,
                          double magnitude_floor) {
    ChannelConfig cfg;
    cfg.dims = make_dims(M, K, J);
    cfg.field = field_from_string(field);
    cfg.seed = seed;
    cfg.magnitude_floor = magnitude_floor;
    return PyChannel(sample_channel(cfg));
  }

  static PyChannel load(const std::string& path) {
    return PyChannel(load_channel(path));
  }
  static PyChannel loads(const std::string& text) {
    return PyChannel(channel_from_json(text));
  }
  void save(const std::string& path) const { save_channel(ch_, path); }
  std::string dumps() const { return channel_to_json(ch_); }

  int M() const { return ch_.dims().M; }
  int K() const { return ch_.dims().K; }
  std::vector<int> J() const { return ch_.dims().J; }
  std::string field() const { return to_string(ch_.field()); }
  uint64_t seed() const { return ch_.config().seed; }

  py::object coeff(int r, int t, int s) const {
    if (ch_.field() == Field::Real) return py::float_(ch_.coeff(r, t, s));
    return py::cast(ch_.coeff_c(r, t, s));
  }

  bool genericity_ok() const { return validate_genericity(ch_).ok; }

  const ChannelRealization& raw() const { return ch_; }

 private:
  ChannelRealization ch_;
};

class PyCodec {
 public:
  PyCodec(const PyChannel& ch, const std::vector<int>& n_list, double eps,
          double P, const py::object& q_override, uint64_t basis_cap)
      : ch_(ch.raw()), tables_(build_tables(ch_, n_list, basis_cap)) {
    std::optional<long long> q;
    if (!q_override.is_none()) q = py::cast<long long>(q_override);
    params_ = make_params(ch_, tables_, eps, P, q);
  }

  long long Q() const { return params_.Q; }
  bool q_overridden() const { return params_.q_overridden; }
  double lambda_() const { return params_.lambda; }
  double gamma() const { return params_.gamma; }
  uint64_t xi() const { return params_.xi; }
  uint64_t total_streams() const { return params_.total_streams; }
  std::vector<uint64_t> L() const { return params_.L; }
  std::vector<uint64_t> kappa() const { return params_.kap; }
  double eps() const { return params_.eps; }
  double P() const { return params_.P; }

  PyConstellation constellation(int r, int s_hat, uint64_t cap) const {
    return PyConstellation(
        build_received_constellation(ch_, params_, tables_, r, s_hat, cap));
  }

  std::vector<std::vector<int32_t>> random_streams_py(uint64_t seed,
                                                      int T) const {
    const StreamBlock block = random_streams(params_, seed, T);
    std::vector<std::vector<int32_t>> out(block.streams);
    for (uint64_t j = 0; j < block.streams; ++j)
      out[j].assign(block.u.begin() + static_cast<std::ptrdiff_t>(j) * T,
                    block.u.begin() + static_cast<std::ptrdiff_t>(j + 1) * T);
    return out;
  }

  py::list encode_py(const std::vector<std::vector<int32_t>>& streams) const {
    const EncodedBlock enc =
        encode(params_, tables_, block_from_lists(streams, params_.Q));
    py::list antennas;
    for (int t = 0; t < enc.M; ++t) {
      py::list row;
      for (int m = 0; m < enc.T; ++m) {
        if (params_.field == Field::Real)
          row.append(enc.x[static_cast<std::size_t>(t) * enc.T + m]);
        else
          row.append(py::cast(enc.xc[static_cast<std::size_t>(t) * enc.T + m]));
      }
      antennas.append(row);
    }
    return antennas;
  }

 private:
  ChannelRealization ch_;
  SchemeTables tables_;
  CodecParams params_;
};

class PyHybrid {
 public:
  static PyHybrid build(int M, int JM, int n, uint64_t seed,
                        double magnitude_floor) {
    HybridConfig cfg;
    cfg.M = M;
    cfg.JM = JM;
    cfg.n = n;
    cfg.seed = seed;
    cfg.magnitude_floor = magnitude_floor;
    return PyHybrid(build_hybrid(cfg));
  }

  int M() const { return sch_.cfg.M; }
  int JM() const { return sch_.cfg.JM; }
  int n() const { return sch_.cfg.n; }
  uint64_t seed() const { return sch_.cfg.seed; }
  double beta() const { return sch_.beta; }
  int complement_rank() const { return sch_.complement_rank; }
  uint64_t L() const { return sch_.L; }
  uint64_t kappa_m() const { return sch_.kappa_m; }
  uint64_t xi_h() const { return sch_.xi_h; }
  std::vector<double> sigma_max() const { return sch_.sigma_max; }

  py::list precoder(int r) const {
    if (r < 0 || r >= sch_.cfg.M - 1)
      throw ConfigError("branch index out of range");
    return matrix_rows(sch_.V[static_cast<std::size_t>(r)]);
  }
  py::list direction() const {
    py::list out;
    for (Eigen::Index i = 0; i < sch_.vM.size(); ++i) out.append(sch_.vM(i));
    return out;
  }
  py::list channel_first() const { return matrix_rows(sch_.Hfirst); }
  py::list channel_last() const { return matrix_rows(sch_.HM); }
  double gain(int r, int i, int s) const { return sch_.g(r, i, s); }

  py::dict clean_check(int probes, uint64_t seed) const {
    const CleanCheckReport rep = receiver_clean_check(sch_, probes, seed);
    py::dict d;
    d["ok"] = rep.ok;
    d["max_leak_ratio"] = rep.max_leak_ratio;
    return d;
  }

  py::dict params(double eps, double P, const py::object& q_override) const {
    const HybridParams hp = make_params_(eps, P, q_override);
    py::dict d;
    d["Q"] = hp.Q;
    d["q_overridden"] = hp.q_overridden;
    d["lambda"] = hp.lambda;
    d["gamma"] = hp.gamma;
    d["L"] = hp.L;
    d["kappa_m"] = hp.kappa_m;
    d["xi_h"] = hp.xi_h;
    d["total_streams"] = hp.total_streams;
    return d;
  }

  PyConstellation constellation(int r, int s_hat, double eps, double P,
                                const py::object& q_override,
                                uint64_t cap) const {
    return PyConstellation(hybrid_receiver_constellation(
        sch_, make_params_(eps, P, q_override), r, s_hat, cap));
  }

 private:
  explicit PyHybrid(HybridScheme sch) : sch_(std::move(sch)) {}

  HybridParams make_params_(double eps, double P,
                            const py::object& q_override) const {
    std::optional<long long> q;
    if (!q_override.is_none()) q = py::cast<long long>(q_override);
    return make_hybrid_params(sch_, eps, P, q);
  }

  HybridScheme sch_;
};

}  // namespace

PYBIND11_MODULE(_ciasim, m) {
  m.doc() = "Layered interference alignment and hybrid zero-forcing core";
  m.attr("__version__") = kVersion;
  m.attr("rng_algorithm") = rng::kAlgorithmId;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError",
                                          PyExc_RuntimeError);
  py::register_exception<DiagnosticError>(m, "DiagnosticError",
                                          PyExc_RuntimeError);

  m.def(
      "layer_count",
      [](int M, int K, const std::vector<int>& J, int r, int n) {
        return layer_count(make_dims(M, K, J), r, n);
      },
      py::arg("M"), py::arg("K"), py::arg("J"), py::arg("r"), py::arg("n"),
      "Number of layered directions at receiver r.");
  m.def(
      "kappa",
      [](int M, int K, const std::vector<int>& J, int r_hat, int n) {
        return kappa(make_dims(M, K, J), r_hat, n);
      },
      py::arg("M"), py::arg("K"), py::arg("J"), py::arg("r_hat"), py::arg("n"),
      "Merged interference block size caused by interferer r_hat.");
  m.def(
      "xi",
      [](int M, int K, const std::vector<int>& J,
         const std::vector<int>& n_list) {
        return xi(make_dims(M, K, J), n_list);
      },
      py::arg("M"), py::arg("K"), py::arg("J"), py::arg("n_list"),
      "Worst-case distinct receive level count (rate normalizer).");
  m.def(
      "choose_n",
      [](int M, int K, const std::vector<int>& J, int r, uint64_t budget) {
        return choose_n(make_dims(M, K, J), r, budget);
      },
      py::arg("M"), py::arg("K"), py::arg("J"), py::arg("r"),
      py::arg("budget"),
      "Largest layer parameter whose direction set fits the budget.");
  m.def(
      "verify_alignment",
      [](int M, int K, const std::vector<int>& J,
         const std::vector<int>& n_list, int r, int s_hat) {
        return alignment_dict(
            verify_alignment(make_dims(M, K, J), n_list, r, s_hat));
      },
      py::arg("M"), py::arg("K"), py::arg("J"), py::arg("n_list"),
      py::arg("r"), py::arg("s_hat"),
      "Audit the favorite/interference direction sets at one receiver state.");

  m.def(
      "nominal_dof",
      [](int M, int K, const std::vector<int>& J,
         const std::vector<int>& n_list, const py::object& eps) {
        return to_fraction(
            nominal_dof(make_dims(M, K, J), n_list, rational_from(eps)));
      },
      py::arg("M"), py::arg("K"), py::arg("J"), py::arg("n_list"),
      py::arg("eps") = py::none(),
      "Exact rate total of the layered scheme (eps as int or Fraction).");
  m.def(
      "dof_profile",
      [](int M, int K, const std::vector<int>& J,
         const std::vector<int>& n_list) {
        return to_fractions(dof_profile(make_dims(M, K, J), n_list));
      },
      py::arg("M"), py::arg("K"), py::arg("J"), py::arg("n_list"),
      "Exact per-receiver rate split in the small-eps limit.");
  m.def(
      "dof_reference",
      [](int M, int K) {
        const DofReference ref = dof_reference(M, K);
        py::dict d;
        d["complex"] = to_fraction(ref.complex_total);
        d["real"] = to_fraction(ref.real_total);
        return d;
      },
      py::arg("M"), py::arg("K"),
      "Benchmark totals MK/(M+K-1) and 2MK/(2M+2K-1).");

  m.def(
      "hybrid_nominal_dof",
      [](int M, int JM, int n, const py::object& eps) {
        return to_fraction(hybrid_nominal_dof(M, JM, n, rational_from(eps)));
      },
      py::arg("M"), py::arg("JM"), py::arg("n"), py::arg("eps") = py::none(),
      "Exact rate total of the hybrid scheme.");
  m.def(
      "hybrid_dof_profile",
      [](int M, int JM, int n) {
        return to_fractions(hybrid_dof_profile(M, JM, n));
      },
      py::arg("M"), py::arg("JM"), py::arg("n"),
      "Exact per-receiver rate split of the hybrid scheme.");
  m.def(
      "hybrid_dof_reference",
      [](int M) { return to_fraction(hybrid_dof_reference(M)); }, py::arg("M"),
      "Benchmark total (M*M + M - 1) / (2M - 1).");

  m.def("floored_power", &floored_power, py::arg("base"), py::arg("expo"),
        "floor(base^expo) with an exact-power fix-up.");
  m.def("pe_bound", &pe_bound, py::arg("dmin"), py::arg("noise_stddev") = 1.0,
        "Nearest-neighbour pairwise error bound Q(dmin / (2 sigma)).");
  m.def(
      "check_outer_bounds",
      [](const std::vector<double>& profile, int M, int K) {
        const BoundCheck chk = check_outer_bounds(profile, M, K);
        py::dict d;
        d["ok"] = chk.ok;
        d["rotation_slack"] = chk.rotation_slack;
        d["aggregate_slack"] = chk.aggregate_slack;
        return d;
      },
      py::arg("profile"), py::arg("M"), py::arg("K"),
      "Test a per-receiver split against the converse region.");

  m.def(
      "run_sweep_json",
      [](const std::string& config_json, bool fit) {
        const SweepConfig cfg = sweep_config_from_json(config_json);
        SimReport rep;
        {
          py::gil_scoped_release release;
          rep = run_sweep(cfg, fit);
        }
        return report_to_json(rep);
      },
      py::arg("config_json"), py::arg("fit") = true,
      "Run a power sweep from a JSON config string; returns the report JSON.");
  m.def(
      "run_sweep_csv",
      [](const std::string& config_json, bool fit) {
        const SweepConfig cfg = sweep_config_from_json(config_json);
        SimReport rep;
        {
          py::gil_scoped_release release;
          rep = run_sweep(cfg, fit);
        }
        return report_to_csv(rep);
      },
      py::arg("config_json"), py::arg("fit") = true,
      "Run a power sweep from a JSON config string; returns the row CSV.");

  py::class_<PyConstellation>(m, "Constellation")
      .def_property_readonly("size", &PyConstellation::size)
      .def("__len__", &PyConstellation::size)
      .def_property_readonly("field", &PyConstellation::field)
      .def_property_readonly("min_distance", &PyConstellation::min_distance)
      .def_property_readonly("favorite_digits",
                             &PyConstellation::favorite_digits)
      .def_property_readonly("digit_count", &PyConstellation::digit_count)
      .def("digits", &PyConstellation::digits)
      .def("value_at", &PyConstellation::value_at, py::arg("index"))
      .def("detect", &PyConstellation::detect, py::arg("y"))
      .def("label_of", &PyConstellation::label_of, py::arg("index"))
      .def("favorite_part", &PyConstellation::favorite_part, py::arg("index"));

  py::class_<PyChannel>(m, "Channel")
      .def_static("sample", &PyChannel::sample, py::arg("M"), py::arg("K"),
                  py::arg("J"), py::arg("field") = "real", py::arg("seed") = 0,
                  py::arg("magnitude_floor") = 1e-3)
      .def_static("load", &PyChannel::load, py::arg("path"))
      .def_static("loads", &PyChannel::loads, py::arg("text"))
      .def("save", &PyChannel::save, py::arg("path"))
      .def("dumps", &PyChannel::dumps)
      .def_property_readonly("M", &PyChannel::M)
      .def_property_readonly("K", &PyChannel::K)
      .def_property_readonly("J", &PyChannel::J)
      .def_property_readonly("field", &PyChannel::field)
      .def_property_readonly("seed", &PyChannel::seed)
      .def("coeff", &PyChannel::coeff, py::arg("r"), py::arg("t"),
           py::arg("s"))
      .def_property_readonly("genericity_ok", &PyChannel::genericity_ok);

  py::class_<PyCodec>(m, "Codec")
      .def(py::init<const PyChannel&, const std::vector<int>&, double, double,
                    const py::object&, uint64_t>(),
           py::arg("channel"), py::arg("n_list"), py::arg("eps"), py::arg("P"),
           py::arg("q_override") = py::none(),
           py::arg("basis_cap") = kDefaultBasisCap)
      .def_property_readonly("Q", &PyCodec::Q)
      .def_property_readonly("q_overridden", &PyCodec::q_overridden)
      .def_property_readonly("lambda_", &PyCodec::lambda_)
      .def_property_readonly("gamma", &PyCodec::gamma)
      .def_property_readonly("xi", &PyCodec::xi)
      .def_property_readonly("total_streams", &PyCodec::total_streams)
      .def_property_readonly("L", &PyCodec::L)
      .def_property_readonly("kappa", &PyCodec::kappa)
      .def_property_readonly("eps", &PyCodec::eps)
      .def_property_readonly("P", &PyCodec::P)
      .def("constellation", &PyCodec::constellation, py::arg("r"),
           py::arg("s_hat"), py::arg("cap") = kDefaultPointCap)
      .def("random_streams", &PyCodec::random_streams_py, py::arg("seed"),
           py::arg("T"))
      .def("encode", &PyCodec::encode_py, py::arg("streams"));

  py::class_<PyHybrid>(m, "Hybrid")
      .def_static("build", &PyHybrid::build, py::arg("M"), py::arg("JM"),
                  py::arg("n"), py::arg("seed") = 0,
                  py::arg("magnitude_floor") = 1e-3)
      .def_property_readonly("M", &PyHybrid::M)
      .def_property_readonly("JM", &PyHybrid::JM)
      .def_property_readonly("n", &PyHybrid::n)
      .def_property_readonly("seed", &PyHybrid::seed)
      .def_property_readonly("beta", &PyHybrid::beta)
      .def_property_readonly("complement_rank", &PyHybrid::complement_rank)
      .def_property_readonly("L", &PyHybrid::L)
      .def_property_readonly("kappa_m", &PyHybrid::kappa_m)
      .def_property_readonly("xi_h", &PyHybrid::xi_h)
      .def_property_readonly("sigma_max", &PyHybrid::sigma_max)
      .def("precoder", &PyHybrid::precoder, py::arg("r"))
      .def("direction", &PyHybrid::direction)
      .def("channel_first", &PyHybrid::channel_first)
      .def("channel_last", &PyHybrid::channel_last)
      .def("gain", &PyHybrid::gain, py::arg("r"), py::arg("i"), py::arg("s"))
      .def("clean_check", &PyHybrid::clean_check, py::arg("probes") = 32,
           py::arg("seed") = 1)
      .def("params", &PyHybrid::params, py::arg("eps"), py::arg("P"),
           py::arg("q_override") = py::none())
      .def("constellation", &PyHybrid::constellation, py::arg("r"),
           py::arg("s_hat"), py::arg("eps"), py::arg("P"),
           py::arg("q_override") = py::none(),
           py::arg("cap") = kDefaultPointCap);
}
