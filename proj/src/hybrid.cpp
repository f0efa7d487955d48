#include "ciasim/hybrid.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "ciasim/rng.hpp"

namespace ciasim {

namespace {

constexpr uint64_t kTagPrecoder = 0x70726563ULL;  // "prec"
constexpr uint64_t kTagLadder = 0x6c616464ULL;    // "ladd"

// Orthonormal basis of the null space of A (rows are the constraints).
Eigen::MatrixXd null_space(const Eigen::MatrixXd& A, int cols) {
  if (A.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol =
      sv.size() > 0 ? sv(0) * 1e-12 * std::max(A.rows(), A.cols()) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

}  // namespace

void HybridConfig::validate() const {
  if (M < 2) throw ConfigError("hybrid setting needs M >= 2");
  if (JM < 1) throw ConfigError("JM must be >= 1");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (!(magnitude_floor >= 0.0) || magnitude_floor >= 1.0)
    throw ConfigError("magnitude_floor must lie in [0, 1)");
}

double HybridScheme::g(int r, int i, int s) const {
  if (r < 0 || r >= cfg.M - 1) throw ConfigError("branch index out of range");
  if (i < 0 || i >= cfg.M) throw ConfigError("column index out of range");
  if (s < 0 || s >= cfg.JM) throw ConfigError("state index out of range");
  return HM.row(s).dot(V[r].col(i));
}

MonomialSet HybridScheme::gbasis(int r, uint64_t cap) const {
  if (r < 0 || r >= cfg.M - 1) throw ConfigError("branch index out of range");
  std::vector<MonomialBox::Range> ranges;
  for (int i = 0; i < cfg.M; ++i)
    for (int s = 0; s < cfg.JM; ++s)
      ranges.emplace_back(Symbol::precoded_gain(r, i, s), 1,
                          static_cast<uint32_t>(cfg.n));
  return MonomialBox(std::move(ranges)).enumerate(cap);
}

SymbolValues HybridScheme::symbol_values() const {
  SymbolValues values;
  for (int r = 0; r < cfg.M - 1; ++r)
    for (int i = 0; i < cfg.M; ++i)
      for (int s = 0; s < cfg.JM; ++s)
        values.set(Symbol::precoded_gain(r, i, s), cdouble(g(r, i, s), 0.0));
  values.set(Symbol::geometric_base(), cdouble(beta, 0.0));
  // Steered coefficients: branch receivers see their own precoder columns;
  // for the compound receiver (index M-1) the second index is the state.
  for (int r = 0; r < cfg.M - 1; ++r)
    for (int i = 0; i < cfg.M; ++i)
      values.set(Symbol::steered_coeff(r, i),
                 cdouble(Hfirst.row(r).dot(V[r].col(i)), 0.0));
  for (int s = 0; s < cfg.JM; ++s)
    values.set(Symbol::steered_coeff(cfg.M - 1, s),
               cdouble(HM.row(s).dot(vM), 0.0));
  return values;
}

HybridScheme build_hybrid(const HybridConfig& cfg) {
  cfg.validate();

  // The channel draw reuses the compound sampler: K = M receivers, the
  // first M-1 with one state each, the last with JM states.
  ChannelConfig chan_cfg;
  chan_cfg.dims.M = cfg.M;
  chan_cfg.dims.K = cfg.M;
  chan_cfg.dims.J.assign(cfg.M, 1);
  chan_cfg.dims.J.back() = cfg.JM;
  chan_cfg.field = Field::Real;
  chan_cfg.seed = rng::derive(cfg.seed, rng::kTagChannel);
  chan_cfg.magnitude_floor = cfg.magnitude_floor;
  const ChannelRealization ch = sample_channel(chan_cfg);

  HybridScheme scheme;
  scheme.cfg = cfg;
  scheme.Hfirst.resize(cfg.M - 1, cfg.M);
  for (int r = 0; r < cfg.M - 1; ++r)
    for (int t = 0; t < cfg.M; ++t) scheme.Hfirst(r, t) = ch.coeff(r, t, 0);
  scheme.HM.resize(cfg.JM, cfg.M);
  for (int s = 0; s < cfg.JM; ++s)
    for (int t = 0; t < cfg.M; ++t) scheme.HM(s, t) = ch.coeff(cfg.M - 1, t, s);

  rng::Stream pstream(rng::derive(cfg.seed, kTagPrecoder));
  scheme.V.reserve(cfg.M - 1);
  for (int r = 0; r < cfg.M - 1; ++r) {
    Eigen::MatrixXd others(cfg.M - 2, cfg.M);
    int row = 0;
    for (int rp = 0; rp < cfg.M - 1; ++rp)
      if (rp != r) others.row(row++) = scheme.Hfirst.row(rp);
    const Eigen::MatrixXd basis = null_space(others, cfg.M);
    if (r == 0) scheme.complement_rank = static_cast<int>(basis.cols());
    if (basis.cols() == 0)
      throw DiagnosticError("zero-forcing complement collapsed to {0}");

    Eigen::MatrixXd V(cfg.M, cfg.M);
    for (int i = 0; i < cfg.M; ++i) {
      Eigen::VectorXd mix(basis.cols());
      for (int k = 0; k < mix.size(); ++k) mix(k) = pstream.normal();
      Eigen::VectorXd col = basis * mix;
      const double nrm = col.norm();
      if (!(nrm > 1e-12))
        throw DiagnosticError("degenerate precoder column draw");
      V.col(i) = col / nrm;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
    scheme.sigma_max.push_back(svd.singularValues()(0));
    scheme.V.push_back(std::move(V));
  }

  const Eigen::MatrixXd vM_basis = null_space(scheme.Hfirst, cfg.M);
  if (vM_basis.cols() < 1)
    throw DiagnosticError("no direction orthogonal to the zero-forced rows");
  if (vM_basis.cols() > 1)
    throw DiagnosticError("zero-forced rows are rank deficient");
  scheme.vM = vM_basis.col(0);

  rng::Stream lstream(rng::derive(cfg.seed, kTagLadder));
  scheme.beta = 1.1 + 0.9 * lstream.uniform01();

  const uint64_t ML = static_cast<uint64_t>(cfg.M) * cfg.JM;
  scheme.L = checked_pow(static_cast<uint64_t>(cfg.n),
                         static_cast<uint32_t>(ML), kCountCap);
  const uint64_t inner = checked_pow(
      static_cast<uint64_t>(cfg.n),
      static_cast<uint32_t>(cfg.M * (cfg.JM - 1)), kCountCap);
  const uint64_t outer = checked_pow(static_cast<uint64_t>(cfg.n) + 1,
                                     static_cast<uint32_t>(cfg.M), kCountCap);
  unsigned __int128 kap = static_cast<unsigned __int128>(inner) * outer;
  unsigned __int128 xih =
      static_cast<unsigned __int128>(cfg.M - 1) * kap + scheme.L;
  if (kap > kCountCap || xih > kCountCap)
    throw InfeasibleError("hybrid level counts exceed the cap");
  scheme.kappa_m = static_cast<uint64_t>(kap);
  scheme.xi_h = static_cast<uint64_t>(xih);

  // Generic draws keep every effective gain away from zero; an exact zero
  // would silently delete a direction.
  for (int r = 0; r < cfg.M - 1; ++r)
    for (int i = 0; i < cfg.M; ++i)
      for (int s = 0; s < cfg.JM; ++s)
        if (scheme.g(r, i, s) == 0.0)
          throw DiagnosticError("effective gain vanished for branch " +
                                std::to_string(r + 1));
  return scheme;
}

HybridParams make_hybrid_params(const HybridScheme& scheme, double eps, double P,
                                std::optional<long long> q_override) {
  if (!(eps >= 0.0) || !(eps < 0.5)) throw ConfigError("eps must lie in [0, 0.5)");
  if (!(P > 0.0) || !std::isfinite(P))
    throw ConfigError("P must be a finite positive power");

  HybridParams p;
  p.cfg = scheme.cfg;
  p.eps = eps;
  p.P = P;
  p.L = scheme.L;
  p.kappa_m = scheme.kappa_m;
  p.xi_h = scheme.xi_h;
  p.total_streams =
      (static_cast<uint64_t>(scheme.cfg.M - 1) * scheme.cfg.M + 1) * scheme.L;

  if (q_override) {
    if (*q_override < 1) throw ConfigError("q_override must be >= 1");
    p.Q = *q_override;
    p.q_overridden = true;
  } else {
    const double xid = static_cast<double>(p.xi_h);
    p.Q = floored_power(P, (1.0 - eps) / (2.0 * (xid + eps)));
    if (p.Q < 1)
      throw InfeasibleError(
          "the requested power admits no integer range (Q < 1)");
  }

  double gamma_sq = 0.0;
  const SymbolValues values = scheme.symbol_values();
  for (int r = 0; r < scheme.cfg.M - 1; ++r) {
    double basis_sq = 0.0;
    for (const Monomial& m : scheme.gbasis(r)) {
      const double v = evaluate(m, values);
      basis_sq += v * v;
    }
    gamma_sq += scheme.sigma_max[r] * scheme.sigma_max[r] * scheme.cfg.M *
                basis_sq;
  }
  double ladder_sq = 0.0;
  double bpow = 1.0;
  for (uint64_t l = 1; l <= scheme.L; ++l) {
    bpow *= scheme.beta;
    ladder_sq += bpow * bpow;
  }
  gamma_sq += scheme.vM.squaredNorm() * ladder_sq;
  p.gamma = std::sqrt(gamma_sq);
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma))
    throw DiagnosticError("degenerate hybrid normalizer");
  p.lambda = std::sqrt(P) / (p.gamma * static_cast<double>(p.Q));
  return p;
}

CleanCheckReport receiver_clean_check(const HybridScheme& scheme, int probes,
                                      uint64_t seed) {
  if (probes < 1) throw ConfigError("probes must be >= 1");
  const int M = scheme.cfg.M;
  rng::Stream stream(seed);
  CleanCheckReport rep;

  auto leakage = [&](const Eigen::VectorXd& x, int skip_branch) {
    const double xn = x.norm();
    if (!(xn > 0)) return;
    for (int r = 0; r < M - 1; ++r) {
      if (r == skip_branch) continue;
      const double cosine = std::abs(scheme.Hfirst.row(r).dot(x)) /
                            (scheme.Hfirst.row(r).norm() * xn);
      rep.max_leak_ratio = std::max(rep.max_leak_ratio, cosine);
    }
  };

  for (int p = 0; p < probes; ++p) {
    for (int b = 0; b < M - 1; ++b) {
      Eigen::VectorXd w(M);
      for (int i = 0; i < M; ++i) w(i) = stream.normal();
      leakage(scheme.V[b] * w, b);
    }
    leakage(scheme.vM * stream.normal(), -1);
  }
  rep.ok = rep.max_leak_ratio < 1e-9;
  return rep;
}

EncodedBlock hybrid_encode(const HybridScheme& scheme,
                           const HybridParams& params,
                           const StreamBlock& block) {
  if (block.streams != params.total_streams)
    throw ConfigError("stream block does not match the hybrid layout");
  const int M = scheme.cfg.M;
  const int T = block.T;
  const uint64_t L = scheme.L;

  EncodedBlock out;
  out.M = M;
  out.T = T;
  out.x.assign(static_cast<std::size_t>(M) * T, 0.0);

  const SymbolValues values = scheme.symbol_values();
  for (int r = 0; r < M - 1; ++r) {
    std::vector<double> nu;
    nu.reserve(L);
    for (const Monomial& m : scheme.gbasis(r)) nu.push_back(evaluate(m, values));
    for (int i = 0; i < M; ++i) {
      const uint64_t base = (static_cast<uint64_t>(r) * M + i) * L;
      for (int m = 0; m < T; ++m) {
        double w = 0.0;
        for (uint64_t l = 0; l < L; ++l)
          w += nu[l] * static_cast<double>(block.at(base + l, m));
        w *= params.lambda;
        for (int t = 0; t < M; ++t) out.x[static_cast<std::size_t>(t) * T + m] +=
            scheme.V[r](t, i) * w;
      }
    }
  }
  const uint64_t ladder_base = static_cast<uint64_t>(M - 1) * M * L;
  std::vector<double> bpow(L);
  double b = 1.0;
  for (uint64_t l = 0; l < L; ++l) {
    b *= scheme.beta;
    bpow[l] = b;
  }
  for (int m = 0; m < T; ++m) {
    double w = 0.0;
    for (uint64_t l = 0; l < L; ++l)
      w += bpow[l] * static_cast<double>(block.at(ladder_base + l, m));
    w *= params.lambda;
    for (int t = 0; t < M; ++t)
      out.x[static_cast<std::size_t>(t) * T + m] += scheme.vM(t) * w;
  }
  return out;
}

AlignedConstellation hybrid_receiver_constellation(const HybridScheme& scheme,
                                                   const HybridParams& params,
                                                   int r, int s_hat,
                                                   uint64_t cap) {
  const int M = scheme.cfg.M;
  if (r < 0 || r >= M) throw ConfigError("receiver index out of range");
  const int states = r == M - 1 ? scheme.cfg.JM : 1;
  if (s_hat < 0 || s_hat >= states)
    throw ConfigError("state index out of range");

  const long long fav_span = params.Q - 1;
  const long long merged_span = static_cast<long long>(M) * params.Q - 1;
  const SymbolValues values = scheme.symbol_values();
  std::vector<AlignedConstellation::Digit> digits;

  if (r < M - 1) {
    for (int i = 0; i < M; ++i) {
      const double steer = scheme.Hfirst.row(r).dot(scheme.V[r].col(i));
      for (const Monomial& m : scheme.gbasis(r))
        digits.push_back({-fav_span, fav_span,
                          cdouble(params.lambda * steer * evaluate(m, values), 0.0),
                          true});
    }
  } else {
    const double steer = scheme.HM.row(s_hat).dot(scheme.vM);
    double bpow = 1.0;
    for (uint64_t l = 0; l < scheme.L; ++l) {
      bpow *= scheme.beta;
      digits.push_back({-fav_span, fav_span,
                        cdouble(params.lambda * steer * bpow, 0.0), true});
    }
    for (int rb = 0; rb < M - 1; ++rb) {
      std::vector<MonomialBox::Range> ranges;
      for (int i = 0; i < M; ++i)
        for (int s = 0; s < scheme.cfg.JM; ++s)
          ranges.emplace_back(Symbol::precoded_gain(rb, i, s), 1,
                              static_cast<uint32_t>(scheme.cfg.n) +
                                  (s == s_hat ? 1 : 0));
      const MonomialBox box(std::move(ranges));
      for (const Monomial& m : box.enumerate(cap))
        digits.push_back({-merged_span, merged_span,
                          cdouble(params.lambda * evaluate(m, values), 0.0),
                          false});
    }
  }
  return AlignedConstellation::build(Field::Real, std::move(digits), cap);
}

Rational hybrid_nominal_dof(int M, int JM, int n, const Rational& eps) {
  HybridConfig cfg;
  cfg.M = M;
  cfg.JM = JM;
  cfg.n = n;
  cfg.validate();
  if (eps < Rational(0) || eps >= Rational(1, 2))
    throw ConfigError("eps must lie in [0, 0.5)");
  const uint64_t L = checked_pow(static_cast<uint64_t>(n),
                                 static_cast<uint32_t>(M * JM), kCountCap);
  const uint64_t inner = checked_pow(static_cast<uint64_t>(n),
                                     static_cast<uint32_t>(M * (JM - 1)),
                                     kCountCap);
  const uint64_t outer = checked_pow(static_cast<uint64_t>(n) + 1,
                                     static_cast<uint32_t>(M), kCountCap);
  unsigned __int128 kap = static_cast<unsigned __int128>(inner) * outer;
  unsigned __int128 xih = static_cast<unsigned __int128>(M - 1) * kap + L;
  unsigned __int128 streams =
      (static_cast<unsigned __int128>(M - 1) * M + 1) * L;
  if (xih > kCountCap || streams > kCountCap)
    throw InfeasibleError("hybrid level counts exceed the cap");
  return Rational(static_cast<long long>(streams)) * (Rational(1) - eps) /
         (Rational(static_cast<long long>(xih)) + eps);
}

std::vector<Rational> hybrid_dof_profile(int M, int JM, int n) {
  HybridConfig cfg;
  cfg.M = M;
  cfg.JM = JM;
  cfg.n = n;
  cfg.validate();
  const uint64_t L = checked_pow(static_cast<uint64_t>(n),
                                 static_cast<uint32_t>(M * JM), kCountCap);
  const uint64_t inner = checked_pow(static_cast<uint64_t>(n),
                                     static_cast<uint32_t>(M * (JM - 1)),
                                     kCountCap);
  const uint64_t outer = checked_pow(static_cast<uint64_t>(n) + 1,
                                     static_cast<uint32_t>(M), kCountCap);
  unsigned __int128 kap = static_cast<unsigned __int128>(inner) * outer;
  unsigned __int128 xih = static_cast<unsigned __int128>(M - 1) * kap + L;
  if (xih > kCountCap) throw InfeasibleError("hybrid level counts exceed the cap");
  const long long xi_ll = static_cast<long long>(xih);
  std::vector<Rational> profile;
  for (int r = 0; r < M - 1; ++r)
    profile.push_back(Rational(static_cast<long long>(M) *
                               static_cast<long long>(L), xi_ll));
  profile.push_back(Rational(static_cast<long long>(L), xi_ll));
  return profile;
}

Rational hybrid_dof_reference(int M) {
  if (M < 1) throw ConfigError("M must be >= 1");
  return Rational(static_cast<long long>(M) * M - M + 1, M);
}

}  // namespace ciasim
