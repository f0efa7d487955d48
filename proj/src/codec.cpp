#include "ciasim/codec.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numeric>

#include "ciasim/rng.hpp"

namespace ciasim {

namespace {

void check_eps(double eps) {
  if (!(eps >= 0.0) || !(eps < 0.5) || !std::isfinite(eps))
    throw ConfigError("eps must lie in [0, 0.5)");
}

void check_power(double P) {
  if (!(P > 0.0) || !std::isfinite(P))
    throw ConfigError("P must be a finite positive power");
}

}  // namespace

long long floored_power(double base, double expo) {
  const double raw = std::pow(base, expo);
  if (!std::isfinite(raw) || raw >= 9e18)
    throw InfeasibleError("integer range parameter overflows");
  long long q = static_cast<long long>(std::floor(raw));
  if (q >= 0 &&
      std::pow(static_cast<double>(q + 1), 1.0 / expo) <= base * (1.0 + 1e-12))
    ++q;
  return q;
}

SchemeTables build_tables(const ChannelRealization& ch,
                          std::span<const int> n_list, uint64_t basis_cap) {
  const Dims& dims = ch.dims();
  dims.validate();
  if (static_cast<int>(n_list.size()) != dims.K)
    throw ConfigError("need one layer parameter n per receiver");

  SchemeTables tables;
  tables.dims = dims;
  tables.n.assign(n_list.begin(), n_list.end());
  tables.basis.resize(dims.K);
  tables.nu.resize(dims.K);
  tables.stream_offset.resize(dims.K);

  const SymbolValues values = channel_symbol_values(ch);
  uint64_t offset = 0;
  for (int r = 0; r < dims.K; ++r) {
    tables.basis[r] = build_basis(dims, r, n_list[r], basis_cap);
    tables.nu[r].reserve(tables.basis[r].size());
    for (const Monomial& m : tables.basis[r])
      tables.nu[r].push_back(evaluate_c(m, values));
    tables.stream_offset[r] = offset;
    offset += static_cast<uint64_t>(dims.M) * tables.basis[r].size();
  }
  tables.total_streams = offset;
  return tables;
}

CodecParams make_params(const ChannelRealization& ch, const SchemeTables& tables,
                        double eps, double P,
                        std::optional<long long> q_override) {
  check_eps(eps);
  check_power(P);
  if (!(ch.dims() == tables.dims))
    throw ConfigError("tables were built for different dimensions");

  CodecParams p;
  p.dims = tables.dims;
  p.field = ch.field();
  p.n = tables.n;
  p.eps = eps;
  p.P = P;

  const XiBreakdown xb = xi_breakdown(p.dims, p.n);
  p.L = xb.L;
  p.kap = xb.kappa;
  p.xi = xb.xi;
  p.total_streams = tables.total_streams;

  if (q_override) {
    if (*q_override < 1) throw ConfigError("q_override must be >= 1");
    p.Q = *q_override;
    p.q_overridden = true;
  } else {
    const double xid = static_cast<double>(p.xi);
    long long q;
    if (p.field == Field::Real)
      q = floored_power(P / p.dims.M, (1.0 - eps) / (2.0 * (xid + eps)));
    else
      q = floored_power(P, (1.0 - eps) / (xid + 2.0 * eps));
    if (q < 1)
      throw InfeasibleError(
          "the requested power admits no integer range (Q < 1); raise P or "
          "lower eps");
    p.Q = q;
  }

  double gamma_sq = 0.0;
  for (const auto& per_receiver : tables.nu)
    for (const cdouble& v : per_receiver) gamma_sq += std::norm(v);
  p.gamma = std::sqrt(gamma_sq);
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma))
    throw DiagnosticError("degenerate direction normalizer");
  p.lambda = std::sqrt(P / p.dims.M) / (p.gamma * static_cast<double>(p.Q));
  return p;
}

StreamBlock random_streams(uint64_t streams, long long Q, uint64_t seed, int T) {
  if (T < 1) throw ConfigError("T must be >= 1");
  if (Q < 1) throw ConfigError("Q must be >= 1");
  if (Q > (1LL << 30)) throw ConfigError("Q too large for 32-bit symbols");
  StreamBlock block;
  block.streams = streams;
  block.T = T;
  block.Q = Q;
  const uint64_t total = streams * static_cast<uint64_t>(T);
  if (total > (1ULL << 31))
    throw ConfigError("stream block too large to materialize");
  block.u.resize(total);
  rng::Stream stream(seed);
  const uint64_t range = 2 * static_cast<uint64_t>(Q) - 1;
  const long long shift = Q - 1;
  for (auto& v : block.u)
    v = static_cast<int32_t>(static_cast<long long>(stream.below(range)) - shift);
  return block;
}

StreamBlock random_streams(const CodecParams& params, uint64_t seed, int T) {
  return random_streams(params.total_streams, params.Q, seed, T);
}

EncodedBlock encode(const CodecParams& params, const SchemeTables& tables,
                    const StreamBlock& block) {
  if (block.streams != tables.total_streams)
    throw ConfigError("stream block does not match the tables");
  EncodedBlock out;
  out.M = params.dims.M;
  out.T = block.T;
  const int T = block.T;
  const bool complex_field = params.field == Field::Complex;
  if (complex_field)
    out.xc.assign(static_cast<std::size_t>(out.M) * T, cdouble(0.0, 0.0));
  else
    out.x.assign(static_cast<std::size_t>(out.M) * T, 0.0);

  for (int r = 0; r < params.dims.K; ++r) {
    const auto& nu = tables.nu[r];
    for (int t = 0; t < out.M; ++t) {
      const uint64_t base =
          tables.stream_offset[r] + static_cast<uint64_t>(t) * nu.size();
      for (std::size_t l = 0; l < nu.size(); ++l) {
        const int32_t* u = &block.u[(base + l) * T];
        if (complex_field) {
          cdouble* x = &out.xc[static_cast<std::size_t>(t) * T];
          const cdouble c = nu[l];
          for (int m = 0; m < T; ++m) x[m] += c * static_cast<double>(u[m]);
        } else {
          double* x = &out.x[static_cast<std::size_t>(t) * T];
          const double c = nu[l].real();
          for (int m = 0; m < T; ++m) x[m] += c * static_cast<double>(u[m]);
        }
      }
    }
  }
  if (complex_field)
    for (cdouble& v : out.xc) v *= params.lambda;
  else
    for (double& v : out.x) v *= params.lambda;
  return out;
}

AlignedConstellation AlignedConstellation::build(Field field,
                                                 std::vector<Digit> digits,
                                                 uint64_t cap) {
  if (digits.empty()) throw ConfigError("constellation needs at least one digit");

  AlignedConstellation c;
  c.field_ = field;
  c.digits_ = std::move(digits);

  bool seen_tail = false;
  unsigned __int128 size = 1;
  unsigned __int128 tail = 1;
  for (const Digit& d : c.digits_) {
    if (d.hi < d.lo) throw ConfigError("digit range must satisfy lo <= hi");
    if (field == Field::Real && d.coeff.imag() != 0.0)
      throw ConfigError("real constellation with a complex coefficient");
    const uint64_t radix = static_cast<uint64_t>(d.hi - d.lo + 1);
    size *= radix;
    if (d.favorite) {
      if (seen_tail)
        throw ConfigError("favorite digits must precede merged digits");
      ++c.favorite_digits_;
    } else {
      seen_tail = true;
      tail *= radix;
    }
    if (size > cap)
      throw InfeasibleError("constellation of " + std::to_string(double(size)) +
                            " points exceeds the cap of " + std::to_string(cap));
  }
  if (size > UINT32_MAX)
    throw InfeasibleError("constellation exceeds the 2^32-1 point limit");
  c.size_ = static_cast<uint64_t>(size);
  c.tail_block_ = static_cast<uint64_t>(tail);

  for (std::size_t i = 0; i < c.digits_.size(); ++i)
    for (std::size_t j = i + 1; j < c.digits_.size(); ++j)
      if (c.digits_[i].coeff == c.digits_[j].coeff)
        throw DiagnosticError(
            "coefficient collision between digits " + std::to_string(i) +
            " and " + std::to_string(j) +
            ": two distinct directions evaluate to the same value");

  const std::size_t npts = static_cast<std::size_t>(c.size_);
  const std::size_t ndig = c.digits_.size();
  if (field == Field::Real) {
    c.values_.resize(npts);
    std::size_t pos = 0;
    // Depth-first enumeration; each leaf value is a fresh sum of at most
    // `ndig` terms, so no rounding drift accumulates across points.
    auto rec = [&](auto&& self, std::size_t i, double partial) -> void {
      if (i == ndig) {
        c.values_[pos++] = partial;
        return;
      }
      const Digit& d = c.digits_[i];
      const double coeff = d.coeff.real();
      for (long long v = d.lo; v <= d.hi; ++v)
        self(self, i + 1, partial + coeff * static_cast<double>(v));
    };
    rec(rec, 0, 0.0);

    c.order_.resize(npts);
    std::iota(c.order_.begin(), c.order_.end(), 0u);
    std::sort(c.order_.begin(), c.order_.end(), [&](uint32_t a, uint32_t b) {
      if (c.values_[a] != c.values_[b]) return c.values_[a] < c.values_[b];
      return a < b;
    });
    std::vector<double> sorted(npts);
    for (std::size_t i = 0; i < npts; ++i) sorted[i] = c.values_[c.order_[i]];
    c.values_ = std::move(sorted);

    c.dmin_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < npts; ++i)
      c.dmin_ = std::min(c.dmin_, c.values_[i + 1] - c.values_[i]);
    if (npts < 2) c.dmin_ = 0.0;
  } else {
    c.cvalues_.resize(npts);
    std::size_t pos = 0;
    auto rec = [&](auto&& self, std::size_t i, cdouble partial) -> void {
      if (i == ndig) {
        c.cvalues_[pos++] = partial;
        return;
      }
      const Digit& d = c.digits_[i];
      for (long long v = d.lo; v <= d.hi; ++v)
        self(self, i + 1, partial + d.coeff * static_cast<double>(v));
    };
    rec(rec, 0, cdouble(0.0, 0.0));

    auto lex_less = [](const cdouble& a, const cdouble& b) {
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    };
    c.order_.resize(npts);
    std::iota(c.order_.begin(), c.order_.end(), 0u);
    std::sort(c.order_.begin(), c.order_.end(), [&](uint32_t a, uint32_t b) {
      if (c.cvalues_[a] != c.cvalues_[b]) return lex_less(c.cvalues_[a], c.cvalues_[b]);
      return a < b;
    });
    std::vector<cdouble> sorted(npts);
    for (std::size_t i = 0; i < npts; ++i) sorted[i] = c.cvalues_[c.order_[i]];
    c.cvalues_ = std::move(sorted);

    // Sweep over the re-sorted points: only neighbors closer in re than the
    // best distance so far can improve it.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < npts; ++i)
      for (std::size_t j = i + 1; j < npts; ++j) {
        const double dre = c.cvalues_[j].real() - c.cvalues_[i].real();
        if (dre >= best) break;
        best = std::min(best, std::abs(c.cvalues_[j] - c.cvalues_[i]));
      }
    c.dmin_ = npts < 2 ? 0.0 : best;
  }
  return c;
}

std::vector<long long> AlignedConstellation::label_of(uint64_t index) const {
  if (index >= size_) throw ConfigError("constellation index out of range");
  std::vector<long long> label(digits_.size());
  for (std::size_t i = digits_.size(); i-- > 0;) {
    const Digit& d = digits_[i];
    const uint64_t radix = static_cast<uint64_t>(d.hi - d.lo + 1);
    label[i] = d.lo + static_cast<long long>(index % radix);
    index /= radix;
  }
  return label;
}

double AlignedConstellation::value_at(uint64_t index) const {
  if (field_ != Field::Real)
    throw ConfigError("value_at() is for real constellations");
  return cvalue_at(index).real();
}

cdouble AlignedConstellation::cvalue_at(uint64_t index) const {
  const std::vector<long long> label = label_of(index);
  cdouble acc(0.0, 0.0);
  for (std::size_t i = 0; i < digits_.size(); ++i)
    acc += digits_[i].coeff * static_cast<double>(label[i]);
  return acc;
}

uint64_t AlignedConstellation::detect(double y) const {
  if (field_ != Field::Real)
    throw ConfigError("real detect() on a complex constellation");
  const auto it = std::lower_bound(values_.begin(), values_.end(), y);
  std::size_t pos = static_cast<std::size_t>(it - values_.begin());
  if (pos == values_.size()) {
    pos = values_.size() - 1;
  } else if (pos > 0) {
    const double up = values_[pos] - y;
    const double down = y - values_[pos - 1];
    if (down <= up) pos -= 1;  // ties resolve to the smaller point
  }
  return order_[pos];
}

uint64_t AlignedConstellation::detect(cdouble y) const {
  if (field_ != Field::Complex)
    throw ConfigError("complex detect() on a real constellation");
  const std::size_t n = cvalues_.size();
  const auto it = std::lower_bound(
      cvalues_.begin(), cvalues_.end(), y.real(),
      [](const cdouble& p, double re) { return p.real() < re; });
  const std::size_t start = static_cast<std::size_t>(it - cvalues_.begin());

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_pos = 0;
  auto consider = [&](std::size_t pos) {
    const double d = std::abs(cvalues_[pos] - y);
    if (d < best) {
      best = d;
      best_pos = pos;
    } else if (d == best) {
      const cdouble& a = cvalues_[pos];
      const cdouble& b = cvalues_[best_pos];
      const bool smaller = a.real() != b.real() ? a.real() < b.real()
                                                : a.imag() < b.imag();
      if (smaller) best_pos = pos;
    }
  };
  // Walk outward from the re-insertion point; once the re gap alone exceeds
  // the best distance no further point on that side can win.
  std::size_t right = start;
  std::size_t left = start;
  bool more = true;
  while (more) {
    more = false;
    if (right < n && (best == std::numeric_limits<double>::infinity() ||
                      cvalues_[right].real() - y.real() <= best)) {
      consider(right);
      ++right;
      more = true;
    }
    if (left > 0 && (best == std::numeric_limits<double>::infinity() ||
                     y.real() - cvalues_[left - 1].real() <= best)) {
      consider(left - 1);
      --left;
      more = true;
    }
  }
  return order_[best_pos];
}

AlignedConstellation build_received_constellation(
    const ChannelRealization& ch, const CodecParams& params,
    const SchemeTables& tables, int r, int s_hat, uint64_t cap) {
  const Dims& dims = params.dims;
  if (r < 0 || r >= dims.K) throw ConfigError("receiver index out of range");
  if (s_hat < 0 || s_hat >= dims.J[r])
    throw ConfigError("state index out of range");

  std::vector<AlignedConstellation::Digit> digits;
  const long long fav_span = params.Q - 1;
  const long long merged_span =
      static_cast<long long>(dims.M) * params.Q - 1;

  for (int t = 0; t < dims.M; ++t) {
    const cdouble h = ch.coeff_c(r, t, s_hat);
    for (const cdouble& nu : tables.nu[r])
      digits.push_back({-fav_span, fav_span, params.lambda * h * nu, true});
  }
  const SymbolValues values = channel_symbol_values(ch);
  for (int rh = 0; rh < dims.K; ++rh) {
    if (rh == r) continue;
    const MonomialBox box = interference_box(dims, rh, r, s_hat, params.n[rh]);
    for (const Monomial& m : box.enumerate(cap))
      digits.push_back({-merged_span, merged_span,
                        params.lambda * evaluate_c(m, values), false});
  }
  return AlignedConstellation::build(params.field, std::move(digits), cap);
}

double min_distance(std::vector<double> values) {
  if (values.size() < 2)
    throw ConfigError("min_distance needs at least two points");
  std::sort(values.begin(), values.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    best = std::min(best, values[i + 1] - values[i]);
  return best;
}

double min_distance(std::vector<cdouble> values) {
  if (values.size() < 2)
    throw ConfigError("min_distance needs at least two points");
  std::sort(values.begin(), values.end(), [](const cdouble& a, const cdouble& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      const double dre = values[j].real() - values[i].real();
      if (dre >= best) break;
      best = std::min(best, std::abs(values[j] - values[i]));
    }
  return best;
}

namespace {

void check_eps_rational(const Rational& eps) {
  if (eps < Rational(0) || eps >= Rational(1, 2))
    throw ConfigError("eps must lie in [0, 0.5)");
}

}  // namespace

Rational nominal_dof(const Dims& dims, std::span<const int> n_list,
                     const Rational& eps) {
  check_eps_rational(eps);
  const XiBreakdown xb = xi_breakdown(dims, n_list);
  long long total_layers = 0;
  for (uint64_t L : xb.L) {
    if (L > static_cast<uint64_t>(LLONG_MAX) - total_layers)
      throw InfeasibleError("layer total overflows");
    total_layers += static_cast<long long>(L);
  }
  const Rational streams = Rational(dims.M) * Rational(total_layers);
  return streams * (Rational(1) - eps) /
         (Rational(static_cast<long long>(xb.xi)) + eps);
}

std::vector<Rational> dof_profile(const Dims& dims, std::span<const int> n_list) {
  const XiBreakdown xb = xi_breakdown(dims, n_list);
  std::vector<Rational> profile;
  profile.reserve(dims.K);
  for (int r = 0; r < dims.K; ++r)
    profile.push_back(Rational(dims.M) *
                      Rational(static_cast<long long>(xb.L[r])) /
                      Rational(static_cast<long long>(xb.xi)));
  return profile;
}

DofReference dof_reference(int M, int K) {
  if (M < 1 || K < 1) throw ConfigError("M and K must be >= 1");
  DofReference ref;
  ref.complex_total = Rational(static_cast<long long>(M) * K, M + K - 1);
  ref.real_total = Rational(2LL * M * K, 2LL * M + 2 * K - 1);
  return ref;
}

}  // namespace ciasim
