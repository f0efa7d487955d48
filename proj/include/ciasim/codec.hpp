#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ciasim/channel.hpp"
#include "ciasim/monomial.hpp"
#include "ciasim/rational.hpp"

namespace ciasim {

inline constexpr uint64_t kDefaultPointCap = 1'000'000;

// Per-receiver direction sets evaluated against one channel draw. Stream
// (r, t, l) has the flat id stream_offset[r] + t * L_r + l. Only the basis
// enumeration depends on the caps; the closed-form counts never do.
struct SchemeTables {
  Dims dims;
  std::vector<int> n;                    // layer parameter per receiver
  std::vector<MonomialSet> basis;        // per receiver, ascending
  std::vector<std::vector<cdouble>> nu;  // basis values under the draw
  std::vector<uint64_t> stream_offset;
  uint64_t total_streams = 0;
};

SchemeTables build_tables(const ChannelRealization& ch,
                          std::span<const int> n_list,
                          uint64_t basis_cap = kDefaultBasisCap);

// Everything derived from (channel, n, eps, P) that the codec needs.
struct CodecParams {
  Dims dims;
  Field field = Field::Real;
  std::vector<int> n;
  double eps = 0.05;
  double P = 0.0;

  std::vector<uint64_t> L;      // layer counts per receiver
  std::vector<uint64_t> kap;    // merged block sizes per interferer
  uint64_t xi = 0;
  uint64_t total_streams = 0;   // M * sum L

  long long Q = 0;              // per-symbol integer range parameter
  bool q_overridden = false;
  double gamma = 0.0;           // direction-power normalizer Gamma
  double lambda = 0.0;          // symbol scale: lambda * Gamma * Q = sqrt(P/M)
};

// floor(base^expo) with a relative fix-up (1e-12) so exact integer powers
// are not lost to floating-point rounding.
long long floored_power(double base, double expo);

// eps in [0, 0.5); P > 0. The integer range follows
//   real:    Q = floor((P/M)^((1-eps) / (2*(xi+eps))))
//   complex: Q = floor(P^((1-eps) / (xi+2*eps)))
// (with a tolerance fix-up against floating error at exact integer powers).
// Q < 1 without an override throws InfeasibleError. q_override pins Q while
// keeping the power normalization exact.
CodecParams make_params(const ChannelRealization& ch, const SchemeTables& tables,
                        double eps, double P,
                        std::optional<long long> q_override = {});

// T i.i.d. uniform data symbols per stream, each in [-(Q-1), Q-1].
struct StreamBlock {
  uint64_t streams = 0;
  int T = 0;
  long long Q = 1;
  std::vector<int32_t> u;  // stream-major: u[j * T + m]

  int32_t at(uint64_t j, int m) const { return u[j * static_cast<uint64_t>(T) + m]; }
};

StreamBlock random_streams(const CodecParams& params, uint64_t seed, int T);
StreamBlock random_streams(uint64_t streams, long long Q, uint64_t seed, int T);

// Transmit block, antenna-major: x[t * T + m]. Real channels fill `x`,
// complex channels fill `xc`.
struct EncodedBlock {
  int M = 0;
  int T = 0;
  std::vector<double> x;
  std::vector<cdouble> xc;
};

EncodedBlock encode(const CodecParams& params, const SchemeTables& tables,
                    const StreamBlock& block);

// The noiseless receive constellation at one (receiver, state), expressed in
// mixed-radix digits. Favorite digits come first (most significant), one per
// desired stream with 2Q-1 levels; merged digits follow, one per interference
// box slot with 2MQ-1 levels. Point values are lambda * sum(coeff * digit).
class AlignedConstellation {
 public:
  struct Digit {
    long long lo = 0, hi = 0;  // inclusive integer range of the digit
    cdouble coeff;             // lambda folded in
    bool favorite = false;
  };

  static AlignedConstellation build(Field field, std::vector<Digit> digits,
                                    uint64_t cap);

  Field field() const { return field_; }
  uint64_t size() const { return size_; }
  const std::vector<Digit>& digits() const { return digits_; }
  int favorite_digits() const { return favorite_digits_; }

  // Index arithmetic. Indices refer to the ascending mixed-radix
  // enumeration, digit 0 most significant.
  std::vector<long long> label_of(uint64_t index) const;
  uint64_t favorite_part(uint64_t index) const { return index / tail_block_; }
  double value_at(uint64_t index) const;
  cdouble cvalue_at(uint64_t index) const;

  // Smallest pairwise distance (0 when two points coincide).
  double min_distance() const { return dmin_; }

  // Nearest-point decision; ties resolve to the smaller point (then the
  // smaller index). Returns the enumeration index.
  uint64_t detect(double y) const;
  uint64_t detect(cdouble y) const;

  const std::vector<double>& sorted_values() const { return values_; }
  const std::vector<cdouble>& sorted_cvalues() const { return cvalues_; }
  const std::vector<uint32_t>& sorted_index() const { return order_; }

 private:
  Field field_ = Field::Real;
  std::vector<Digit> digits_;
  int favorite_digits_ = 0;
  uint64_t size_ = 0;
  uint64_t tail_block_ = 1;  // product of non-favorite radixes
  double dmin_ = 0.0;
  std::vector<double> values_;    // ascending
  std::vector<cdouble> cvalues_;  // ascending lexicographically (re, im)
  std::vector<uint32_t> order_;   // enumeration index per sorted slot
};

// Receive constellation of receiver r in state s_hat under the scheme
// tables: favorite digits for the M * L_r desired streams, merged digits for
// every interferer box. Exact coefficient-value collisions (distinct
// monomials, identical doubles) throw DiagnosticError.
AlignedConstellation build_received_constellation(
    const ChannelRealization& ch, const CodecParams& params,
    const SchemeTables& tables, int r, int s_hat,
    uint64_t cap = kDefaultPointCap);

// Smallest pairwise gap of an arbitrary point list (sorts a copy).
double min_distance(std::vector<double> values);
double min_distance(std::vector<cdouble> values);

// Degrees of freedom delivered by the construction at parameter eps:
//   (M * sum_r L_r) * (1 - eps) / (xi + eps),
// exact in rational arithmetic. eps = 0 gives the nominal limit value.
Rational nominal_dof(const Dims& dims, std::span<const int> n_list,
                     const Rational& eps = Rational(0));

// Per-receiver limit profile d_r = M * L_r / xi.
std::vector<Rational> dof_profile(const Dims& dims, std::span<const int> n_list);

// Benchmark totals for the M x K setting: complex-field MK/(M+K-1) and its
// real-field counterpart 2MK/(2M+2K-1).
struct DofReference {
  Rational complex_total;
  Rational real_total;
};
DofReference dof_reference(int M, int K);

}  // namespace ciasim
