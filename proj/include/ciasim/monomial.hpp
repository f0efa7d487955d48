#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ciasim/channel.hpp"
#include "ciasim/types.hpp"

namespace ciasim {

// Kinds of scalar quantities a transmit direction can be built from.
//   ChannelCoeff   h(r, t, s): direct channel coefficient
//   PrecodedGain   g(r, i, s): channel seen through precoder column i of
//                  branch r by the multi-state receiver in state s
//   GeometricBase  the generator beta of a geometric direction ladder
//   SteeredCoeff   inner product of a channel row with a precoder column
enum class SymbolKind : uint8_t {
  ChannelCoeff = 0,
  PrecodedGain = 1,
  GeometricBase = 2,
  SteeredCoeff = 3,
};

struct Symbol {
  SymbolKind kind = SymbolKind::ChannelCoeff;
  uint16_t a = 0, b = 0, c = 0;  // index meaning depends on kind; 0-based

  friend auto operator<=>(const Symbol&, const Symbol&) = default;

  static Symbol channel_coeff(int r, int t, int s);
  static Symbol precoded_gain(int r, int i, int s);
  static Symbol geometric_base();
  static Symbol steered_coeff(int r, int i);

  std::string str() const;
};

// A product of symbols raised to positive integer exponents, stored sorted
// by symbol. The default-constructed monomial is the constant 1. Comparison
// is lexicographic over the (symbol, exponent) term list, which gives a
// total order.
class Monomial {
 public:
  Monomial() = default;

  static Monomial unit() { return {}; }

  // Multiplies this monomial by s^e in place.
  Monomial& mul(Symbol s, uint32_t e = 1);

  friend Monomial operator*(Monomial lhs, const Monomial& rhs);

  uint32_t exponent(Symbol s) const;
  uint64_t degree() const;
  bool is_unit() const { return terms_.empty(); }
  const std::vector<std::pair<Symbol, uint32_t>>& terms() const { return terms_; }

  friend auto operator<=>(const Monomial&, const Monomial&) = default;

  std::string str() const;

 private:
  std::vector<std::pair<Symbol, uint32_t>> terms_;
};

// Sets of monomials are kept sorted ascending with no duplicates.
using MonomialSet = std::vector<Monomial>;

MonomialSet sorted_unique(MonomialSet set);

// Multiplies every element by s; the result is re-canonicalized (scaling
// does not preserve lexicographic order in general).
MonomialSet scale(const MonomialSet& set, Symbol s);

// Exact count of distinct monomials across the given sets.
uint64_t union_size(std::span<const MonomialSet> sets);

bool disjoint(const MonomialSet& a, const MonomialSet& b);

// Axis-aligned exponent box: every symbol of the support carries an
// inclusive exponent range, and the box is the full product of the ranges.
// Membership requires the candidate's support to match the box support
// exactly (ranges never include exponent 0).
class MonomialBox {
 public:
  using Range = std::tuple<Symbol, uint32_t, uint32_t>;  // symbol, lo, hi

  explicit MonomialBox(std::vector<Range> ranges);

  uint64_t size() const { return size_; }
  bool contains(const Monomial& m) const;

  // Ascending enumeration; throws InfeasibleError when size() > cap.
  MonomialSet enumerate(uint64_t cap) const;

  // Position of m within the ascending enumeration (mixed-radix rank).
  // Throws ConfigError when m is outside the box.
  uint64_t rank(const Monomial& m) const;

  const std::vector<Range>& ranges() const { return ranges_; }

 private:
  std::vector<Range> ranges_;  // sorted by symbol
  uint64_t size_ = 1;
};

// Arithmetic guard for the closed-form counts.
inline constexpr uint64_t kCountCap = 9'000'000'000'000'000'000ULL;
// Default cap on sets that are actually materialized.
inline constexpr uint64_t kDefaultBasisCap = 10'000'000;

// base^exp with overflow detection against cap.
uint64_t checked_pow(uint64_t base, uint32_t exp, uint64_t cap = kCountCap);

// Number of symbols a direction set for receiver r is built over:
// every cross channel coefficient h(r', t, s) with r' != r.
int basis_symbol_count(const Dims& dims, int r);

// Direction-set size L_r = n^(M * (sumJ - J_r)).
uint64_t layer_count(const Dims& dims, int r, int n, uint64_t cap = kCountCap);

// Size of the merged interference block contributed by interferer r_hat:
// kappa = n^(M * (sumJ - J_rhat - 1)) * (n + 1)^M.
uint64_t kappa(const Dims& dims, int r_hat, int n, uint64_t cap = kCountCap);

struct XiBreakdown {
  std::vector<uint64_t> L;             // per receiver
  std::vector<uint64_t> kappa;         // per receiver, in its interferer role
  std::vector<uint64_t> per_receiver;  // observed distinct levels at receiver r
  uint64_t xi = 0;
  int argmax = 0;
};

// xi = max_r ( sum_{r_hat != r} kappa_rhat + M * L_r ), the normalization
// exponent of the power-to-rate conversion.
XiBreakdown xi_breakdown(const Dims& dims, std::span<const int> n_list);
uint64_t xi(const Dims& dims, std::span<const int> n_list);

// Largest n >= 1 with layer_count(r, n) <= budget.
int choose_n(const Dims& dims, int r, uint64_t budget);

// The direction set B_r: all products of the cross coefficients with
// exponents in [1, n].
MonomialBox basis_box(const Dims& dims, int r, int n);
MonomialSet build_basis(const Dims& dims, int r, int n,
                        uint64_t cap = kDefaultBasisCap);

// Box enclosing the union of the interferer-r_hat direction set scaled by
// each of receiver r's state-s_hat coefficients: the M symbols h(r, t, s_hat)
// range over [1, n+1], every other cross symbol of r_hat over [1, n].
// This is the block the receiver treats as one merged lattice.
MonomialBox interference_box(const Dims& dims, int r_hat, int r, int s_hat,
                             int n);

// Numeric values for symbols, used to evaluate monomials against a draw.
class SymbolValues {
 public:
  void set(Symbol s, cdouble v);
  cdouble get(Symbol s) const;  // throws ConfigError when missing
  bool has(Symbol s) const;
  std::size_t count() const { return values_.size(); }

 private:
  std::map<Symbol, cdouble> values_;
};

SymbolValues channel_symbol_values(const ChannelRealization& ch);

cdouble evaluate_c(const Monomial& m, const SymbolValues& values);
// Real-path evaluation; throws ConfigError if any factor has nonzero
// imaginary part.
double evaluate(const Monomial& m, const SymbolValues& values);

// Structural receive-side audit for receiver r in state s_hat: the desired
// directions stay pairwise disjoint across antennas, every interferer's
// scaled directions land inside its merged box, and the boxes avoid the
// desired set entirely. All counts are exact.
struct AlignmentCheck {
  int receiver = 0;  // r, 0-based
  int state = 0;     // s_hat, 0-based

  uint64_t favorite_count = 0;     // distinct desired-direction monomials
  uint64_t favorite_expected = 0;  // M * L_r
  bool favorite_disjoint = false;  // pairwise across the M antennas

  struct InterferenceCell {
    int interferer = 0;
    uint64_t box_count = 0;       // merged box size
    uint64_t kappa_expected = 0;  // closed form
    uint64_t exact_union = 0;     // distinct scaled interference monomials
    bool contained = false;       // scaled sets inside the box
    bool disjoint_from_favorite = false;
  };
  std::vector<InterferenceCell> interference;

  uint64_t total_observed = 0;  // favorite_count + sum of box counts
  bool ok = false;
};

AlignmentCheck verify_alignment(const Dims& dims, std::span<const int> n_list,
                                int r, int s_hat,
                                uint64_t cap = kDefaultBasisCap);

}  // namespace ciasim
