#include "ciasim/monomial.hpp"

#include <algorithm>
#include <sstream>

namespace ciasim {

namespace {

uint16_t narrow_index(int v, const char* what) {
  if (v < 0 || v > 0xffff)
    throw ConfigError(std::string(what) + " index out of range");
  return static_cast<uint16_t>(v);
}

}  // namespace

Symbol Symbol::channel_coeff(int r, int t, int s) {
  return Symbol{SymbolKind::ChannelCoeff, narrow_index(r, "receiver"),
                narrow_index(t, "antenna"), narrow_index(s, "state")};
}

Symbol Symbol::precoded_gain(int r, int i, int s) {
  return Symbol{SymbolKind::PrecodedGain, narrow_index(r, "branch"),
                narrow_index(i, "column"), narrow_index(s, "state")};
}

Symbol Symbol::geometric_base() { return Symbol{SymbolKind::GeometricBase, 0, 0, 0}; }

Symbol Symbol::steered_coeff(int r, int i) {
  return Symbol{SymbolKind::SteeredCoeff, narrow_index(r, "receiver"),
                narrow_index(i, "column"), 0};
}

std::string Symbol::str() const {
  std::ostringstream out;
  switch (kind) {
    case SymbolKind::ChannelCoeff:
      out << "h[" << a + 1 << "," << b + 1 << "," << c + 1 << "]";
      break;
    case SymbolKind::PrecodedGain:
      out << "g[" << a + 1 << "," << b + 1 << "," << c + 1 << "]";
      break;
    case SymbolKind::GeometricBase:
      out << "beta";
      break;
    case SymbolKind::SteeredCoeff:
      out << "hv[" << a + 1 << "," << b + 1 << "]";
      break;
  }
  return out.str();
}

Monomial& Monomial::mul(Symbol s, uint32_t e) {
  if (e == 0) return *this;
  auto it = std::lower_bound(
      terms_.begin(), terms_.end(), s,
      [](const auto& term, const Symbol& sym) { return term.first < sym; });
  if (it != terms_.end() && it->first == s) {
    if (it->second > UINT32_MAX - e) throw ConfigError("exponent overflow");
    it->second += e;
  } else {
    terms_.insert(it, {s, e});
  }
  return *this;
}

Monomial operator*(Monomial lhs, const Monomial& rhs) {
  for (const auto& [sym, exp] : rhs.terms_) lhs.mul(sym, exp);
  return lhs;
}

uint32_t Monomial::exponent(Symbol s) const {
  auto it = std::lower_bound(
      terms_.begin(), terms_.end(), s,
      [](const auto& term, const Symbol& sym) { return term.first < sym; });
  return (it != terms_.end() && it->first == s) ? it->second : 0;
}

uint64_t Monomial::degree() const {
  uint64_t d = 0;
  for (const auto& [sym, exp] : terms_) d += exp;
  return d;
}

std::string Monomial::str() const {
  if (terms_.empty()) return "1";
  std::ostringstream out;
  bool first = true;
  for (const auto& [sym, exp] : terms_) {
    if (!first) out << "*";
    first = false;
    out << sym.str();
    if (exp != 1) out << "^" << exp;
  }
  return out.str();
}

MonomialSet sorted_unique(MonomialSet set) {
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  return set;
}

MonomialSet scale(const MonomialSet& set, Symbol s) {
  MonomialSet out;
  out.reserve(set.size());
  for (const Monomial& m : set) {
    Monomial scaled = m;
    scaled.mul(s);
    out.push_back(std::move(scaled));
  }
  // Multiplying by a shared symbol is injective, so sizes are preserved,
  // but the lexicographic order of the images can differ.
  std::sort(out.begin(), out.end());
  return out;
}

uint64_t union_size(std::span<const MonomialSet> sets) {
  std::size_t total = 0;
  for (const MonomialSet& s : sets) total += s.size();
  MonomialSet all;
  all.reserve(total);
  for (const MonomialSet& s : sets) all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end());
  return static_cast<uint64_t>(
      std::distance(all.begin(), std::unique(all.begin(), all.end())));
}

bool disjoint(const MonomialSet& a, const MonomialSet& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else
      return false;
  }
  return true;
}

MonomialBox::MonomialBox(std::vector<Range> ranges) : ranges_(std::move(ranges)) {
  std::sort(ranges_.begin(), ranges_.end(),
            [](const Range& x, const Range& y) { return std::get<0>(x) < std::get<0>(y); });
  for (std::size_t i = 0; i + 1 < ranges_.size(); ++i)
    if (std::get<0>(ranges_[i]) == std::get<0>(ranges_[i + 1]))
      throw ConfigError("box ranges repeat a symbol");
  unsigned __int128 size = 1;
  for (const auto& [sym, lo, hi] : ranges_) {
    (void)sym;
    if (lo < 1 || hi < lo) throw ConfigError("box range must satisfy 1 <= lo <= hi");
    size *= (hi - lo + 1);
    if (size > kCountCap) throw InfeasibleError("box size exceeds the count cap");
  }
  size_ = static_cast<uint64_t>(size);
}

bool MonomialBox::contains(const Monomial& m) const {
  const auto& terms = m.terms();
  if (terms.size() != ranges_.size()) return false;
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    const auto& [sym, lo, hi] = ranges_[i];
    if (terms[i].first != sym) return false;
    if (terms[i].second < lo || terms[i].second > hi) return false;
  }
  return true;
}

MonomialSet MonomialBox::enumerate(uint64_t cap) const {
  if (size_ > cap)
    throw InfeasibleError("box enumeration of " + std::to_string(size_) +
                          " monomials exceeds the cap of " + std::to_string(cap));
  MonomialSet out;
  out.reserve(size_);
  Monomial prefix;
  // Depth-first with the last symbol cycling fastest; since ranges are
  // sorted by symbol this emits the set in ascending order.
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == ranges_.size()) {
      out.push_back(prefix);
      return;
    }
    const auto& [sym, lo, hi] = ranges_[i];
    for (uint32_t e = lo; e <= hi; ++e) {
      Monomial saved = prefix;
      prefix.mul(sym, e);
      self(self, i + 1);
      prefix = std::move(saved);
    }
  };
  rec(rec, 0);
  return out;
}

uint64_t MonomialBox::rank(const Monomial& m) const {
  if (!contains(m)) throw ConfigError("monomial lies outside the box");
  uint64_t rank = 0;
  const auto& terms = m.terms();
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    const auto& [sym, lo, hi] = ranges_[i];
    (void)sym;
    rank = rank * (hi - lo + 1) + (terms[i].second - lo);
  }
  return rank;
}

uint64_t checked_pow(uint64_t base, uint32_t exp, uint64_t cap) {
  unsigned __int128 acc = 1;
  for (uint32_t i = 0; i < exp; ++i) {
    acc *= base;
    if (acc > cap)
      throw InfeasibleError("count " + std::to_string(base) + "^" +
                            std::to_string(exp) + " exceeds the cap");
  }
  return static_cast<uint64_t>(acc);
}

namespace {

bool try_pow(uint64_t base, uint32_t exp, uint64_t cap, uint64_t& out) {
  unsigned __int128 acc = 1;
  for (uint32_t i = 0; i < exp; ++i) {
    acc *= base;
    if (acc > cap) return false;
  }
  out = static_cast<uint64_t>(acc);
  return true;
}

void check_receiver(const Dims& dims, int r) {
  if (r < 0 || r >= dims.K) throw ConfigError("receiver index out of range");
}

void check_n(int n) {
  if (n < 1) throw ConfigError("layer parameter n must be >= 1");
}

std::vector<int> checked_n_list(const Dims& dims, std::span<const int> n_list) {
  if (static_cast<int>(n_list.size()) != dims.K)
    throw ConfigError("need one layer parameter n per receiver");
  for (int n : n_list) check_n(n);
  return {n_list.begin(), n_list.end()};
}

}  // namespace

int basis_symbol_count(const Dims& dims, int r) {
  dims.validate();
  check_receiver(dims, r);
  return dims.M * (dims.sumJ() - dims.J[r]);
}

uint64_t layer_count(const Dims& dims, int r, int n, uint64_t cap) {
  check_n(n);
  const int d = basis_symbol_count(dims, r);
  return checked_pow(static_cast<uint64_t>(n), static_cast<uint32_t>(d), cap);
}

uint64_t kappa(const Dims& dims, int r_hat, int n, uint64_t cap) {
  check_n(n);
  dims.validate();
  check_receiver(dims, r_hat);
  if (dims.K < 2)
    throw ConfigError("merged interference requires at least two receivers");
  const int cross_states = dims.sumJ() - dims.J[r_hat];
  if (cross_states < 1)
    throw ConfigError("interferer has no cross states");
  const uint64_t inner = checked_pow(
      static_cast<uint64_t>(n),
      static_cast<uint32_t>(dims.M * (cross_states - 1)), cap);
  const uint64_t outer = checked_pow(static_cast<uint64_t>(n) + 1,
                                     static_cast<uint32_t>(dims.M), cap);
  unsigned __int128 total = static_cast<unsigned __int128>(inner) * outer;
  if (total > cap) throw InfeasibleError("merged block size exceeds the cap");
  return static_cast<uint64_t>(total);
}

XiBreakdown xi_breakdown(const Dims& dims, std::span<const int> n_list) {
  dims.validate();
  const std::vector<int> n = checked_n_list(dims, n_list);
  XiBreakdown out;
  out.L.resize(dims.K);
  out.kappa.resize(dims.K, 0);
  out.per_receiver.resize(dims.K);
  for (int r = 0; r < dims.K; ++r) {
    out.L[r] = layer_count(dims, r, n[r]);
    if (dims.K >= 2) out.kappa[r] = kappa(dims, r, n[r]);
  }
  for (int r = 0; r < dims.K; ++r) {
    unsigned __int128 levels =
        static_cast<unsigned __int128>(dims.M) * out.L[r];
    for (int rh = 0; rh < dims.K; ++rh)
      if (rh != r) levels += out.kappa[rh];
    if (levels > kCountCap)
      throw InfeasibleError("observed level count exceeds the cap");
    out.per_receiver[r] = static_cast<uint64_t>(levels);
    if (out.per_receiver[r] > out.xi) {
      out.xi = out.per_receiver[r];
      out.argmax = r;
    }
  }
  return out;
}

uint64_t xi(const Dims& dims, std::span<const int> n_list) {
  return xi_breakdown(dims, n_list).xi;
}

int choose_n(const Dims& dims, int r, uint64_t budget) {
  const int d = basis_symbol_count(dims, r);
  if (d == 0)
    throw ConfigError("receiver has no cross symbols; the layer count is 1 "
                      "for every n");
  if (budget < 1) throw ConfigError("layer budget must be >= 1");
  uint64_t lo = 1, hi = 2, val = 0;
  while (try_pow(hi, static_cast<uint32_t>(d), budget, val)) {
    lo = hi;
    if (hi > (1ULL << 62)) break;
    hi *= 2;
  }
  // invariant: lo feasible, hi infeasible
  while (hi - lo > 1) {
    const uint64_t mid = lo + (hi - lo) / 2;
    if (try_pow(mid, static_cast<uint32_t>(d), budget, val))
      lo = mid;
    else
      hi = mid;
  }
  if (lo > static_cast<uint64_t>(INT32_MAX))
    throw ConfigError("layer budget allows an impractically large n");
  return static_cast<int>(lo);
}

MonomialBox basis_box(const Dims& dims, int r, int n) {
  dims.validate();
  check_receiver(dims, r);
  check_n(n);
  std::vector<MonomialBox::Range> ranges;
  for (int rp = 0; rp < dims.K; ++rp) {
    if (rp == r) continue;
    for (int t = 0; t < dims.M; ++t)
      for (int s = 0; s < dims.J[rp]; ++s)
        ranges.emplace_back(Symbol::channel_coeff(rp, t, s), 1,
                            static_cast<uint32_t>(n));
  }
  return MonomialBox(std::move(ranges));
}

MonomialSet build_basis(const Dims& dims, int r, int n, uint64_t cap) {
  return basis_box(dims, r, n).enumerate(cap);
}

MonomialBox interference_box(const Dims& dims, int r_hat, int r, int s_hat,
                             int n) {
  dims.validate();
  check_receiver(dims, r_hat);
  check_receiver(dims, r);
  check_n(n);
  if (r_hat == r)
    throw ConfigError("interferer and observer must be distinct receivers");
  if (s_hat < 0 || s_hat >= dims.J[r])
    throw ConfigError("state index out of range");
  std::vector<MonomialBox::Range> ranges;
  for (int rp = 0; rp < dims.K; ++rp) {
    if (rp == r_hat) continue;
    for (int t = 0; t < dims.M; ++t)
      for (int s = 0; s < dims.J[rp]; ++s) {
        const bool extended = (rp == r && s == s_hat);
        ranges.emplace_back(Symbol::channel_coeff(rp, t, s), 1,
                            static_cast<uint32_t>(n) + (extended ? 1 : 0));
      }
  }
  return MonomialBox(std::move(ranges));
}

void SymbolValues::set(Symbol s, cdouble v) { values_[s] = v; }

cdouble SymbolValues::get(Symbol s) const {
  auto it = values_.find(s);
  if (it == values_.end())
    throw ConfigError("no value bound to symbol " + s.str());
  return it->second;
}

bool SymbolValues::has(Symbol s) const { return values_.count(s) != 0; }

SymbolValues channel_symbol_values(const ChannelRealization& ch) {
  SymbolValues values;
  const Dims& d = ch.dims();
  for (int r = 0; r < d.K; ++r)
    for (int t = 0; t < d.M; ++t)
      for (int s = 0; s < d.J[r]; ++s)
        values.set(Symbol::channel_coeff(r, t, s), ch.coeff_c(r, t, s));
  return values;
}

namespace {

cdouble pow_c(cdouble base, uint32_t e) {
  cdouble result(1.0, 0.0);
  while (e != 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

}  // namespace

cdouble evaluate_c(const Monomial& m, const SymbolValues& values) {
  cdouble acc(1.0, 0.0);
  for (const auto& [sym, exp] : m.terms()) acc *= pow_c(values.get(sym), exp);
  return acc;
}

double evaluate(const Monomial& m, const SymbolValues& values) {
  const cdouble v = evaluate_c(m, values);
  if (v.imag() != 0.0)
    throw ConfigError("monomial evaluates to a complex value; use evaluate_c");
  return v.real();
}

AlignmentCheck verify_alignment(const Dims& dims, std::span<const int> n_list,
                                int r, int s_hat, uint64_t cap) {
  dims.validate();
  const std::vector<int> n = checked_n_list(dims, n_list);
  check_receiver(dims, r);
  if (s_hat < 0 || s_hat >= dims.J[r])
    throw ConfigError("state index out of range");

  AlignmentCheck out;
  out.receiver = r;
  out.state = s_hat;

  const MonomialSet basis_r = build_basis(dims, r, n[r], cap);
  out.favorite_expected = static_cast<uint64_t>(dims.M) * basis_r.size();

  std::vector<MonomialSet> favorite_sets;
  favorite_sets.reserve(dims.M);
  for (int t = 0; t < dims.M; ++t)
    favorite_sets.push_back(scale(basis_r, Symbol::channel_coeff(r, t, s_hat)));
  out.favorite_count = union_size(favorite_sets);
  out.favorite_disjoint = out.favorite_count == out.favorite_expected;

  MonomialSet favorite_all;
  favorite_all.reserve(out.favorite_expected);
  for (const MonomialSet& s : favorite_sets)
    favorite_all.insert(favorite_all.end(), s.begin(), s.end());
  favorite_all = sorted_unique(std::move(favorite_all));

  bool all_ok = out.favorite_disjoint;
  unsigned __int128 total = out.favorite_count;
  for (int rh = 0; rh < dims.K; ++rh) {
    if (rh == r) continue;
    AlignmentCheck::InterferenceCell cell;
    cell.interferer = rh;
    const MonomialBox box = interference_box(dims, rh, r, s_hat, n[rh]);
    cell.box_count = box.size();
    cell.kappa_expected = kappa(dims, rh, n[rh]);

    const MonomialSet basis_rh = build_basis(dims, rh, n[rh], cap);
    std::vector<MonomialSet> scaled;
    scaled.reserve(dims.M);
    bool contained = true;
    for (int t = 0; t < dims.M; ++t) {
      scaled.push_back(scale(basis_rh, Symbol::channel_coeff(r, t, s_hat)));
      for (const Monomial& m : scaled.back())
        if (!box.contains(m)) {
          contained = false;
          break;
        }
    }
    cell.contained = contained;
    cell.exact_union = union_size(scaled);

    MonomialSet merged;
    merged.reserve(static_cast<std::size_t>(dims.M) * basis_rh.size());
    for (const MonomialSet& s : scaled)
      merged.insert(merged.end(), s.begin(), s.end());
    merged = sorted_unique(std::move(merged));
    cell.disjoint_from_favorite = disjoint(merged, favorite_all);

    all_ok = all_ok && cell.contained && cell.disjoint_from_favorite &&
             cell.box_count == cell.kappa_expected;
    total += cell.box_count;
    out.interference.push_back(std::move(cell));
  }
  if (total > kCountCap)
    throw InfeasibleError("observed level count exceeds the cap");
  out.total_observed = static_cast<uint64_t>(total);
  out.ok = all_ok;
  return out;
}

}  // namespace ciasim
