#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "doctest.h"

#include "ciasim/codec.hpp"
#include "ciasim/errors.hpp"

using namespace ciasim;

namespace {

ChannelRealization tiny_channel(Field field = Field::Real, uint64_t seed = 7) {
  ChannelConfig cfg;
  cfg.dims = Dims{2, 2, {1, 1}};
  cfg.field = field;
  cfg.seed = seed;
  return sample_channel(cfg);
}

}  // namespace

TEST_CASE("floored_power survives exact integer powers") {
  CHECK(floored_power(4096.0, 1.0 / 12.0) == 2);
  CHECK(floored_power(1000.0, 1.0 / 3.0) == 10);
  CHECK(floored_power(10.0, 0.5) == 3);
  CHECK(floored_power(1.0, 0.25) == 1);
}

TEST_CASE("rate totals for the two-user square setting") {
  // At M = K = 2 the per-state count cancels out of the ratio, which
  // reduces to 4n^2 / (3n^2 + 2n + 1) regardless of the state counts.
  Dims one{2, 2, {1, 1}};
  Dims two{2, 2, {2, 2}};
  std::vector<int> n2{2, 2};
  CHECK(nominal_dof(one, n2) == Rational(16, 17));
  CHECK(nominal_dof(two, n2) == Rational(16, 17));

  std::vector<int> n10{10, 10};
  CHECK(nominal_dof(one, n10) == Rational(400, 321));
  std::vector<int> n100{100, 100};
  CHECK(nominal_dof(one, n100) == Rational(40000, 30201));
  std::vector<int> n1000{1000, 1000};
  CHECK(nominal_dof(one, n1000) == Rational(4000000, 3002001));
  CHECK(std::abs(to_double(nominal_dof(one, n1000)) - 4.0 / 3.0) < 0.01);

  // Asymmetric layer parameters: worst receiver sets the normalizer.
  std::vector<int> mixed{2, 3};
  CHECK(nominal_dof(one, mixed) == Rational(26, 27));

  // Backing off eps costs rate on both sides of the fraction.
  std::vector<int> n1{1, 1};
  CHECK(nominal_dof(one, n1) == Rational(4, 6));
  CHECK(nominal_dof(one, n1, Rational(1, 4)) == Rational(12, 25));
}

TEST_CASE("per-receiver profile and reference totals") {
  Dims dims{2, 2, {1, 1}};
  std::vector<int> n{1, 1};
  auto prof = dof_profile(dims, n);
  REQUIRE(prof.size() == 2);
  CHECK(prof[0] == Rational(1, 3));
  CHECK(prof[1] == Rational(1, 3));

  Dims big{2, 2, {2, 2}};
  std::vector<int> n2{2, 2};
  auto prof2 = dof_profile(big, n2);
  CHECK(prof2[0] == Rational(8, 17));
  CHECK(prof2[1] == Rational(8, 17));

  DofReference ref = dof_reference(2, 2);
  CHECK(ref.complex_total == Rational(4, 3));
  CHECK(ref.real_total == Rational(8, 7));
  DofReference ref23 = dof_reference(2, 3);
  CHECK(ref23.complex_total == Rational(3, 2));
  CHECK(ref23.real_total == Rational(4, 3));
  CHECK_THROWS_AS((void)dof_reference(0, 2), ConfigError);
}

TEST_CASE("scheme tables expose flat stream indexing") {
  ChannelRealization ch = tiny_channel();
  std::vector<int> n{1, 1};
  SchemeTables tables = build_tables(ch, n);
  CHECK(tables.total_streams == 4);
  REQUIRE(tables.stream_offset.size() == 2);
  CHECK(tables.stream_offset[0] == 0);
  CHECK(tables.stream_offset[1] == 2);
  REQUIRE(tables.basis.size() == 2);
  CHECK(tables.basis[0].size() == 1);
  CHECK(tables.basis[1].size() == 1);

  // Direction values are the basis monomials evaluated on the draw.
  SymbolValues vals = channel_symbol_values(ch);
  for (int r = 0; r < 2; ++r) {
    REQUIRE(tables.nu[r].size() == tables.basis[r].size());
    for (std::size_t l = 0; l < tables.basis[r].size(); ++l) {
      const cdouble want = evaluate_c(tables.basis[r][l], vals);
      CHECK(tables.nu[r][l].real() ==
            doctest::Approx(want.real()).epsilon(1e-15));
    }
  }
}

TEST_CASE("power mapping picks the expected integer range") {
  ChannelRealization ch = tiny_channel();
  std::vector<int> n{1, 1};
  SchemeTables tables = build_tables(ch, n);

  CodecParams p = make_params(ch, tables, 0.05, 2.0e4);
  CHECK(p.xi == 6);
  CHECK(p.Q == 2);  // (1e4)^(0.95 / 12.1) = 2.06...
  CHECK_FALSE(p.q_overridden);
  CHECK(p.lambda * p.gamma * static_cast<double>(p.Q) ==
        doctest::Approx(std::sqrt(p.P / 2.0)).epsilon(1e-12));

  CodecParams q5 = make_params(ch, tables, 0.05, 2.0e4, 5);
  CHECK(q5.Q == 5);
  CHECK(q5.q_overridden);
  CHECK(q5.lambda * q5.gamma * 5.0 ==
        doctest::Approx(std::sqrt(q5.P / 2.0)).epsilon(1e-12));

  ChannelRealization chc = tiny_channel(Field::Complex);
  SchemeTables tc = build_tables(chc, n);
  CodecParams pc = make_params(chc, tc, 0.49, 2.0e4);
  CHECK(pc.Q == 2);  // (2e4)^(0.51 / 6.98) = 2.06...
}

TEST_CASE("power mapping rejects bad inputs") {
  ChannelRealization ch = tiny_channel();
  std::vector<int> n{1, 1};
  SchemeTables tables = build_tables(ch, n);

  CHECK_THROWS_AS((void)make_params(ch, tables, -0.1, 100.0), ConfigError);
  CHECK_THROWS_AS((void)make_params(ch, tables, 0.5, 100.0), ConfigError);
  CHECK_THROWS_AS((void)make_params(ch, tables, 0.05, 0.0), ConfigError);
  CHECK_THROWS_AS((void)make_params(ch, tables, 0.05, 0.5), InfeasibleError);
  CHECK_THROWS_AS((void)make_params(ch, tables, 0.05, 100.0, 0), ConfigError);

  ChannelConfig other;
  other.dims = Dims{2, 2, {2, 2}};
  other.seed = 9;
  ChannelRealization ch2 = sample_channel(other);
  CHECK_THROWS_AS((void)make_params(ch2, tables, 0.05, 1e4), ConfigError);
}

TEST_CASE("stream blocks are ranged, covered, and reproducible") {
  StreamBlock a = random_streams(1, 3, 99, 10000);
  CHECK(a.streams == 1);
  CHECK(a.T == 10000);
  std::vector<int> hits(5, 0);
  for (int32_t v : a.u) {
    REQUIRE(v >= -2);
    REQUIRE(v <= 2);
    ++hits[static_cast<std::size_t>(v + 2)];
  }
  for (int h : hits) CHECK(h > 1700);

  StreamBlock b = random_streams(1, 3, 99, 10000);
  CHECK(a.u == b.u);
  StreamBlock c = random_streams(1, 3, 100, 10000);
  CHECK(a.u != c.u);

  StreamBlock grid = random_streams(3, 2, 1, 4);
  CHECK(grid.at(2, 3) == grid.u[2 * 4 + 3]);

  CHECK_THROWS_AS((void)random_streams(1, 3, 0, 0), ConfigError);
  CHECK_THROWS_AS((void)random_streams(1, 0, 0, 4), ConfigError);
}

TEST_CASE("encoded transmit power matches the uniform-symbol budget") {
  ChannelRealization ch = tiny_channel();
  std::vector<int> n{1, 1};
  SchemeTables tables = build_tables(ch, n);
  const double P = 8.0e4;
  CodecParams params = make_params(ch, tables, 0.05, P, 4);

  const int T = 30000;
  StreamBlock block = random_streams(params, 2024, T);
  EncodedBlock enc = encode(params, tables, block);
  REQUIRE(enc.x.size() == static_cast<std::size_t>(2 * T));

  double mean_sq = 0.0;
  for (double v : enc.x) mean_sq += v * v;
  mean_sq /= static_cast<double>(enc.x.size());

  // E[x^2] = (P/M) * (Q-1) / (3Q) for uniform symbols on [-(Q-1), Q-1].
  const double want = (P / 2.0) * 3.0 / 12.0;
  CHECK(mean_sq == doctest::Approx(want).epsilon(0.05));
  CHECK(mean_sq < P / 2.0);

  StreamBlock wrong = random_streams(3, params.Q, 1, 8);
  CHECK_THROWS_AS((void)encode(params, tables, wrong), ConfigError);
}

TEST_CASE("hand-built constellation arithmetic") {
  using D = AlignedConstellation::Digit;
  std::vector<D> digits{{-1, 1, cdouble(10.0, 0.0), true},
                        {-2, 2, cdouble(1.0, 0.0), false}};
  AlignedConstellation c =
      AlignedConstellation::build(Field::Real, digits, 1000);
  CHECK(c.size() == 15);
  CHECK(c.favorite_digits() == 1);
  CHECK(c.min_distance() == doctest::Approx(1.0));

  CHECK(c.value_at(0) == doctest::Approx(-12.0));
  CHECK(c.value_at(14) == doctest::Approx(12.0));
  auto label = c.label_of(7);
  REQUIRE(label.size() == 2);
  CHECK(label[0] == 0);
  CHECK(label[1] == 0);
  CHECK(c.favorite_part(7) == 1);
  CHECK(c.favorite_part(14) == 2);

  CHECK(c.detect(-12.4) == 0);
  for (uint64_t i = 0; i < c.size(); ++i) CHECK(c.detect(c.value_at(i)) == i);
  CHECK_THROWS_AS((void)c.label_of(15), ConfigError);
  CHECK_THROWS_AS((void)c.detect(cdouble(0.0, 0.0)), ConfigError);
}

TEST_CASE("detection ties go to the smaller point") {
  using D = AlignedConstellation::Digit;
  AlignedConstellation c = AlignedConstellation::build(
      Field::Real, {D{-1, 1, cdouble(1.0, 0.0), true}}, 10);
  REQUIRE(c.size() == 3);
  // Points are -1, 0, 1 at indices 0, 1, 2. y = 0.5 ties 0 against 1.
  CHECK(c.detect(0.5) == 1);
  CHECK(c.detect(-0.5) == 0);
  CHECK(c.detect(0.51) == 2);
  CHECK(c.detect(100.0) == 2);
}

TEST_CASE("build rejects malformed digit lists") {
  using D = AlignedConstellation::Digit;
  CHECK_THROWS_AS((void)AlignedConstellation::build(Field::Real, {}, 10),
                  ConfigError);
  CHECK_THROWS_AS((void)AlignedConstellation::build(
                      Field::Real, {D{1, -1, cdouble(1.0, 0.0), true}}, 10),
                  ConfigError);
  CHECK_THROWS_AS((void)AlignedConstellation::build(
                      Field::Real, {D{-1, 1, cdouble(1.0, 0.5), true}}, 10),
                  ConfigError);
  // Merged digit ahead of a favorite one breaks the stream layout.
  CHECK_THROWS_AS((void)AlignedConstellation::build(
                      Field::Real,
                      {D{-1, 1, cdouble(1.0, 0.0), false},
                       D{-1, 1, cdouble(2.0, 0.0), true}},
                      100),
                  ConfigError);
  // Cap guard fires before materialization.
  CHECK_THROWS_AS((void)AlignedConstellation::build(
                      Field::Real,
                      {D{-100, 100, cdouble(1.0, 0.0), true},
                       D{-100, 100, cdouble(203.0, 0.0), true}},
                      1000),
                  InfeasibleError);
}

TEST_CASE("coefficient collisions are reported, not absorbed") {
  using D = AlignedConstellation::Digit;
  CHECK_THROWS_AS((void)AlignedConstellation::build(
                      Field::Real,
                      {D{-1, 1, cdouble(2.5, 0.0), true},
                       D{-1, 1, cdouble(2.5, 0.0), false}},
                      100),
                  DiagnosticError);
}

TEST_CASE("received constellation of the smallest aligned scheme") {
  ChannelRealization ch = tiny_channel();
  std::vector<int> n{1, 1};
  SchemeTables tables = build_tables(ch, n);
  CodecParams params = make_params(ch, tables, 0.05, 1.0e6, 2);

  for (int r = 0; r < 2; ++r) {
    AlignedConstellation c =
        build_received_constellation(ch, params, tables, r, 0, 100000);
    // 2 desired digits of 3 levels, 4 merged digits of 7 levels.
    CHECK(c.size() == 21609);
    CHECK(c.favorite_digits() == 2);
    CHECK(c.digits().size() == 6);
    CHECK(c.digits()[0].hi == 1);
    CHECK(c.digits()[2].hi == 3);
    CHECK(c.min_distance() > 0.0);

    for (uint64_t i = 0; i < c.size(); i += 997)
      CHECK(c.detect(c.value_at(i)) == i);
    CHECK(c.favorite_part(21608) == 8);
  }

  CHECK_THROWS_AS(
      (void)build_received_constellation(ch, params, tables, 2, 0, 100000),
      ConfigError);
  CHECK_THROWS_AS(
      (void)build_received_constellation(ch, params, tables, 0, 1, 100000),
      ConfigError);
  CHECK_THROWS_AS(
      (void)build_received_constellation(ch, params, tables, 0, 0, 1000),
      InfeasibleError);
}

TEST_CASE("complex receive constellation keeps points apart") {
  ChannelRealization ch = tiny_channel(Field::Complex, 21);
  std::vector<int> n{1, 1};
  SchemeTables tables = build_tables(ch, n);
  CodecParams params = make_params(ch, tables, 0.49, 2.0e4);
  REQUIRE(params.Q == 2);

  AlignedConstellation c =
      build_received_constellation(ch, params, tables, 0, 0, 100000);
  CHECK(c.size() == 21609);
  CHECK(c.min_distance() > 0.0);
  for (uint64_t i = 0; i < c.size(); i += 1999)
    CHECK(c.detect(c.cvalue_at(i)) == i);
}

TEST_CASE("free-standing minimum distance") {
  CHECK(min_distance(std::vector<double>{0.0, 0.5, 2.0}) ==
        doctest::Approx(0.5));
  CHECK(min_distance(std::vector<double>{3.0, -1.0, 0.0, 7.0}) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS((void)min_distance(std::vector<double>{1.0}), ConfigError);

  std::vector<cdouble> pts{cdouble(0.0, 0.0), cdouble(0.0, 0.3),
                           cdouble(1.0, 0.0)};
  CHECK(min_distance(pts) == doctest::Approx(0.3));
}
