#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ciasim/codec.hpp"

namespace ciasim {

// Zero-forcing hybrid setting: K = M receivers, receivers 1..M-1 have a
// single known state, receiver M is compound with JM states. Receivers
// 1..M-1 are served through zero-forced precoders; receiver M decodes a
// geometric direction ladder while the zero-forced branches align into
// merged boxes at its antenna.
struct HybridConfig {
  int M = 2;
  int JM = 2;
  int n = 1;
  uint64_t seed = 0;
  double magnitude_floor = 1e-3;

  void validate() const;
};

struct HybridScheme {
  HybridConfig cfg;

  Eigen::MatrixXd Hfirst;  // (M-1) x M, row r = channel of receiver r+1
  Eigen::MatrixXd HM;      // JM x M, row s = receiver-M channel in state s

  // Branch precoders. V[r] is M x M with unit-norm columns drawn from the
  // orthogonal complement of the other single-state receivers' rows; for
  // M >= 3 that complement has dimension >= 2, so the M columns are linearly
  // dependent by construction. complement_rank records the dimension.
  std::vector<Eigen::MatrixXd> V;
  Eigen::VectorXd vM;  // unit vector orthogonal to all single-state rows
  int complement_rank = 0;
  std::vector<double> sigma_max;  // spectral norm of each V[r]

  double beta = 0.0;  // ladder generator, uniform in [1.1, 2.0]

  uint64_t L = 0;        // n^(M*JM), layers per branch and ladder length
  uint64_t kappa_m = 0;  // merged box size per branch at receiver M
  uint64_t xi_h = 0;     // (M-1)*kappa_m + L

  // Effective gain g(r, i, s) = h_M^(s) . V[r].col(i), all 0-based.
  double g(int r, int i, int s) const;

  // Direction set of branch r over its PrecodedGain symbols.
  MonomialSet gbasis(int r, uint64_t cap = kDefaultBasisCap) const;

  // Numeric values for every PrecodedGain, SteeredCoeff and the
  // GeometricBase symbol.
  SymbolValues symbol_values() const;
};

HybridScheme build_hybrid(const HybridConfig& cfg);

struct HybridParams {
  HybridConfig cfg;
  double eps = 0.05;
  double P = 0.0;
  uint64_t L = 0, kappa_m = 0, xi_h = 0;
  uint64_t total_streams = 0;  // (M-1)*M*L branch streams + L ladder streams
  long long Q = 0;
  bool q_overridden = false;
  double gamma = 0.0;
  double lambda = 0.0;  // lambda * Gamma * Q = sqrt(P)
};

HybridParams make_hybrid_params(const HybridScheme& scheme, double eps, double P,
                                std::optional<long long> q_override = {});

// Drives each branch with random symbols in isolation and measures the
// worst leakage into the other single-state receivers relative to the
// driven receiver's own signal level.
struct CleanCheckReport {
  double max_leak_ratio = 0.0;
  bool ok = false;  // max_leak_ratio < 1e-9
};

CleanCheckReport receiver_clean_check(const HybridScheme& scheme,
                                      int probes = 32, uint64_t seed = 1);

// Transmit block for the hybrid scheme. Stream layout: branch streams
// (r, i, l) at r*M*L + i*L + l for r < M-1, then the L ladder streams.
EncodedBlock hybrid_encode(const HybridScheme& scheme,
                           const HybridParams& params,
                           const StreamBlock& block);

// Receive constellation: receivers r < M-1 (0-based) see only their own
// M*L favorite digits; receiver M-1 in state s_hat sees L favorite ladder
// digits plus one merged box per zero-forced branch.
AlignedConstellation hybrid_receiver_constellation(
    const HybridScheme& scheme, const HybridParams& params, int r, int s_hat,
    uint64_t cap = kDefaultPointCap);

// ((M-1)*M*L + L) * (1 - eps) / (xi + eps), exact.
Rational hybrid_nominal_dof(int M, int JM, int n,
                            const Rational& eps = Rational(0));

// Per-receiver limit profile: M*L/xi for the zero-forced receivers,
// L/xi for the compound one.
std::vector<Rational> hybrid_dof_profile(int M, int JM, int n);

// Benchmark total M - 1 + 1/M.
Rational hybrid_dof_reference(int M);

}  // namespace ciasim
