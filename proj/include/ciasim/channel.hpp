#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ciasim/types.hpp"

namespace ciasim {

struct ChannelConfig {
  Dims dims;
  Field field = Field::Real;
  uint64_t seed = 0;
  // Draws with magnitude below this floor are rejected and redrawn.
  double magnitude_floor = 1e-3;
  // Rejection budget across resamples of a single coefficient.
  uint64_t max_attempts = 1'000'000;

  void validate() const;
};

// One compound channel draw: coefficient h(r, t, s) connects transmit
// antenna t to receiver r while that receiver is in state s. Real channels
// store their value in the real part; the imaginary part is exactly zero.
class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(ChannelConfig cfg, std::vector<cdouble> coeffs);

  const ChannelConfig& config() const { return cfg_; }
  const Dims& dims() const { return cfg_.dims; }
  Field field() const { return cfg_.field; }

  // All indices 0-based and bounds-checked; out of range throws.
  cdouble coeff_c(int r, int t, int s) const;
  // Real-field convenience accessor; throws ConfigError on complex channels.
  double coeff(int r, int t, int s) const;

  std::size_t count() const { return h_.size(); }
  const std::vector<cdouble>& raw() const { return h_; }

 private:
  std::size_t index(int r, int t, int s) const;

  ChannelConfig cfg_;
  std::vector<cdouble> h_;               // receiver blocks, antenna-major
  std::vector<std::size_t> offset_;      // start of each receiver block
};

// Rejection sampling: N(0,1) (real) or CN(0,1) (complex) per coefficient,
// redrawing on |h| < magnitude_floor or an exact duplicate of an already
// accepted coefficient. Deterministic in the seed.
ChannelRealization sample_channel(const ChannelConfig& cfg);

struct GenericityReport {
  bool ok = false;
  double min_abs = 0.0;        // smallest coefficient magnitude
  double min_pair_gap = 0.0;   // smallest pairwise |h_i - h_j|
  std::size_t near_pairs = 0;  // pairs closer than the tolerance
  std::size_t small_magnitudes = 0;
  std::vector<std::string> notes;
};

// Flags exact/near coefficient coincidences and sub-floor magnitudes.
GenericityReport validate_genericity(const ChannelRealization& ch,
                                     double tol = 1e-12);

// JSON serialization. Loading is strict: unknown keys, wrong shapes and
// non-finite values are rejected. Complex entries serialize as [re, im].
std::string channel_to_json(const ChannelRealization& ch);
ChannelRealization channel_from_json(const std::string& text);
ChannelRealization load_channel(const std::string& path);
void save_channel(const ChannelRealization& ch, const std::string& path);

}  // namespace ciasim
