#pragma once

#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ciasim/errors.hpp"

namespace ciasim {

using cdouble = std::complex<double>;

enum class Field { Real, Complex };

inline std::string to_string(Field f) {
  return f == Field::Real ? "real" : "complex";
}

inline Field field_from_string(const std::string& s) {
  if (s == "real") return Field::Real;
  if (s == "complex") return Field::Complex;
  throw ConfigError("unknown field '" + s + "' (expected 'real' or 'complex')");
}

// Problem dimensions: a transmitter with M antennas serves K single-antenna
// receivers; receiver r may be in any of J[r] channel states, unknown to the
// transmitter beyond this finite list.
struct Dims {
  int M = 0;
  int K = 0;
  std::vector<int> J;

  int sumJ() const { return std::accumulate(J.begin(), J.end(), 0); }

  void validate() const {
    if (M < 1) throw ConfigError("M must be >= 1");
    if (K < 1) throw ConfigError("K must be >= 1");
    if (static_cast<int>(J.size()) != K)
      throw ConfigError("J must list one state count per receiver (got " +
                        std::to_string(J.size()) + " entries for K=" +
                        std::to_string(K) + ")");
    for (int j : J)
      if (j < 1) throw ConfigError("every J[r] must be >= 1");
  }

  bool operator==(const Dims&) const = default;
};

}  // namespace ciasim
