#pragma once

#include <boost/rational.hpp>
#include <string>

namespace ciasim {

// Exact fractions for degrees-of-freedom arithmetic. long long comfortably
// covers every count the closed forms produce within the enforced caps.
using Rational = boost::rational<long long>;

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

}  // namespace ciasim
