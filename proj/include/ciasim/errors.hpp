#pragma once

#include <stdexcept>
#include <string>

namespace ciasim {

// Error taxonomy shared by the library and the CLI.
//
//   ConfigError      invalid user input (bad dimensions, malformed files,
//                    out-of-range arguments)
//   InfeasibleError  structurally valid request that cannot be satisfied
//                    (constellation over the point cap, Q < 1 at the
//                    requested power, too few reliable sweep points)
//   DiagnosticError  degenerate numerics detected at runtime (coefficient
//                    collisions, non-generic channel draws that survived
//                    sampling)
//
// The CLI maps these to exit codes 2, 3 and 4 respectively.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitDiagnostic = 4;

}  // namespace ciasim
