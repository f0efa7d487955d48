#pragma once

#define CIASIM_VERSION "0.1.0"

namespace ciasim {
inline constexpr const char* kVersion = CIASIM_VERSION;
}
