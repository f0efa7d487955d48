#pragma once

#include <string>

namespace ciasim {

// Reads a whole file; throws ConfigError when the file cannot be opened.
std::string read_file(const std::string& path);

// Writes via a temporary file in the same directory followed by an atomic
// rename, so a crash or error never leaves a partially written file at the
// destination.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace ciasim
