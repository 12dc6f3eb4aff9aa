#pragma once

#include <filesystem>
#include <string>

#include "cipher/common.hpp"

namespace cipher {

/// Writes to a temporary sibling and renames into place, so a failing run
/// never leaves a partial output file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace cipher
