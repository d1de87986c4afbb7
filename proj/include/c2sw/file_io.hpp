#pragma once

#include <filesystem>
#include <string>

namespace c2sw {

std::string read_file(const std::filesystem::path& path);
// Writes through an exclusive advisory lock on the target; fails if another
// process holds it.
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace c2sw
