#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gisc {

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace gisc
