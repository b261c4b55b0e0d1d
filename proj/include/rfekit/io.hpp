#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rfekit {

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames it into place so readers
// never observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace rfekit
