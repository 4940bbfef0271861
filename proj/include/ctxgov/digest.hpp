#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ctxgov {

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// FNV-1a, used only to derive RNG streams (not for integrity).
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 14695981039346656037ull);

}  // namespace ctxgov
