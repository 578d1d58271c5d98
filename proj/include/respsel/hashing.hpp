#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace respsel {

// 64-bit FNV-1a. Stable across platforms, which std::hash is not.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

// Hex content hash of a string / a file's bytes.
std::string content_hash(std::string_view data);
std::string file_hash(const std::filesystem::path& path);

}  // namespace respsel
