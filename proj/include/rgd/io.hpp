#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rgd/types.hpp"

namespace rgd {

// Little-endian IEEE-754 float64 arrays; byte order is explicit so files are
// portable regardless of host endianness.
void write_f64_le(const std::filesystem::path& path, const double* data, std::size_t count);
std::vector<double> read_f64_le(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// FNV-1a 64-bit over a file's bytes, as a hex string. Used for manifests and
// the idempotence checks.
std::string file_checksum(const std::filesystem::path& path);
std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace rgd
