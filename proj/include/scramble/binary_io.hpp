// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace scramble::io {

std::uint32_t crc32(std::span<const std::byte> bytes, std::uint32_t seed = 0);

/// Little-endian float64 encoding, independent of host byte order.
std::vector<std::byte> encode_f64(std::span<const double> values);
std::vector<double> decode_f64(std::span<const std::byte> bytes);

std::vector<std::byte> read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename.
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

inline std::span<const std::byte> as_bytes(const std::string& s) {
  return std::as_bytes(std::span<const char>(s.data(), s.size()));
}

}  // namespace scramble::io
