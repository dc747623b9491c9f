#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace plm {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// First 8 bytes of SHA-256, big-endian. Stable across platforms, used to
// derive per-item RNG seeds.
std::uint64_t sha256_u64(std::string_view data);

} // namespace plm
