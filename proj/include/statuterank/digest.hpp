#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace statuterank {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First eight bytes of SHA-256(data), big-endian.
std::uint64_t sha256_prefix64(std::string_view data);

} // namespace statuterank
