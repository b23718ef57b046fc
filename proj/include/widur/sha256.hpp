#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace widur {

// SHA-256 of a byte buffer, returned as a lowercase hex string.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& data);

}  // namespace widur
