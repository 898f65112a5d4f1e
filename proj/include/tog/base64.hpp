#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tog {

std::string base64_encode(const std::vector<uint8_t>& data);
// Errors with ProtocolError on malformed input.
std::vector<uint8_t> base64_decode(const std::string& text);

// Row-major bit packing (MSB first within each byte, final byte zero-padded)
// used for masks in manifests and on the backend wire.
std::vector<uint8_t> pack_bits(const std::vector<uint8_t>& bits);
std::vector<uint8_t> unpack_bits(const std::vector<uint8_t>& bytes, size_t n_bits);

}  // namespace tog
