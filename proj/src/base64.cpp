#include "tog/base64.hpp"

#include <array>

#include "tog/error.hpp"

namespace tog {

namespace {
constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<int8_t, 256> decode_table() {
  std::array<int8_t, 256> t;
  t.fill(-1);
  for (int i = 0; i < 64; ++i) t[static_cast<uint8_t>(kAlphabet[i])] = static_cast<int8_t>(i);
  return t;
}
}  // namespace

std::string base64_encode(const std::vector<uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  size_t rem = data.size() - i;
  if (rem == 1) {
    uint32_t v = data[i] << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
  static const std::array<int8_t, 256> table = decode_table();
  if (text.size() % 4 != 0) fail(Errc::ProtocolError, "base64 length not multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) fail(Errc::ProtocolError, "bad base64 padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) fail(Errc::ProtocolError, "base64 data after padding");
      int8_t d = table[static_cast<uint8_t>(c)];
      if (d < 0) fail(Errc::ProtocolError, "bad base64 character");
      v = (v << 6) | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v & 0xff));
  }
  return out;
}

std::vector<uint8_t> pack_bits(const std::vector<uint8_t>& bits) {
  std::vector<uint8_t> out((bits.size() + 7) / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
  return out;
}

std::vector<uint8_t> unpack_bits(const std::vector<uint8_t>& bytes, size_t n_bits) {
  if (bytes.size() != (n_bits + 7) / 8)
    fail(Errc::ProtocolError, "packed bit payload has wrong length");
  std::vector<uint8_t> bits(n_bits, 0);
  for (size_t i = 0; i < n_bits; ++i)
    bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
  return bits;
}

}  // namespace tog
