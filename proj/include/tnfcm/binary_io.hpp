#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "tnfcm/common.hpp"

namespace tnfcm::binary {

// Little-endian encode/decode independent of host byte order.

template <typename UInt>
void write_uint(std::ostream& os, UInt value) {
    std::array<char, sizeof(UInt)> buf{};
    for (std::size_t i = 0; i < sizeof(UInt); ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    os.write(buf.data(), buf.size());
}

inline void write_f32(std::ostream& os, float value) { write_uint(os, std::bit_cast<std::uint32_t>(value)); }

/// Reads one little-endian integer; `what` names the field in the error.
template <typename UInt>
UInt read_uint(std::istream& is, const std::string& what) {
    std::array<unsigned char, sizeof(UInt)> buf{};
    is.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (is.gcount() != static_cast<std::streamsize>(buf.size()))
        throw FormatError("truncated file while reading " + what);
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
    return v;
}

inline float read_f32(std::istream& is, const std::string& what) {
    return std::bit_cast<float>(read_uint<std::uint32_t>(is, what));
}

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& file) {
    char buf[4] = {};
    is.read(buf, 4);
    if (is.gcount() != 4) throw FormatError(file + ": truncated header");
    if (std::memcmp(buf, magic, 4) != 0)
        throw FormatError(file + ": bad magic bytes (expected " + std::string(magic, 4) + ")");
}

}  // namespace tnfcm::binary
