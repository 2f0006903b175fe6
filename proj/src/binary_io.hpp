#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "drpg/error.hpp"

// Little-endian primitives for the index and checkpoint files.
namespace drpg::binary_io {

template <class U>
void put_le(std::ostream& out, U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
    unsigned char buf[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw Error(ErrorCode::IoFailure, "truncated file");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ostream& out, double x) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

inline void put_str(std::ostream& out, const std::string& s) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_str(std::istream& in) {
    auto n = get_le<std::uint32_t>(in);
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw Error(ErrorCode::IoFailure, "truncated file");
    return s;
}

}  // namespace drpg::binary_io
