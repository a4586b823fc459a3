#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "egcm/error.hpp"

// Little-endian primitives shared by the graph and checkpoint containers.
namespace egcm::binio {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_bytes(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of file");
  return static_cast<std::uint8_t>(c);
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline std::string get_bytes(std::istream& in, std::uint64_t limit = 1ull << 32) {
  const std::uint64_t n = get_u64(in);
  if (n > limit) throw FormatError("length prefix out of range");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("unexpected end of file");
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw FormatError(std::string("bad magic: expected ") + magic);
}

}  // namespace egcm::binio
