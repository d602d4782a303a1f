#pragma once

// Little-endian primitive encoding shared by the model file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "posecascade/errors.hpp"

namespace posecascade::detail {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(bytes, 4);
}

inline void write_i32(std::ostream& os, std::int32_t v) {
  write_u32(os, static_cast<std::uint32_t>(v));
}

inline void write_f64(std::ostream& os, double v) {
  write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& is, char* dst, std::size_t n,
                       const char* what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw FormatError(std::string(what) + ": unexpected end of file");
  }
}

inline std::uint64_t read_u64(std::istream& is, const char* what) {
  unsigned char bytes[8];
  read_exact(is, reinterpret_cast<char*>(bytes), 8, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
  unsigned char bytes[4];
  read_exact(is, reinterpret_cast<char*>(bytes), 4, what);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline std::int32_t read_i32(std::istream& is, const char* what) {
  return static_cast<std::int32_t>(read_u32(is, what));
}

inline double read_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(read_u64(is, what));
}

inline std::string read_string(std::istream& is, const char* what,
                               std::uint64_t max_len = 1 << 20) {
  const auto n = read_u64(is, what);
  if (n > max_len) throw FormatError(std::string(what) + ": string too long");
  std::string s(n, '\0');
  read_exact(is, s.data(), n, what);
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[9],
                         const char* what) {
  char got[8];
  read_exact(is, got, 8, what);
  if (std::memcmp(got, magic, 8) != 0) {
    throw FormatError(std::string(what) + ": bad magic number");
  }
}

}  // namespace posecascade::detail
