// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian primitive IO shared by the replay and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace pompc::binio {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw FormatError("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

inline void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is, std::uint64_t max_len = (1ULL << 32)) {
  const auto n = get<std::uint64_t>(is);
  if (n > max_len) throw FormatError("string block too long");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw FormatError("unexpected end of file");
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[9]) {
  char buf[8];
  is.read(buf, 8);
  if (!is || std::memcmp(buf, magic, 8) != 0) throw FormatError("bad magic; not a " + std::string(magic, 8) + " file");
}

}  // namespace pompc::binio
