#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

// Little-endian binary stream helpers shared by the on-disk formats.

namespace artmap::ser {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need swaps");

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("binary read: unexpected end of stream");
  return v;
}

template <typename T>
void write_array(std::ostream& os, const T* data, std::size_t n) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void read_array(std::istream& is, T* data, std::size_t n) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw std::runtime_error("binary read: unexpected end of stream");
}

inline void write_magic(std::ostream& os, const char magic[9]) {
  os.write(magic, 8);
}

inline void expect_magic(std::istream& is, const char magic[9], const std::string& what) {
  char got[8];
  is.read(got, 8);
  if (!is || std::memcmp(got, magic, 8) != 0)
    throw std::runtime_error(what + ": bad magic (not a " + what + " file)");
}

}  // namespace artmap::ser
