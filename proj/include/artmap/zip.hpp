#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <zlib.h>

// Minimal ZIP archive support: enough to unpack the EuroSAT distribution
// (stored + deflate entries, no zip64, no encryption) and to build small
// archives in tests. CRCs are verified on extraction.

namespace artmap::zip {

struct Entry {
  std::string name;
  std::uint16_t method = 0;  // 0 = stored, 8 = deflate
  std::uint32_t crc32 = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t uncompressed_size = 0;
  std::uint32_t local_header_offset = 0;

  bool is_dir() const { return !name.empty() && name.back() == '/'; }
};

namespace detail {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEocdSig = 0x06054b50;

inline std::uint16_t u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(x & 0xFF);
  v.push_back((x >> 8) & 0xFF);
}
inline void put32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back((x >> (8 * i)) & 0xFF);
}

inline std::vector<std::uint8_t> inflate_raw(const std::uint8_t* src, std::size_t n,
                                             std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
    throw std::runtime_error("zip: inflateInit failed");
  zs.next_in = const_cast<Bytef*>(src);
  zs.avail_in = static_cast<uInt>(n);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected)
    throw std::runtime_error("zip: malformed deflate stream");
  return out;
}

inline std::vector<std::uint8_t> deflate_raw(const std::uint8_t* src, std::size_t n) {
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw std::runtime_error("zip: deflateInit failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(n)));
  zs.next_in = const_cast<Bytef*>(src);
  zs.avail_in = static_cast<uInt>(n);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("zip: deflate failed");
  return out;
}

inline std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("zip: cannot open " + path.string());
  f.seekg(0, std::ios::end);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(f.tellg()));
  f.seekg(0);
  if (!bytes.empty()) f.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!f) throw std::runtime_error("zip: cannot read " + path.string());
  return bytes;
}

// Rejects entries that could escape the destination directory.
inline void check_safe_name(const std::string& name) {
  if (name.empty() || name.front() == '/' || name.find("..") != std::string::npos ||
      name.find('\\') != std::string::npos)
    throw std::runtime_error("zip: unsafe entry name '" + name + "'");
}

}  // namespace detail

inline std::vector<Entry> list(const std::filesystem::path& archive) {
  using namespace detail;
  std::vector<std::uint8_t> bytes = slurp(archive);
  if (bytes.size() < 22) throw std::runtime_error("zip: malformed archive (too small)");
  // EOCD: scan backwards over at most 64k of comment.
  std::size_t eocd = std::string::npos;
  std::size_t lo = bytes.size() >= 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
  for (std::size_t i = bytes.size() - 22 + 1; i-- > lo;) {
    if (u32(&bytes[i]) == kEocdSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos)
    throw std::runtime_error("zip: malformed archive (no end-of-central-directory)");
  std::uint16_t count = u16(&bytes[eocd + 10]);
  std::uint32_t cd_size = u32(&bytes[eocd + 12]);
  std::uint32_t cd_off = u32(&bytes[eocd + 16]);
  if (static_cast<std::size_t>(cd_off) + cd_size > bytes.size())
    throw std::runtime_error("zip: malformed archive (central directory out of range)");
  std::vector<Entry> entries;
  entries.reserve(count);
  std::size_t p = cd_off;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (p + 46 > bytes.size() || u32(&bytes[p]) != kCentralSig)
      throw std::runtime_error("zip: malformed central directory entry");
    Entry e;
    e.method = u16(&bytes[p + 10]);
    e.crc32 = u32(&bytes[p + 16]);
    e.compressed_size = u32(&bytes[p + 20]);
    e.uncompressed_size = u32(&bytes[p + 24]);
    std::uint16_t name_len = u16(&bytes[p + 28]);
    std::uint16_t extra_len = u16(&bytes[p + 30]);
    std::uint16_t comment_len = u16(&bytes[p + 32]);
    e.local_header_offset = u32(&bytes[p + 42]);
    if (p + 46 + name_len > bytes.size())
      throw std::runtime_error("zip: malformed central directory name");
    e.name.assign(reinterpret_cast<const char*>(&bytes[p + 46]), name_len);
    entries.push_back(std::move(e));
    p += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

inline std::vector<std::uint8_t> read_entry(const std::vector<std::uint8_t>& bytes,
                                            const Entry& e) {
  using namespace detail;
  std::size_t p = e.local_header_offset;
  if (p + 30 > bytes.size() || u32(&bytes[p]) != kLocalSig)
    throw std::runtime_error("zip: malformed local header for '" + e.name + "'");
  std::uint16_t name_len = u16(&bytes[p + 26]);
  std::uint16_t extra_len = u16(&bytes[p + 28]);
  std::size_t data = p + 30 + name_len + extra_len;
  if (data + e.compressed_size > bytes.size())
    throw std::runtime_error("zip: truncated data for '" + e.name + "'");
  std::vector<std::uint8_t> raw;
  if (e.method == 0) {
    raw.assign(bytes.begin() + data, bytes.begin() + data + e.compressed_size);
  } else if (e.method == 8) {
    raw = inflate_raw(&bytes[data], e.compressed_size, e.uncompressed_size);
  } else {
    throw std::runtime_error("zip: unsupported compression method " +
                             std::to_string(e.method) + " for '" + e.name + "'");
  }
  std::uint32_t crc = ::crc32(0, raw.data(), static_cast<uInt>(raw.size()));
  if (crc != e.crc32)
    throw std::runtime_error("zip: CRC mismatch for '" + e.name + "' (corrupt archive)");
  return raw;
}

// Unpacks everything under dest. Existing files are left alone, which makes
// re-extraction over a partially unpacked tree cheap and idempotent.
inline std::size_t extract_all(const std::filesystem::path& archive,
                               const std::filesystem::path& dest,
                               bool skip_existing = true) {
  std::vector<std::uint8_t> bytes = detail::slurp(archive);
  std::size_t written = 0;
  for (const Entry& e : list(archive)) {
    detail::check_safe_name(e.name);
    std::filesystem::path target = dest / e.name;
    if (e.is_dir()) {
      std::filesystem::create_directories(target);
      continue;
    }
    if (skip_existing && std::filesystem::exists(target)) continue;
    std::filesystem::create_directories(target.parent_path());
    std::vector<std::uint8_t> raw = read_entry(bytes, e);
    std::ofstream f(target, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("zip: cannot write " + target.string());
    f.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    ++written;
  }
  return written;
}

// Writes a fresh archive with deflate-compressed entries. Used by tests and
// tooling; entry order is preserved.
inline void write_archive(
    const std::filesystem::path& archive,
    const std::vector<std::pair<std::string, std::vector<std::uint8_t>>>& files) {
  using namespace detail;
  std::vector<std::uint8_t> out;
  struct Central {
    Entry e;
  };
  std::vector<Entry> central;
  for (const auto& [name, data] : files) {
    Entry e;
    e.name = name;
    e.method = 8;
    e.crc32 = ::crc32(0, data.data(), static_cast<uInt>(data.size()));
    e.uncompressed_size = static_cast<std::uint32_t>(data.size());
    std::vector<std::uint8_t> packed = deflate_raw(data.data(), data.size());
    e.compressed_size = static_cast<std::uint32_t>(packed.size());
    e.local_header_offset = static_cast<std::uint32_t>(out.size());
    put32(out, kLocalSig);
    put16(out, 20);      // version needed
    put16(out, 0);       // flags
    put16(out, e.method);
    put16(out, 0);       // mod time
    put16(out, 0);       // mod date
    put32(out, e.crc32);
    put32(out, e.compressed_size);
    put32(out, e.uncompressed_size);
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);       // extra len
    out.insert(out.end(), name.begin(), name.end());
    out.insert(out.end(), packed.begin(), packed.end());
    central.push_back(std::move(e));
  }
  std::uint32_t cd_off = static_cast<std::uint32_t>(out.size());
  for (const Entry& e : central) {
    put32(out, kCentralSig);
    put16(out, 20);  // version made by
    put16(out, 20);  // version needed
    put16(out, 0);
    put16(out, e.method);
    put16(out, 0);
    put16(out, 0);
    put32(out, e.crc32);
    put32(out, e.compressed_size);
    put32(out, e.uncompressed_size);
    put16(out, static_cast<std::uint16_t>(e.name.size()));
    put16(out, 0);  // extra
    put16(out, 0);  // comment
    put16(out, 0);  // disk number
    put16(out, 0);  // internal attrs
    put32(out, 0);  // external attrs
    put32(out, e.local_header_offset);
    out.insert(out.end(), e.name.begin(), e.name.end());
  }
  std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_off;
  put32(out, kEocdSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(central.size()));
  put16(out, static_cast<std::uint16_t>(central.size()));
  put32(out, cd_size);
  put32(out, cd_off);
  put16(out, 0);  // comment length
  std::ofstream f(archive, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("zip: cannot write " + archive.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

}  // namespace artmap::zip
