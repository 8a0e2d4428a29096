#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "artmap/eurosat.hpp"
#include "artmap/sha256.hpp"

// HTTP(S) download of the EuroSAT archive. Kept out of eurosat.hpp so only
// the CLI pays the httplib compile cost.

namespace artmap::eurosat {

namespace detail {

struct ParsedUrl {
  std::string scheme_host;  // e.g. "https://madm.dfki.de"
  std::string path;         // e.g. "/files/sentinel/EuroSAT.zip"
};

inline ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("malformed URL (missing scheme): " + url);
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  if (path_start == std::string::npos) {
    p.scheme_host = url;
    p.path = "/";
  } else {
    p.scheme_host = url.substr(0, path_start);
    p.path = url.substr(path_start);
  }
  return p;
}

inline void download_file(const std::string& url, const std::filesystem::path& out) {
  ParsedUrl u = parse_url(url);
  httplib::Client client(u.scheme_host);
  client.set_follow_location(true);
  client.set_connection_timeout(30);
  client.set_read_timeout(300);
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + out.string());
  auto res = client.Get(u.path, [&](const char* data, size_t n) {
    f.write(data, static_cast<std::streamsize>(n));
    return static_cast<bool>(f);
  });
  if (!res)
    throw std::runtime_error("network failure fetching " + url + ": " +
                             httplib::to_string(res.error()));
  if (res->status != 200)
    throw std::runtime_error("HTTP " + std::to_string(res->status) + " fetching " + url);
  f.close();
  if (!f) throw std::runtime_error("short write: " + out.string());
}

}  // namespace detail

// If the archive is already present at dest and its checksum matches, the
// download is skipped. Checksum mismatch of a fresh download is an error and
// the bad archive is removed.
inline DatasetManifest fetch_dataset(const std::string& source_url,
                                     const std::filesystem::path& dest,
                                     const std::string& expected_sha256) {
  std::filesystem::create_directories(dest);
  std::string filename = "EuroSAT.zip";
  if (auto slash = source_url.find_last_of('/');
      slash != std::string::npos && slash + 1 < source_url.size())
    filename = source_url.substr(slash + 1);
  std::filesystem::path archive = dest / filename;

  bool have_archive = std::filesystem::exists(archive);
  if (have_archive && !expected_sha256.empty() &&
      sha256_file_hex(archive) != expected_sha256) {
    have_archive = false;  // stale or truncated; refetch
  }
  if (!have_archive) {
    detail::download_file(source_url, archive);
    if (!expected_sha256.empty()) {
      std::string got = sha256_file_hex(archive);
      if (got != expected_sha256) {
        std::filesystem::remove(archive);
        throw std::runtime_error("downloaded archive checksum mismatch: expected " +
                                 expected_sha256 + ", got " + got);
      }
    }
  }
  return ingest_archive(archive, dest, expected_sha256);
}

}  // namespace artmap::eurosat
