#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "artmap/features.hpp"
#include "artmap/image_io.hpp"
#include "artmap/raster.hpp"
#include "artmap/rng.hpp"
#include "artmap/serialize.hpp"
#include "artmap/sha256.hpp"
#include "artmap/zip.hpp"

// EuroSAT RGB dataset ingest: archive fetch/verify/unpack, the scene-category
// to land/water mapping, and per-pixel training sample extraction.

namespace artmap::eurosat {

inline const std::array<std::string, 10>& categories() {
  static const std::array<std::string, 10> kCategories = {
      "AnnualCrop", "Forest",     "HerbaceousVegetation", "Highway",
      "Industrial", "Pasture",    "PermanentCrop",        "Residential",
      "River",      "SeaLake"};
  return kCategories;
}

inline bool is_known_category(const std::string& name) {
  const auto& c = categories();
  return std::find(c.begin(), c.end(), name) != c.end();
}

// 1 for the water-dominated scene categories (SeaLake, River), 0 otherwise.
inline int map_category(const std::string& name) {
  if (!is_known_category(name))
    throw std::invalid_argument("unknown EuroSAT category: '" + name + "'");
  return (name == "SeaLake" || name == "River") ? 1 : 0;
}

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<std::pair<std::filesystem::path, std::string>> entries;  // (patch, category)
  std::size_t total_count = 0;
};

namespace detail {

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace detail

// Enumerates patches grouped by category directory name anywhere under root.
// Entry order is deterministic (sorted paths within sorted categories).
inline DatasetManifest scan_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    throw std::runtime_error("dataset root is not a directory: " + root.string());
  DatasetManifest m;
  m.root = root;
  std::vector<std::filesystem::path> category_dirs;
  for (auto it = std::filesystem::recursive_directory_iterator(root);
       it != std::filesystem::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && is_known_category(it->path().filename().string()))
      category_dirs.push_back(it->path());
  }
  std::sort(category_dirs.begin(), category_dirs.end());
  for (const auto& dir : category_dirs) {
    const std::string category = dir.filename().string();
    std::vector<std::filesystem::path> files;
    for (const auto& f : std::filesystem::directory_iterator(dir))
      if (f.is_regular_file() && detail::is_image_file(f.path()))
        files.push_back(f.path());
    std::sort(files.begin(), files.end());
    for (auto& f : files) m.entries.emplace_back(std::move(f), category);
  }
  m.total_count = m.entries.size();
  if (m.entries.empty())
    throw std::runtime_error("no EuroSAT category directories with patches under " +
                             root.string());
  return m;
}

// fetch_dataset (download + verify + unpack) lives in fetch.hpp; it pulls in
// the HTTP client and delegates to ingest_archive below.

// Verifies an already-present archive and unpacks it into dest, then scans.
// No network involved.
inline DatasetManifest ingest_archive(const std::filesystem::path& archive,
                                      const std::filesystem::path& dest,
                                      const std::string& expected_sha256) {
  if (!std::filesystem::exists(archive))
    throw std::runtime_error("dataset archive not found: " + archive.string());
  if (!expected_sha256.empty()) {
    std::string got = sha256_file_hex(archive);
    if (got != expected_sha256)
      throw std::runtime_error("dataset archive checksum mismatch: expected " +
                               expected_sha256 + ", got " + got);
  }
  zip::extract_all(archive, dest, /*skip_existing=*/true);
  return scan_dataset(dest);
}

// Per-pixel training samples. features is row-major N x D, values in [0,1];
// labels holds one binary value per row.
struct SampleSet {
  std::vector<float> features;
  std::vector<std::uint8_t> labels;
  int feature_dim = 0;

  std::size_t count() const { return labels.size(); }
  const float* row(std::size_t i) const { return features.data() + i * feature_dim; }
};

// Up to per_patch_cap pixel positions per patch, sampled uniformly without
// replacement. Each sample is the reflect-padded window neighborhood of its
// pixel; the patch's category label is broadcast to all of its samples.
// Patch sub-streams are seeded independently, so extraction could run
// patch-parallel and still concatenate in manifest order.
inline SampleSet extract_pixel_samples(const DatasetManifest& manifest, int window,
                                       int per_patch_cap, std::uint64_t seed) {
  require_odd_window(window);
  if (per_patch_cap < 1)
    throw std::invalid_argument("per_patch_cap must be >= 1");
  if (manifest.entries.empty())
    throw std::invalid_argument("empty dataset manifest");
  SampleSet s;
  s.feature_dim = window_feature_dim(window);
  for (std::size_t patch_idx = 0; patch_idx < manifest.entries.size(); ++patch_idx) {
    const auto& [path, category] = manifest.entries[patch_idx];
    const int label = map_category(category);
    Raster<float> patch = io::load_image(path);
    auto g = rng::engine(rng::mix(seed, patch_idx));
    const std::uint32_t total = static_cast<std::uint32_t>(patch.pixel_count());
    const std::uint32_t want =
        std::min<std::uint32_t>(static_cast<std::uint32_t>(per_patch_cap), total);
    std::vector<std::uint32_t> picks = rng::sample_without_replacement(total, want, g);
    for (std::uint32_t p : picks) {
      const int y = static_cast<int>(p / patch.width);
      const int x = static_cast<int>(p % patch.width);
      const std::size_t base = s.features.size();
      s.features.resize(base + s.feature_dim);
      window_feature(patch, y, x, window, s.features.data() + base);
      s.labels.push_back(static_cast<std::uint8_t>(label));
    }
  }
  return s;
}

// Disjoint, exhaustive partition with sizes floor(N*f); the remainder goes to
// train. Deterministic for a given seed.
inline std::array<SampleSet, 3> split(const SampleSet& samples, double f_train,
                                      double f_val, double f_test,
                                      std::uint64_t seed) {
  if (!(f_train > 0) || !(f_val > 0) || !(f_test > 0))
    throw std::invalid_argument("split fractions must be positive");
  if (std::abs(f_train + f_val + f_test - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  const std::size_t n = samples.count();
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  auto g = rng::engine(seed);
  rng::shuffle(idx, g);
  std::size_t n_val = static_cast<std::size_t>(n * f_val);
  std::size_t n_test = static_cast<std::size_t>(n * f_test);
  std::size_t n_train = n - n_val - n_test;  // floor(N*f_train) + remainder
  std::array<SampleSet, 3> parts;
  std::array<std::pair<std::size_t, std::size_t>, 3> ranges = {
      std::pair<std::size_t, std::size_t>{0, n_train},
      {n_train, n_train + n_val},
      {n_train + n_val, n}};
  for (int k = 0; k < 3; ++k) {
    parts[k].feature_dim = samples.feature_dim;
    for (std::size_t i = ranges[k].first; i < ranges[k].second; ++i) {
      const float* r = samples.row(idx[i]);
      parts[k].features.insert(parts[k].features.end(), r, r + samples.feature_dim);
      parts[k].labels.push_back(samples.labels[idx[i]]);
    }
  }
  return parts;
}

// SampleSet container: 16-byte header (magic "ARTMAPSS", version u16, N u32,
// D u16), then N*D little-endian f32, then N label bytes.
inline constexpr char kSampleMagic[9] = "ARTMAPSS";
inline constexpr std::uint16_t kSampleVersion = 1;

inline void save_samples(const SampleSet& s, const std::filesystem::path& path) {
  if (s.count() > UINT32_MAX || s.feature_dim > UINT16_MAX)
    throw std::runtime_error("sample set too large for container");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  ser::write_magic(f, kSampleMagic);
  ser::write_pod<std::uint16_t>(f, kSampleVersion);
  ser::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(s.count()));
  ser::write_pod<std::uint16_t>(f, static_cast<std::uint16_t>(s.feature_dim));
  ser::write_array(f, s.features.data(), s.features.size());
  ser::write_array(f, s.labels.data(), s.labels.size());
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline SampleSet load_samples(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  ser::expect_magic(f, kSampleMagic, "sample set");
  auto version = ser::read_pod<std::uint16_t>(f);
  if (version != kSampleVersion)
    throw std::runtime_error("unsupported sample set version " + std::to_string(version));
  auto n = ser::read_pod<std::uint32_t>(f);
  auto d = ser::read_pod<std::uint16_t>(f);
  SampleSet s;
  s.feature_dim = d;
  s.features.resize(static_cast<std::size_t>(n) * d);
  s.labels.resize(n);
  ser::read_array(f, s.features.data(), s.features.size());
  ser::read_array(f, s.labels.data(), s.labels.size());
  return s;
}

}  // namespace artmap::eurosat
