#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "artmap/raster.hpp"
#include "artmap/rng.hpp"

// Procedural demo imagery: a small coastal scene standing in for a satellite
// tile, two painting-like style patterns, and EuroSAT-shaped 64x64 patches.
// Everything is seeded and deterministic so shipped assets and test fixtures
// can be regenerated bit-identically.

namespace artmap::demo {

namespace detail {

// Bilinear value noise on a seeded lattice, output in [0,1].
inline double value_noise(double y, double x, int cell, std::uint64_t seed) {
  const auto lattice = [seed](long gy, long gx) {
    return static_cast<double>(
               rng::mix(seed, rng::mix(static_cast<std::uint64_t>(gy) * 0x9e3779b1ull,
                                       static_cast<std::uint64_t>(gx))) >>
               11) *
           0x1.0p-53;
  };
  const double fy = y / cell, fx = x / cell;
  const long y0 = static_cast<long>(std::floor(fy));
  const long x0 = static_cast<long>(std::floor(fx));
  const double ty = fy - y0, tx = fx - x0;
  const double sy = ty * ty * (3 - 2 * ty);  // smoothstep
  const double sx = tx * tx * (3 - 2 * tx);
  const double v00 = lattice(y0, x0), v01 = lattice(y0, x0 + 1);
  const double v10 = lattice(y0 + 1, x0), v11 = lattice(y0 + 1, x0 + 1);
  return (1 - sy) * ((1 - sx) * v00 + sx * v01) + sy * ((1 - sx) * v10 + sx * v11);
}

inline double fbm(double y, double x, int base_cell, int octaves, std::uint64_t seed) {
  double sum = 0, amp = 1, norm = 0;
  int cell = base_cell;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * value_noise(y, x, std::max(1, cell), rng::mix(seed, o));
    norm += amp;
    amp *= 0.5;
    cell /= 2;
  }
  return sum / norm;
}

}  // namespace detail

// Synthetic coastal tile: greenish textured landmass against bluish water,
// with a noise-driven coastline. Roughly EuroSAT-like colors.
inline Raster<float> coastal_image(int h, int w, std::uint64_t seed) {
  Raster<float> img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // coastline: diagonal gradient warped by low-frequency noise
      const double coast = (x - 0.55 * w) / w + 0.12 * (y - 0.5 * h) / h +
                           0.55 * (detail::fbm(y, x, h / 2, 4, rng::mix(seed, 1)) - 0.5);
      const double tex = detail::fbm(y, x, 12, 4, rng::mix(seed, 2));
      float r, g, b;
      if (coast < 0) {  // land
        const double veg = detail::fbm(y, x, 24, 3, rng::mix(seed, 3));
        r = static_cast<float>(0.22 + 0.20 * tex + 0.10 * veg);
        g = static_cast<float>(0.34 + 0.22 * tex + 0.12 * veg);
        b = static_cast<float>(0.16 + 0.10 * tex);
      } else {  // water
        const double wave =
            0.5 + 0.5 * std::sin(0.35 * y + 8.0 * detail::fbm(y, x, 16, 2, rng::mix(seed, 4)));
        r = static_cast<float>(0.05 + 0.05 * wave);
        g = static_cast<float>(0.16 + 0.08 * wave + 0.05 * tex);
        b = static_cast<float>(0.38 + 0.16 * wave + 0.08 * tex);
      }
      img.at(y, x, 0) = std::min(1.0f, std::max(0.0f, r));
      img.at(y, x, 1) = std::min(1.0f, std::max(0.0f, g));
      img.at(y, x, 2) = std::min(1.0f, std::max(0.0f, b));
    }
  }
  return img;
}

// Warm swirling strokes; the shipped land style.
inline Raster<float> style_swirls(int h, int w, std::uint64_t seed) {
  Raster<float> img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double n1 = detail::fbm(y, x, 20, 4, rng::mix(seed, 10));
      const double n2 = detail::fbm(y, x, 40, 3, rng::mix(seed, 11));
      const double swirl = 0.5 + 0.5 * std::sin(0.22 * x + 0.18 * y + 9.0 * n1);
      const double strokes = 0.5 + 0.5 * std::sin(0.9 * y + 12.0 * n2);
      img.at(y, x, 0) = static_cast<float>(0.55 + 0.35 * swirl - 0.12 * strokes);
      img.at(y, x, 1) = static_cast<float>(0.30 + 0.30 * swirl * strokes);
      img.at(y, x, 2) = static_cast<float>(0.12 + 0.18 * n2);
    }
  }
  return clamp01(std::move(img));
}

// Cool layered waves; the shipped water style.
inline Raster<float> style_waves(int h, int w, std::uint64_t seed) {
  Raster<float> img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double n = detail::fbm(y, x, 28, 4, rng::mix(seed, 20));
      const double band = 0.5 + 0.5 * std::sin(0.45 * y + 10.0 * n + 0.08 * x);
      const double foam = detail::fbm(y, x, 8, 2, rng::mix(seed, 21));
      img.at(y, x, 0) = static_cast<float>(0.08 + 0.15 * foam * band);
      img.at(y, x, 1) = static_cast<float>(0.22 + 0.30 * band);
      img.at(y, x, 2) = static_cast<float>(0.45 + 0.40 * band - 0.10 * foam);
    }
  }
  return clamp01(std::move(img));
}

// 64x64 patch with the color statistics of an EuroSAT scene category.
// Supports the categories the tests exercise; everything else gets a neutral
// textured tile.
inline Raster<float> eurosat_like_patch(const std::string& category,
                                        std::uint64_t seed) {
  const int n = 64;
  Raster<float> img(n, n, 3);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double tex = detail::fbm(y, x, 16, 4, rng::mix(seed, 30));
      const double fine = detail::fbm(y, x, 4, 2, rng::mix(seed, 31));
      float r, g, b;
      if (category == "SeaLake" || category == "River") {
        r = static_cast<float>(0.06 + 0.08 * tex);
        g = static_cast<float>(0.15 + 0.12 * tex + 0.04 * fine);
        b = static_cast<float>(0.35 + 0.20 * tex + 0.06 * fine);
      } else if (category == "Forest") {
        r = static_cast<float>(0.10 + 0.10 * tex);
        g = static_cast<float>(0.28 + 0.18 * tex + 0.06 * fine);
        b = static_cast<float>(0.10 + 0.08 * tex);
      } else if (category == "Residential" || category == "Industrial") {
        r = static_cast<float>(0.40 + 0.25 * fine);
        g = static_cast<float>(0.38 + 0.22 * fine);
        b = static_cast<float>(0.36 + 0.20 * fine);
      } else {  // crops, pasture, highway, ...
        r = static_cast<float>(0.30 + 0.20 * tex);
        g = static_cast<float>(0.32 + 0.18 * tex + 0.05 * fine);
        b = static_cast<float>(0.18 + 0.10 * tex);
      }
      img.at(y, x, 0) = r;
      img.at(y, x, 1) = g;
      img.at(y, x, 2) = b;
    }
  }
  return clamp01(std::move(img));
}

}  // namespace artmap::demo
