#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace artmap {

// H x W x C grid of real-valued pixels, row-major with interleaved channels.
// Displayable images live in [0,1]; normalized tensors are unbounded.
// Rasters are plain values: construct, share read-only, never mutate in place
// across threads.
template <typename T>
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  Raster() = default;

  Raster(int h, int w, int c, T fill = T(0)) : height(h), width(w), channels(c) {
    if (h < 1 || w < 1 || c < 1)
      throw std::invalid_argument("raster: dimensions must be >= 1, got " +
                                  std::to_string(h) + "x" + std::to_string(w) +
                                  "x" + std::to_string(c));
    data.assign(static_cast<std::size_t>(h) * w * c, fill);
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  std::size_t value_count() const { return pixel_count() * channels; }

  T& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Raster& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

using RasterF = Raster<float>;
using RasterD = Raster<double>;

template <typename To, typename From>
Raster<To> raster_cast(const Raster<From>& r) {
  Raster<To> out(r.height, r.width, r.channels);
  for (std::size_t i = 0; i < r.data.size(); ++i)
    out.data[i] = static_cast<To>(r.data[i]);
  return out;
}

template <typename T>
Raster<T> clamp01(Raster<T> r) {
  for (T& v : r.data) v = std::min(T(1), std::max(T(0), v));
  return r;
}

// Mirror index into [0,n): ...2,1,0 | 0,1,...,n-1 | n-1,n-2,... (edge repeated).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

enum class ResizeMethod { kNearest, kBilinear };

// Pixel-center aligned resampling. Identity dims reproduce the input exactly;
// bilinear outputs stay within the input value range.
template <typename T>
Raster<T> resize(const Raster<T>& in, int out_h, int out_w,
                 ResizeMethod method = ResizeMethod::kBilinear) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize: target dims must be >= 1");
  Raster<T> out(out_h, out_w, in.channels);
  const double sy = static_cast<double>(in.height) / out_h;
  const double sx = static_cast<double>(in.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      if (method == ResizeMethod::kNearest) {
        int iy = std::min(static_cast<int>((y + 0.5) * sy), in.height - 1);
        int ix = std::min(static_cast<int>((x + 0.5) * sx), in.width - 1);
        for (int c = 0; c < in.channels; ++c) out.at(y, x, c) = in.at(iy, ix, c);
      } else {
        double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, in.height - 1.0);
        double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, in.width - 1.0);
        int y0 = static_cast<int>(fy);
        int x0 = static_cast<int>(fx);
        int y1 = std::min(y0 + 1, in.height - 1);
        int x1 = std::min(x0 + 1, in.width - 1);
        double wy = fy - y0, wx = fx - x0;
        for (int c = 0; c < in.channels; ++c) {
          double v = (1 - wy) * ((1 - wx) * in.at(y0, x0, c) + wx * in.at(y0, x1, c)) +
                     wy * ((1 - wx) * in.at(y1, x0, c) + wx * in.at(y1, x1, c));
          out.at(y, x, c) = static_cast<T>(v);
        }
      }
    }
  }
  return out;
}

// out[p,c] = (in[p,c] - mean[c]) / std[c]
template <typename T>
Raster<T> normalize(const Raster<T>& in, const std::vector<T>& mean,
                    const std::vector<T>& stddev) {
  if (static_cast<int>(mean.size()) != in.channels ||
      static_cast<int>(stddev.size()) != in.channels)
    throw std::invalid_argument("normalize: mean/std length must equal channels");
  for (const T& s : stddev)
    if (!(s > T(0)))
      throw std::invalid_argument("normalize: std entries must be positive");
  Raster<T> out = in;
  std::size_t i = 0;
  for (std::size_t p = 0; p < in.pixel_count(); ++p)
    for (int c = 0; c < in.channels; ++c, ++i)
      out.data[i] = (in.data[i] - mean[c]) / stddev[c];
  return out;
}

template <typename T>
Raster<T> denormalize(const Raster<T>& in, const std::vector<T>& mean,
                      const std::vector<T>& stddev) {
  if (static_cast<int>(mean.size()) != in.channels ||
      static_cast<int>(stddev.size()) != in.channels)
    throw std::invalid_argument("denormalize: mean/std length must equal channels");
  Raster<T> out = in;
  std::size_t i = 0;
  for (std::size_t p = 0; p < in.pixel_count(); ++p)
    for (int c = 0; c < in.channels; ++c, ++i)
      out.data[i] = in.data[i] * stddev[c] + mean[c];
  return out;
}

}  // namespace artmap
