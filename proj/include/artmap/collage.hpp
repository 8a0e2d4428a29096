#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "artmap/label_map.hpp"
#include "artmap/raster.hpp"

// Final assembly: every pixel is taken from the stylized raster of its
// predicted category. Hard selection is the paper-faithful default; feathered
// blending is an opt-in seam softener.

namespace artmap::collage {

namespace detail {

template <typename T>
void check_inputs(const LabelMap& labels, const std::vector<Raster<T>>& stylized) {
  if (static_cast<int>(stylized.size()) != labels.num_categories)
    throw std::invalid_argument("compose: need exactly " +
                                std::to_string(labels.num_categories) +
                                " stylized rasters, got " +
                                std::to_string(stylized.size()));
  for (const auto& r : stylized) {
    if (r.height != labels.height || r.width != labels.width)
      throw std::invalid_argument("compose: stylized raster dims do not match labels");
    if (r.channels != stylized.front().channels)
      throw std::invalid_argument("compose: stylized rasters disagree on channels");
  }
  for (std::uint8_t l : labels.labels)
    if (l >= labels.num_categories)
      throw std::invalid_argument("compose: label " + std::to_string(l) + " >= K");
}

}  // namespace detail

// out[p,c] = stylized[labels[p]][p,c]; no blending.
template <typename T>
Raster<T> compose(const LabelMap& labels, const std::vector<Raster<T>>& stylized) {
  detail::check_inputs(labels, stylized);
  const int channels = stylized.front().channels;
  Raster<T> out(labels.height, labels.width, channels);
  for (std::size_t p = 0; p < labels.pixel_count(); ++p) {
    const Raster<T>& src = stylized[labels.labels[p]];
    for (int c = 0; c < channels; ++c)
      out.data[p * channels + c] = src.data[p * channels + c];
  }
  return out;
}

// Box-blurred per-category indicators, renormalized per pixel, used as convex
// blend weights. radius 0 reduces exactly to compose.
template <typename T>
Raster<T> feathered_compose(const LabelMap& labels,
                            const std::vector<Raster<T>>& stylized, int radius) {
  if (radius < 0) throw std::invalid_argument("feathered_compose: negative radius");
  detail::check_inputs(labels, stylized);
  if (radius == 0) return compose(labels, stylized);
  const int k = labels.num_categories;
  const int channels = stylized.front().channels;
  Raster<T> out(labels.height, labels.width, channels);
  std::vector<double> weights(k);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (int dy = -radius; dy <= radius; ++dy) {
        const int sy = reflect_index(y + dy, labels.height);
        for (int dx = -radius; dx <= radius; ++dx)
          weights[labels.at(sy, reflect_index(x + dx, labels.width))] += 1.0;
      }
      double total = 0.0;
      for (double w : weights) total += w;
      const std::size_t p = static_cast<std::size_t>(y) * labels.width + x;
      for (int c = 0; c < channels; ++c) {
        // inside a uniform neighborhood one weight is exactly 1: bit-equal
        // to the hard composite there
        double acc = 0.0;
        for (int cat = 0; cat < k; ++cat) {
          const double w = weights[cat] / total;
          if (w == 0.0) continue;
          if (w == 1.0) {
            acc = stylized[cat].data[p * channels + c];
            break;
          }
          acc += w * stylized[cat].data[p * channels + c];
        }
        out.data[p * channels + c] = static_cast<T>(acc);
      }
    }
  }
  return out;
}

}  // namespace artmap::collage
