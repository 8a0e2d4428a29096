#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace artmap {

// Per-pixel category grid. For this pipeline K = 2: 0 = land, 1 = water.
struct LabelMap {
  int height = 0;
  int width = 0;
  int num_categories = 2;
  std::vector<std::uint8_t> labels;  // size height*width, each < num_categories

  LabelMap() = default;

  LabelMap(int h, int w, int k, std::uint8_t fill = 0)
      : height(h), width(w), num_categories(k) {
    if (h < 1 || w < 1 || k < 1)
      throw std::invalid_argument("label map: dimensions and K must be >= 1");
    if (fill >= k) throw std::invalid_argument("label map: fill label >= K");
    labels.assign(static_cast<std::size_t>(h) * w, fill);
  }

  std::uint8_t& at(int y, int x) {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }

  void validate() const {
    if (labels.size() != pixel_count())
      throw std::runtime_error("label map: storage size mismatch");
    for (std::uint8_t l : labels)
      if (l >= num_categories)
        throw std::runtime_error("label map: label " + std::to_string(l) +
                                 " >= K=" + std::to_string(num_categories));
  }

  // Pixel count per category; sums to height*width.
  std::vector<long> histogram() const {
    std::vector<long> h(num_categories, 0);
    for (std::uint8_t l : labels) ++h[l];
    return h;
  }
};

}  // namespace artmap
