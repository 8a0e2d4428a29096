#pragma once

#include <stdexcept>
#include <vector>

#include "artmap/raster.hpp"

namespace artmap {

inline int window_feature_dim(int window, int channels = 3) {
  return channels * window * window;
}

// The per-pixel classifier feature: the window x window neighborhood centered
// at (y,x), reflect-padded at borders, flattened row-major with interleaved
// channels. D = channels * window^2.
template <typename T, typename Out>
void window_feature(const Raster<T>& r, int y, int x, int window, Out* out) {
  const int half = window / 2;
  std::size_t k = 0;
  for (int dy = -half; dy <= half; ++dy) {
    const int sy = reflect_index(y + dy, r.height);
    for (int dx = -half; dx <= half; ++dx) {
      const int sx = reflect_index(x + dx, r.width);
      for (int c = 0; c < r.channels; ++c)
        out[k++] = static_cast<Out>(r.at(sy, sx, c));
    }
  }
}

inline void require_odd_window(int window) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("window must be an odd positive integer, got " +
                                std::to_string(window));
}

}  // namespace artmap
