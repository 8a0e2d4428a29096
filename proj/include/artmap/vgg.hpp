#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "artmap/raster.hpp"
#include "artmap/rng.hpp"
#include "artmap/serialize.hpp"
#include "artmap/sha256.hpp"

// VGG-19 convolutional trunk used as a fixed feature extractor: 16 conv
// layers (3x3, stride 1, pad 1) in 5 blocks separated by 2x2 stride-2
// pooling. The fully connected head is omitted. Forward produces post-ReLU
// activations for requested layers; backward propagates an activation-space
// gradient to the input pixels. Convolutions run as im2col + GEMM.

namespace artmap::vgg {

struct LayerSpec {
  const char* name;
  int in_channels;
  int out_channels;
  bool pool_before;  // a pooling stage sits between the previous layer and this one
};

inline const std::array<LayerSpec, 16>& architecture() {
  static const std::array<LayerSpec, 16> kArch = {{
      {"conv1_1", 3, 64, false},
      {"conv1_2", 64, 64, false},
      {"conv2_1", 64, 128, true},
      {"conv2_2", 128, 128, false},
      {"conv3_1", 128, 256, true},
      {"conv3_2", 256, 256, false},
      {"conv3_3", 256, 256, false},
      {"conv3_4", 256, 256, false},
      {"conv4_1", 256, 512, true},
      {"conv4_2", 512, 512, false},
      {"conv4_3", 512, 512, false},
      {"conv4_4", 512, 512, false},
      {"conv5_1", 512, 512, true},
      {"conv5_2", 512, 512, false},
      {"conv5_3", 512, 512, false},
      {"conv5_4", 512, 512, false},
  }};
  return kArch;
}

inline int layer_index(const std::string& name) {
  const auto& arch = architecture();
  for (std::size_t i = 0; i < arch.size(); ++i)
    if (name == arch[i].name) return static_cast<int>(i);
  throw std::invalid_argument("unknown VGG layer name: '" + name + "'");
}

// Pooling stages preceding a layer; activation dims are the input dims halved
// that many times.
inline int pool_stages_before(const std::string& name) {
  const int idx = layer_index(name);
  int stages = 0;
  for (int i = 0; i <= idx; ++i) stages += architecture()[i].pool_before ? 1 : 0;
  return stages;
}

// Planar channels x height x width grid, row-major per channel.
template <typename T>
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor3() = default;
  Tensor3(int c, int h, int w, T fill = T(0)) : channels(c), height(h), width(w) {
    data.assign(static_cast<std::size_t>(c) * h * w, fill);
  }
  std::size_t spatial() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }
  T* channel(int c) { return data.data() + static_cast<std::size_t>(c) * spatial(); }
  const T* channel(int c) const {
    return data.data() + static_cast<std::size_t>(c) * spatial();
  }
  bool same_shape(const Tensor3& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Channels x spatial view of a tensor (the "F" matrix of the style losses).
template <typename T>
Eigen::Map<const MatrixRM<T>> as_matrix(const Tensor3<T>& t) {
  return Eigen::Map<const MatrixRM<T>>(t.data.data(), t.channels,
                                       static_cast<Eigen::Index>(t.spatial()));
}

template <typename T>
struct ConvLayer {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  std::vector<T> kernel;  // out x in x 3 x 3, row-major
  std::vector<T> bias;    // out
};

template <typename T>
struct VggWeights {
  std::vector<ConvLayer<T>> layers;  // exactly 16, canonical order

  const ConvLayer<T>& layer(int idx) const { return layers[idx]; }
};

template <typename To, typename From>
VggWeights<To> cast_weights(const VggWeights<From>& w) {
  VggWeights<To> out;
  out.layers.resize(w.layers.size());
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    out.layers[i].name = w.layers[i].name;
    out.layers[i].in_channels = w.layers[i].in_channels;
    out.layers[i].out_channels = w.layers[i].out_channels;
    out.layers[i].kernel.assign(w.layers[i].kernel.begin(), w.layers[i].kernel.end());
    out.layers[i].bias.assign(w.layers[i].bias.begin(), w.layers[i].bias.end());
  }
  return out;
}

// Per-channel RGB means of the pretrained network's training data, in 0-255
// space. preprocess maps [0,1] RGB to mean-centered 0-255 values.
inline const std::array<float, 3>& mean_rgb() {
  static const std::array<float, 3> kMean = {123.68f, 116.779f, 103.939f};
  return kMean;
}

template <typename T>
Raster<T> preprocess(const Raster<T>& image) {
  if (image.channels != 3)
    throw std::invalid_argument("preprocess: image must have 3 channels");
  Raster<T> out = image;
  const auto& mean = mean_rgb();
  std::size_t i = 0;
  for (std::size_t p = 0; p < image.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c, ++i)
      out.data[i] = image.data[i] * T(255) - T(mean[c]);
  return out;
}

template <typename T>
Raster<T> unpreprocess(const Raster<T>& image) {
  if (image.channels != 3)
    throw std::invalid_argument("unpreprocess: image must have 3 channels");
  Raster<T> out = image;
  const auto& mean = mean_rgb();
  std::size_t i = 0;
  for (std::size_t p = 0; p < image.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c, ++i)
      out.data[i] = (image.data[i] + T(mean[c])) / T(255);
  return out;
}

// Content layer + weighted style layers; weights must sum to 1.
struct LayerSelection {
  std::string content_layer = "conv4_2";
  std::vector<std::string> style_layers = {"conv1_1", "conv2_1", "conv3_1",
                                           "conv4_1", "conv5_1"};
  std::vector<double> style_weights = {0.2, 0.2, 0.2, 0.2, 0.2};

  void validate() const {
    layer_index(content_layer);
    if (style_layers.empty())
      throw std::invalid_argument("layer selection: no style layers");
    if (style_layers.size() != style_weights.size())
      throw std::invalid_argument("layer selection: weights/layers count mismatch");
    double sum = 0;
    for (std::size_t i = 0; i < style_layers.size(); ++i) {
      layer_index(style_layers[i]);
      if (!(style_weights[i] > 0))
        throw std::invalid_argument("layer selection: weights must be positive");
      sum += style_weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("layer selection: style weights must sum to 1");
  }

  std::vector<std::string> all_layers() const {
    std::vector<std::string> names = style_layers;
    if (std::find(names.begin(), names.end(), content_layer) == names.end())
      names.push_back(content_layer);
    return names;
  }
};

template <typename T>
using FeatureActivations = std::map<std::string, Tensor3<T>>;

enum class Pooling { kAverage, kMax };

namespace detail {

// Interleaved raster (H,W,3) -> planar tensor (3,H,W).
template <typename T>
Tensor3<T> to_tensor(const Raster<T>& r) {
  Tensor3<T> t(r.channels, r.height, r.width);
  for (int c = 0; c < r.channels; ++c) {
    T* dst = t.channel(c);
    for (std::size_t p = 0; p < r.pixel_count(); ++p)
      dst[p] = r.data[p * r.channels + c];
  }
  return t;
}

template <typename T>
Raster<T> to_raster(const Tensor3<T>& t) {
  Raster<T> r(t.height, t.width, t.channels);
  for (int c = 0; c < t.channels; ++c) {
    const T* src = t.channel(c);
    for (std::size_t p = 0; p < r.pixel_count(); ++p)
      r.data[p * t.channels + c] = src[p];
  }
  return r;
}

// im2col for 3x3 / stride 1 / zero pad 1: output is (C*9) x (H*W), row
// (c*9 + ky*3 + kx) holds the input value at (y+ky-1, x+kx-1) per column.
template <typename T>
void im2col_3x3(const Tensor3<T>& in, MatrixX<T>& cols) {
  const int h = in.height, w = in.width;
  const std::size_t hw = in.spatial();
  cols.resize(static_cast<Eigen::Index>(in.channels) * 9,
              static_cast<Eigen::Index>(hw));
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.channel(c);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = static_cast<Eigen::Index>(c) * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            T v = T(0);
            if (sy >= 0 && sy < h && sx >= 0 && sx < w)
              v = src[static_cast<std::size_t>(sy) * w + sx];
            cols(row, static_cast<Eigen::Index>(y) * w + x) = v;
          }
        }
      }
    }
  }
}

// Transpose of im2col: scatter-add column gradients back onto the input grid.
template <typename T>
void col2im_3x3(const MatrixX<T>& cols, Tensor3<T>& grad_in) {
  const int h = grad_in.height, w = grad_in.width;
  std::fill(grad_in.data.begin(), grad_in.data.end(), T(0));
  for (int c = 0; c < grad_in.channels; ++c) {
    T* dst = grad_in.channel(c);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = static_cast<Eigen::Index>(c) * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            dst[static_cast<std::size_t>(sy) * w + sx] +=
                cols(row, static_cast<Eigen::Index>(y) * w + x);
          }
        }
      }
    }
  }
}

// conv 3x3 + bias + ReLU.
template <typename T>
Tensor3<T> conv_forward(const ConvLayer<T>& layer, const Tensor3<T>& in,
                        MatrixX<T>& scratch_cols) {
  if (in.channels != layer.in_channels)
    throw std::invalid_argument("conv " + layer.name + ": input has " +
                                std::to_string(in.channels) + " channels, want " +
                                std::to_string(layer.in_channels));
  im2col_3x3(in, scratch_cols);
  Eigen::Map<const MatrixRM<T>> wmat(layer.kernel.data(), layer.out_channels,
                                     static_cast<Eigen::Index>(layer.in_channels) * 9);
  Tensor3<T> out(layer.out_channels, in.height, in.width);
  Eigen::Map<MatrixRM<T>> omat(out.data.data(), out.channels,
                               static_cast<Eigen::Index>(out.spatial()));
  omat.noalias() = wmat * scratch_cols;
  for (int c = 0; c < out.channels; ++c) {
    T* row = out.channel(c);
    const T b = layer.bias[c];
    for (std::size_t i = 0; i < out.spatial(); ++i)
      row[i] = std::max(T(0), row[i] + b);
  }
  return out;
}

// Gradient w.r.t. the conv input given the gradient at its (pre-ReLU equals
// post-bias) output. ReLU masking happens in the caller.
template <typename T>
Tensor3<T> conv_backward_input(const ConvLayer<T>& layer, const Tensor3<T>& grad_out,
                               MatrixX<T>& scratch_cols) {
  Eigen::Map<const MatrixRM<T>> wmat(layer.kernel.data(), layer.out_channels,
                                     static_cast<Eigen::Index>(layer.in_channels) * 9);
  Eigen::Map<const MatrixRM<T>> gmat(grad_out.data.data(), grad_out.channels,
                                     static_cast<Eigen::Index>(grad_out.spatial()));
  scratch_cols.resize(static_cast<Eigen::Index>(layer.in_channels) * 9,
                      static_cast<Eigen::Index>(grad_out.spatial()));
  scratch_cols.noalias() = wmat.transpose() * gmat;
  Tensor3<T> grad_in(layer.in_channels, grad_out.height, grad_out.width);
  col2im_3x3(scratch_cols, grad_in);
  return grad_in;
}

// 2x2 stride-2 pooling with ceil semantics: odd trailing rows/columns form
// partial windows (average divides by the actual window size).
template <typename T>
Tensor3<T> pool_forward(const Tensor3<T>& in, Pooling mode,
                        std::vector<std::uint32_t>* max_indices) {
  const int oh = (in.height + 1) / 2;
  const int ow = (in.width + 1) / 2;
  Tensor3<T> out(in.channels, oh, ow);
  if (mode == Pooling::kMax && max_indices)
    max_indices->assign(out.size(), 0);
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.channel(c);
    T* dst = out.channel(c);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int y0 = 2 * y, x0 = 2 * x;
        const int y1 = std::min(y0 + 2, in.height);
        const int x1 = std::min(x0 + 2, in.width);
        if (mode == Pooling::kAverage) {
          T sum = T(0);
          for (int yy = y0; yy < y1; ++yy)
            for (int xx = x0; xx < x1; ++xx)
              sum += src[static_cast<std::size_t>(yy) * in.width + xx];
          dst[static_cast<std::size_t>(y) * ow + x] =
              sum / static_cast<T>((y1 - y0) * (x1 - x0));
        } else {
          T best = src[static_cast<std::size_t>(y0) * in.width + x0];
          std::uint32_t best_idx = static_cast<std::uint32_t>(y0 * in.width + x0);
          for (int yy = y0; yy < y1; ++yy)
            for (int xx = x0; xx < x1; ++xx) {
              const T v = src[static_cast<std::size_t>(yy) * in.width + xx];
              if (v > best) {
                best = v;
                best_idx = static_cast<std::uint32_t>(yy * in.width + xx);
              }
            }
          dst[static_cast<std::size_t>(y) * ow + x] = best;
          if (max_indices)
            (*max_indices)[static_cast<std::size_t>(c) * out.spatial() +
                           static_cast<std::size_t>(y) * ow + x] = best_idx;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor3<T> pool_backward(const Tensor3<T>& grad_out, int in_h, int in_w, Pooling mode,
                         const std::vector<std::uint32_t>* max_indices) {
  Tensor3<T> grad_in(grad_out.channels, in_h, in_w);
  const int ow = grad_out.width;
  for (int c = 0; c < grad_out.channels; ++c) {
    const T* g = grad_out.channel(c);
    T* dst = grad_in.channel(c);
    for (int y = 0; y < grad_out.height; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int y0 = 2 * y, x0 = 2 * x;
        const int y1 = std::min(y0 + 2, in_h);
        const int x1 = std::min(x0 + 2, in_w);
        const T gv = g[static_cast<std::size_t>(y) * ow + x];
        if (mode == Pooling::kAverage) {
          const T share = gv / static_cast<T>((y1 - y0) * (x1 - x0));
          for (int yy = y0; yy < y1; ++yy)
            for (int xx = x0; xx < x1; ++xx)
              dst[static_cast<std::size_t>(yy) * in_w + xx] += share;
        } else {
          const std::uint32_t idx =
              (*max_indices)[static_cast<std::size_t>(c) * grad_out.spatial() +
                             static_cast<std::size_t>(y) * ow + x];
          dst[idx] += gv;
        }
      }
    }
  }
  return grad_in;
}

inline int deepest_layer(const std::vector<std::string>& names) {
  int deepest = -1;
  for (const auto& n : names) deepest = std::max(deepest, layer_index(n));
  return deepest;
}

inline void check_input_dims(int h, int w) {
  if (h < 4 || w < 4)
    throw std::invalid_argument("VGG input too small: " + std::to_string(h) + "x" +
                                std::to_string(w) + " (need at least 4x4)");
}

// Forward pass up to `deepest`, caching every post-ReLU conv activation and
// the pooling geometry needed for backward.
template <typename T>
struct ForwardCache {
  std::vector<Tensor3<T>> conv_acts;                   // per conv layer
  std::vector<std::vector<std::uint32_t>> pool_argmax; // per conv layer (pool before it)
  std::vector<std::pair<int, int>> pool_in_dims;       // dims entering that pool
};

template <typename T>
void run_forward(const VggWeights<T>& weights, const Tensor3<T>& input, int deepest,
                 Pooling pooling, ForwardCache<T>& cache) {
  const auto& arch = architecture();
  if (static_cast<int>(weights.layers.size()) != 16)
    throw std::invalid_argument("VGG weights: expected 16 conv layers");
  cache.conv_acts.clear();
  cache.pool_argmax.assign(deepest + 1, {});
  cache.pool_in_dims.assign(deepest + 1, {0, 0});
  MatrixX<T> scratch;
  Tensor3<T> current = input;
  for (int i = 0; i <= deepest; ++i) {
    if (arch[i].pool_before) {
      cache.pool_in_dims[i] = {current.height, current.width};
      current = pool_forward(current, pooling,
                             pooling == Pooling::kMax ? &cache.pool_argmax[i] : nullptr);
    }
    current = conv_forward(weights.layer(i), current, scratch);
    cache.conv_acts.push_back(current);
  }
}

}  // namespace detail

// One forward pass with its activation cache kept around, so a matching
// backward pass does not recompute the features. NST runs one of these per
// iteration.
template <typename T>
class FeatureExecutor {
 public:
  FeatureExecutor(const VggWeights<T>& weights, const Raster<T>& preprocessed,
                  int deepest, Pooling pooling)
      : weights_(weights), pooling_(pooling) {
    detail::check_input_dims(preprocessed.height, preprocessed.width);
    if (deepest < 0 || deepest >= 16)
      throw std::invalid_argument("FeatureExecutor: bad layer index");
    detail::run_forward(weights, detail::to_tensor(preprocessed), deepest, pooling,
                        cache_);
  }

  const Tensor3<T>& activation(const std::string& name) const {
    const int idx = layer_index(name);
    if (idx >= static_cast<int>(cache_.conv_acts.size()))
      throw std::invalid_argument("FeatureExecutor: layer " + name +
                                  " deeper than the forward pass");
    return cache_.conv_acts[idx];
  }

  // Gradient of sum_l <upstream[l], activation_l> w.r.t. the input pixels.
  Raster<T> backward(const FeatureActivations<T>& upstream) const {
    if (upstream.empty())
      throw std::invalid_argument("backward_to_input: empty upstream gradients");
    std::vector<std::string> names;
    for (const auto& [name, _] : upstream) names.push_back(name);
    const int deepest = detail::deepest_layer(names);
    if (deepest >= static_cast<int>(cache_.conv_acts.size()))
      throw std::invalid_argument("backward_to_input: upstream deeper than forward");

    const auto& arch = architecture();
    detail::MatrixX<T> scratch;
    Tensor3<T> grad(cache_.conv_acts[deepest].channels,
                    cache_.conv_acts[deepest].height,
                    cache_.conv_acts[deepest].width);
    for (int i = deepest; i >= 0; --i) {
      if (auto it = upstream.find(arch[i].name); it != upstream.end()) {
        if (!it->second.same_shape(cache_.conv_acts[i]))
          throw std::invalid_argument(
              std::string("backward_to_input: upstream shape mismatch at ") +
              arch[i].name);
        for (std::size_t k = 0; k < grad.size(); ++k)
          grad.data[k] += it->second.data[k];
      }
      // ReLU gate: gradient flows where the activation is positive
      const Tensor3<T>& act = cache_.conv_acts[i];
      for (std::size_t k = 0; k < grad.size(); ++k)
        if (!(act.data[k] > T(0))) grad.data[k] = T(0);
      grad = detail::conv_backward_input(weights_.layer(i), grad, scratch);
      if (arch[i].pool_before) {
        grad = detail::pool_backward(grad, cache_.pool_in_dims[i].first,
                                     cache_.pool_in_dims[i].second, pooling_,
                                     &cache_.pool_argmax[i]);
      }
    }
    return detail::to_raster(grad);
  }

 private:
  const VggWeights<T>& weights_;
  Pooling pooling_;
  detail::ForwardCache<T> cache_;
};

// Post-ReLU activations for exactly the requested layers.
template <typename T>
FeatureActivations<T> forward_features(const VggWeights<T>& weights,
                                       const Raster<T>& preprocessed,
                                       const std::vector<std::string>& layer_names,
                                       Pooling pooling = Pooling::kAverage) {
  if (layer_names.empty())
    throw std::invalid_argument("forward_features: no layers requested");
  FeatureExecutor<T> exec(weights, preprocessed, detail::deepest_layer(layer_names),
                          pooling);
  FeatureActivations<T> out;
  for (const auto& name : layer_names) out[name] = exec.activation(name);
  return out;
}

// Exact gradient of sum_l <upstream[l], activation_l> with respect to the
// input pixels, chained through conv, ReLU and pooling.
template <typename T>
Raster<T> backward_to_input(const VggWeights<T>& weights, const Raster<T>& preprocessed,
                            const FeatureActivations<T>& upstream,
                            Pooling pooling = Pooling::kAverage) {
  if (upstream.empty())
    throw std::invalid_argument("backward_to_input: empty upstream gradients");
  std::vector<std::string> names;
  for (const auto& [name, _] : upstream) names.push_back(name);
  FeatureExecutor<T> exec(weights, preprocessed, detail::deepest_layer(names), pooling);
  return exec.backward(upstream);
}

// ---- weight container -----------------------------------------------------
// Single file: magic "ARTMAPWT", version u16, reserved u16, manifest length
// u32, UTF-8 JSON manifest {tensors: [{name, dtype, shape, offset}], meta},
// then the tensor data blob (tightly packed little-endian f32, offsets
// relative to the blob start). The checksum is over the whole file and is
// verified before any parsing.

inline constexpr char kWeightsMagic[9] = "ARTMAPWT";
inline constexpr std::uint16_t kWeightsVersion = 1;

inline void save_weights(const VggWeights<float>& weights,
                         const std::filesystem::path& path) {
  using nlohmann::ordered_json;
  ordered_json tensors = ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& layer : weights.layers) {
    tensors.push_back(ordered_json{
        {"name", layer.name + ".kernel"},
        {"dtype", "f32"},
        {"shape", {layer.out_channels, layer.in_channels, 3, 3}},
        {"offset", offset}});
    offset += layer.kernel.size() * sizeof(float);
    tensors.push_back(ordered_json{{"name", layer.name + ".bias"},
                                   {"dtype", "f32"},
                                   {"shape", {layer.out_channels}},
                                   {"offset", offset}});
    offset += layer.bias.size() * sizeof(float);
  }
  ordered_json manifest{
      {"arch", "vgg19-conv"},
      {"mean_rgb", {mean_rgb()[0], mean_rgb()[1], mean_rgb()[2]}},
      {"tensors", tensors}};
  const std::string mjson = manifest.dump();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  ser::write_magic(f, kWeightsMagic);
  ser::write_pod<std::uint16_t>(f, kWeightsVersion);
  ser::write_pod<std::uint16_t>(f, 0);
  ser::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(mjson.size()));
  f.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
  for (const auto& layer : weights.layers) {
    ser::write_array(f, layer.kernel.data(), layer.kernel.size());
    ser::write_array(f, layer.bias.data(), layer.bias.size());
  }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

// Loads and shape-checks all 16 conv layers. expected_sha256, when nonempty,
// is verified against the whole file before parsing.
inline VggWeights<float> load_weights(const std::filesystem::path& path,
                                      const std::string& expected_sha256) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("weight file not found: " + path.string());
  if (!expected_sha256.empty()) {
    const std::string got = sha256_file_hex(path);
    if (got != expected_sha256)
      throw std::runtime_error("weight file checksum mismatch: expected " +
                               expected_sha256 + ", got " + got);
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  ser::expect_magic(f, kWeightsMagic, "weights");
  const auto version = ser::read_pod<std::uint16_t>(f);
  if (version != kWeightsVersion)
    throw std::runtime_error("unsupported weights version " + std::to_string(version));
  ser::read_pod<std::uint16_t>(f);  // reserved
  const auto mlen = ser::read_pod<std::uint32_t>(f);
  std::string mjson(mlen, '\0');
  f.read(mjson.data(), mlen);
  if (!f) throw std::runtime_error("weights: truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mjson);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("weights: bad manifest JSON: ") + e.what());
  }
  const std::streamoff blob_start = f.tellg();

  struct TensorInfo {
    std::vector<int> shape;
    std::uint64_t offset = 0;
  };
  std::map<std::string, TensorInfo> index;
  for (const auto& t : manifest.at("tensors")) {
    TensorInfo info;
    if (t.at("dtype").get<std::string>() != "f32")
      throw std::runtime_error("weights: unsupported dtype for " +
                               t.at("name").get<std::string>());
    for (const auto& d : t.at("shape")) info.shape.push_back(d.get<int>());
    info.offset = t.at("offset").get<std::uint64_t>();
    index[t.at("name").get<std::string>()] = info;
  }

  auto read_tensor = [&](const std::string& name, const std::vector<int>& want_shape,
                         std::vector<float>& out) {
    auto it = index.find(name);
    if (it == index.end())
      throw std::runtime_error("missing tensor " + name);
    if (it->second.shape != want_shape) {
      std::string got, want;
      for (int d : it->second.shape) got += std::to_string(d) + " ";
      for (int d : want_shape) want += std::to_string(d) + " ";
      throw std::runtime_error("tensor shape mismatch for " + name + ": got [" + got +
                               "], want [" + want + "]");
    }
    std::size_t n = 1;
    for (int d : want_shape) n *= static_cast<std::size_t>(d);
    out.resize(n);
    f.seekg(blob_start + static_cast<std::streamoff>(it->second.offset));
    ser::read_array(f, out.data(), n);
  };

  VggWeights<float> weights;
  for (const auto& spec : architecture()) {
    ConvLayer<float> layer;
    layer.name = spec.name;
    layer.in_channels = spec.in_channels;
    layer.out_channels = spec.out_channels;
    read_tensor(layer.name + ".kernel",
                {spec.out_channels, spec.in_channels, 3, 3}, layer.kernel);
    read_tensor(layer.name + ".bias", {spec.out_channels}, layer.bias);
    weights.layers.push_back(std::move(layer));
  }
  return weights;
}

// Seeded He-uniform random weights in the canonical shapes. Stands in for a
// converted pretrained checkpoint in tests and offline smoke runs.
inline VggWeights<float> random_weights(std::uint64_t seed) {
  VggWeights<float> weights;
  auto g = rng::engine(rng::mix(seed, 0x76676757ull));
  for (const auto& spec : architecture()) {
    ConvLayer<float> layer;
    layer.name = spec.name;
    layer.in_channels = spec.in_channels;
    layer.out_channels = spec.out_channels;
    const double bound = std::sqrt(6.0 / (spec.in_channels * 9.0));
    layer.kernel.resize(static_cast<std::size_t>(spec.out_channels) *
                        spec.in_channels * 9);
    for (auto& v : layer.kernel)
      v = static_cast<float>(rng::uniform(g, -bound, bound));
    layer.bias.assign(spec.out_channels, 0.0f);
    weights.layers.push_back(std::move(layer));
  }
  return weights;
}

}  // namespace artmap::vgg
