#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "artmap/raster.hpp"
#include "artmap/rng.hpp"
#include "artmap/vgg.hpp"

// Style-transfer optimizer: Gram statistics, content/style losses and their
// pixel gradient, and the iterative stylization loop. Feature grids F are
// channels x spatial (N_l x M_l) post-ReLU activations.
//
//   content:    L_c = 1/2 sum (F - P)^2          at the content layer
//   style:      E_l = 1/(4 N^2 M^2) sum (G - A)^2,  G = F F^T
//   total:      alpha * L_c + beta * sum_l w_l E_l

namespace artmap::nst {

template <typename T>
using MatrixX = vgg::MatrixX<T>;

// G_ij = sum_k F_ik F_jk over flattened spatial positions. The lower triangle
// is computed once and mirrored, so the result is symmetric exactly.
template <typename T, typename Derived>
MatrixX<T> gram_impl(const Eigen::MatrixBase<Derived>& features) {
  if (features.rows() < 1 || features.cols() < 1)
    throw std::invalid_argument("gram: empty feature matrix");
  MatrixX<T> g = MatrixX<T>::Zero(features.rows(), features.rows());
  g.template selfadjointView<Eigen::Lower>().rankUpdate(features.derived());
  g.template triangularView<Eigen::StrictlyUpper>() = g.adjoint();
  return g;
}

template <typename T>
MatrixX<T> gram(const MatrixX<T>& features) {
  return gram_impl<T>(features);
}

template <typename T>
MatrixX<T> gram(const vgg::Tensor3<T>& features) {
  return gram_impl<T>(vgg::as_matrix(features));
}

template <typename T>
struct ContentTarget {
  std::string layer;
  vgg::Tensor3<T> features;  // P
};

template <typename T>
struct StyleTargets {
  struct LayerTarget {
    std::string layer;
    int channels = 0;   // N_l at target-build time
    long spatial = 0;   // M_l at target-build time
    MatrixX<T> gram;    // A_l
  };
  std::vector<LayerTarget> layers;
};

// 1/2 sum (F - P)^2
template <typename T>
T content_loss(const vgg::Tensor3<T>& f, const ContentTarget<T>& target) {
  if (!f.same_shape(target.features))
    throw std::invalid_argument("content_loss: feature/target shape mismatch");
  T acc = T(0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const T d = f.data[i] - target.features.data[i];
    acc += d * d;
  }
  return acc / T(2);
}

// E_l = 1/(4 N^2 M^2) sum (G - A)^2
template <typename T>
T style_layer_loss(const MatrixX<T>& g, const MatrixX<T>& a, int channels,
                   long spatial) {
  if (g.rows() != a.rows() || g.cols() != a.cols() || g.rows() != g.cols())
    throw std::invalid_argument("style_layer_loss: Gram shape mismatch");
  if (g.rows() != channels)
    throw std::invalid_argument("style_layer_loss: N does not match Gram size");
  if (spatial < 1) throw std::invalid_argument("style_layer_loss: M must be >= 1");
  const T n = static_cast<T>(channels);
  const T m = static_cast<T>(spatial);
  return (g - a).squaredNorm() / (T(4) * n * n * m * m);
}

enum class Optimizer { kAdam, kPlainGd };
enum class Init { kContent, kNoise };

struct NstConfig {
  double alpha = 1.0;
  double beta = 1000.0;
  vgg::LayerSelection selection;
  int iterations = 500;
  double step_size = 2.0;  // in mean-centered 0-255 pixel space
  Optimizer optimizer = Optimizer::kAdam;
  Init init = Init::kContent;
  std::uint64_t seed = 0;
  vgg::Pooling pooling = vgg::Pooling::kAverage;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    if (alpha < 0 || beta < 0 || alpha + beta <= 0)
      throw std::invalid_argument("nst: need alpha, beta >= 0 and alpha + beta > 0");
    if (iterations < 1) throw std::invalid_argument("nst: iterations must be >= 1");
    if (!(step_size > 0)) throw std::invalid_argument("nst: step_size must be > 0");
    selection.validate();
  }
};

struct TracePoint {
  int iter = 0;
  double total = 0;
  double content = 0;
  double style = 0;
};
using OptimizationTrace = std::vector<TracePoint>;

// One record per iteration: {"iter":..,"total":..,"content":..,"style":..}
inline void write_trace_jsonl(const OptimizationTrace& trace,
                              const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (const TracePoint& p : trace) {
    f << "{\"iter\":" << p.iter << ",\"total\":" << p.total
      << ",\"content\":" << p.content << ",\"style\":" << p.style << "}\n";
  }
}

template <typename T>
ContentTarget<T> make_content_target(const vgg::VggWeights<T>& weights,
                                     const Raster<T>& preprocessed_content,
                                     const vgg::LayerSelection& selection,
                                     vgg::Pooling pooling = vgg::Pooling::kAverage) {
  auto acts = vgg::forward_features(weights, preprocessed_content,
                                    {selection.content_layer}, pooling);
  return ContentTarget<T>{selection.content_layer,
                          std::move(acts.at(selection.content_layer))};
}

template <typename T>
StyleTargets<T> make_style_targets(const vgg::VggWeights<T>& weights,
                                   const Raster<T>& preprocessed_style,
                                   const vgg::LayerSelection& selection,
                                   vgg::Pooling pooling = vgg::Pooling::kAverage) {
  auto acts = vgg::forward_features(weights, preprocessed_style,
                                    selection.style_layers, pooling);
  StyleTargets<T> targets;
  for (const auto& name : selection.style_layers) {
    const auto& t = acts.at(name);
    targets.layers.push_back({name, t.channels, static_cast<long>(t.spatial()),
                              gram(t)});
  }
  return targets;
}

template <typename T>
struct Losses {
  T total = T(0);
  T content = T(0);
  T style = T(0);  // sum_l w_l E_l, before the beta factor
};

namespace detail {

template <typename T>
Losses<T> losses_from_activations(const vgg::FeatureActivations<T>& acts,
                                  const ContentTarget<T>& content_target,
                                  const StyleTargets<T>& style_targets,
                                  const NstConfig& cfg) {
  Losses<T> l;
  l.content = content_loss(acts.at(content_target.layer), content_target);
  for (std::size_t i = 0; i < style_targets.layers.size(); ++i) {
    const auto& st = style_targets.layers[i];
    const auto& f = acts.at(st.layer);
    if (f.channels != st.channels || static_cast<long>(f.spatial()) != st.spatial)
      throw std::invalid_argument("style loss: image features at " + st.layer +
                                  " do not match the target dims");
    MatrixX<T> g = gram(f);
    l.style += static_cast<T>(cfg.selection.style_weights[i]) *
               style_layer_loss(g, st.gram, st.channels, st.spatial);
  }
  l.total = static_cast<T>(cfg.alpha) * l.content + static_cast<T>(cfg.beta) * l.style;
  return l;
}

}  // namespace detail

// Loss components at the current image (preprocessed pixel space).
template <typename T>
Losses<T> total_loss(const vgg::VggWeights<T>& weights, const Raster<T>& image,
                     const ContentTarget<T>& content_target,
                     const StyleTargets<T>& style_targets, const NstConfig& cfg) {
  cfg.validate();
  auto acts = vgg::forward_features(weights, image, cfg.selection.all_layers(),
                                    cfg.pooling);
  return detail::losses_from_activations(acts, content_target, style_targets, cfg);
}

// Loss components plus d(total)/d(pixel). Upstream gradients:
//   content layer:  alpha * (F - P)
//   style layer l:  beta * w_l / (N_l^2 M_l^2) * (G - A) F
// One forward pass is shared between the losses and the backward sweep.
template <typename T>
std::pair<Losses<T>, Raster<T>> loss_and_grad(const vgg::VggWeights<T>& weights,
                                              const Raster<T>& image,
                                              const ContentTarget<T>& content_target,
                                              const StyleTargets<T>& style_targets,
                                              const NstConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> layer_names = cfg.selection.all_layers();
  vgg::FeatureExecutor<T> exec(weights, image, vgg::detail::deepest_layer(layer_names),
                               cfg.pooling);
  vgg::FeatureActivations<T> acts;
  for (const auto& name : layer_names) acts[name] = exec.activation(name);
  Losses<T> losses =
      detail::losses_from_activations(acts, content_target, style_targets, cfg);

  vgg::FeatureActivations<T> upstream;
  {
    const auto& f = acts.at(content_target.layer);
    vgg::Tensor3<T> g(f.channels, f.height, f.width);
    const T a = static_cast<T>(cfg.alpha);
    for (std::size_t i = 0; i < f.size(); ++i)
      g.data[i] = a * (f.data[i] - content_target.features.data[i]);
    upstream[content_target.layer] = std::move(g);
  }
  for (std::size_t i = 0; i < style_targets.layers.size(); ++i) {
    const auto& st = style_targets.layers[i];
    const auto& f = acts.at(st.layer);
    const T n = static_cast<T>(st.channels);
    const T m = static_cast<T>(st.spatial);
    const T scale = static_cast<T>(cfg.beta) *
                    static_cast<T>(cfg.selection.style_weights[i]) / (n * n * m * m);
    Eigen::Map<const vgg::MatrixRM<T>> fmat(f.data.data(), f.channels,
                                            static_cast<Eigen::Index>(f.spatial()));
    MatrixX<T> diff = gram(f) - st.gram;
    vgg::Tensor3<T> g(f.channels, f.height, f.width);
    Eigen::Map<vgg::MatrixRM<T>> gmat(g.data.data(), f.channels,
                                      static_cast<Eigen::Index>(f.spatial()));
    gmat.noalias() = scale * (diff * fmat);
    auto [it, fresh] = upstream.try_emplace(st.layer, std::move(g));
    if (!fresh)
      for (std::size_t k = 0; k < it->second.size(); ++k)
        it->second.data[k] += g.data[k];
  }
  Raster<T> grad = exec.backward(upstream);
  return {losses, std::move(grad)};
}

// Core optimization loop over a preprocessed starting image. The trace
// records the losses evaluated at the top of each iteration, before that
// iteration's step.
template <typename T>
std::pair<Raster<T>, OptimizationTrace> optimize_image(
    const vgg::VggWeights<T>& weights, Raster<T> x,
    const ContentTarget<T>& content_target, const StyleTargets<T>& style_targets,
    const NstConfig& cfg) {
  cfg.validate();
  std::vector<T> m(x.data.size(), T(0));
  std::vector<T> v(x.data.size(), T(0));
  OptimizationTrace trace;
  trace.reserve(cfg.iterations);

  for (int it = 0; it < cfg.iterations; ++it) {
    auto [losses, grad] = loss_and_grad(weights, x, content_target, style_targets, cfg);
    if (!std::isfinite(static_cast<double>(losses.total)))
      throw std::runtime_error("stylize: non-finite loss at iteration " +
                               std::to_string(it) + "; diverged (try a smaller step)");
    trace.push_back({it, static_cast<double>(losses.total),
                     static_cast<double>(losses.content),
                     static_cast<double>(losses.style)});
    if (cfg.optimizer == Optimizer::kPlainGd) {
      for (std::size_t i = 0; i < x.data.size(); ++i)
        x.data[i] -= static_cast<T>(cfg.step_size) * grad.data[i];
    } else {
      const T b1 = static_cast<T>(cfg.adam_beta1);
      const T b2 = static_cast<T>(cfg.adam_beta2);
      const T c1 = T(1) - static_cast<T>(std::pow(cfg.adam_beta1, it + 1));
      const T c2 = T(1) - static_cast<T>(std::pow(cfg.adam_beta2, it + 1));
      const T eps = static_cast<T>(cfg.adam_epsilon);
      const T step = static_cast<T>(cfg.step_size);
      for (std::size_t i = 0; i < x.data.size(); ++i) {
        const T g = grad.data[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        x.data[i] -= step * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    }
  }
  return {std::move(x), std::move(trace)};
}

// Seeded starting point in preprocessed pixel space.
template <typename T>
Raster<T> initial_image(const Raster<T>& pre_content, Init init, std::uint64_t seed) {
  if (init == Init::kContent) return pre_content;
  auto g = rng::engine(rng::mix(seed, 0x6e6f697365ull));
  Raster<T> noise(pre_content.height, pre_content.width, 3);
  for (auto& v : noise.data) v = static_cast<T>(rng::uniform01(g));
  return vgg::preprocess(noise);
}

// Full stylization loop. content and style are displayable [0,1] rasters; the
// style image is resized to the content dims before target extraction. The
// returned image is un-preprocessed and clamped to [0,1].
template <typename T>
std::pair<Raster<T>, OptimizationTrace> stylize(const vgg::VggWeights<T>& weights,
                                                const Raster<T>& content,
                                                const Raster<T>& style,
                                                const NstConfig& cfg) {
  cfg.validate();
  if (content.height < 32 || content.width < 32)
    throw std::invalid_argument("stylize: content must be at least 32x32");
  if (content.channels != 3 || style.channels != 3)
    throw std::invalid_argument("stylize: images must have 3 channels");

  Raster<T> pre_content = vgg::preprocess(content);
  Raster<T> style_resized = resize(style, content.height, content.width);
  Raster<T> pre_style = vgg::preprocess(style_resized);

  ContentTarget<T> content_target =
      make_content_target(weights, pre_content, cfg.selection, cfg.pooling);
  StyleTargets<T> style_targets =
      make_style_targets(weights, pre_style, cfg.selection, cfg.pooling);

  auto [x, trace] = optimize_image(weights,
                                   initial_image(pre_content, cfg.init, cfg.seed),
                                   content_target, style_targets, cfg);
  return {clamp01(vgg::unpreprocess(std::move(x))), std::move(trace)};
}

}  // namespace artmap::nst
