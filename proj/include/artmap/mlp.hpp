#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "artmap/eurosat.hpp"
#include "artmap/features.hpp"
#include "artmap/label_map.hpp"
#include "artmap/raster.hpp"
#include "artmap/rng.hpp"
#include "artmap/serialize.hpp"

// Multilayer perceptron pixel classifier: ReLU hidden layers, 2-way softmax
// output, trained with plain mini-batch SGD on the cross-entropy loss.
// Everything is double precision and bit-deterministic for a fixed seed.

namespace artmap::mlp {

struct MlpParams {
  std::vector<int> layer_sizes;            // [D, h1, ..., hL, 2]
  std::vector<Eigen::MatrixXd> weights;    // weights[i]: sizes[i+1] x sizes[i]
  std::vector<Eigen::VectorXd> biases;     // biases[i]: sizes[i+1]

  int input_dim() const { return layer_sizes.front(); }
  std::size_t layer_count() const { return weights.size(); }

  void require_same_shape(const MlpParams& o, const char* what) const {
    if (layer_sizes != o.layer_sizes)
      throw std::invalid_argument(std::string(what) + ": layer shape mismatch");
  }
};

// He-uniform weights (bound sqrt(6/fan_in)), zero biases.
inline MlpParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 3)
    throw std::invalid_argument("init_params: need at least input, hidden, output layers");
  if (layer_sizes.back() != 2)
    throw std::invalid_argument("init_params: final layer size must be 2, got " +
                                std::to_string(layer_sizes.back()));
  for (int s : layer_sizes)
    if (s < 1) throw std::invalid_argument("init_params: layer sizes must be >= 1");
  MlpParams p;
  p.layer_sizes = layer_sizes;
  auto g = rng::engine(seed);
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int fan_in = layer_sizes[i];
    const int fan_out = layer_sizes[i + 1];
    const double bound = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng::uniform(g, -bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

namespace detail {

inline Eigen::MatrixXd relu(Eigen::MatrixXd m) {
  return m.cwiseMax(0.0);
}

// Column-wise stable softmax.
inline Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    Eigen::VectorXd col = logits.col(c);
    double m = col.maxCoeff();
    Eigen::VectorXd e = (col.array() - m).exp();
    out.col(c) = e / e.sum();
  }
  return out;
}

// Forward over a batch (columns = samples), keeping post-activation values of
// every layer for backprop. activations[0] is the input batch.
inline std::vector<Eigen::MatrixXd> forward_batch(const MlpParams& p,
                                                  const Eigen::MatrixXd& x) {
  if (x.rows() != p.input_dim())
    throw std::invalid_argument("forward: feature dim " + std::to_string(x.rows()) +
                                " != input layer size " +
                                std::to_string(p.input_dim()));
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(p.layer_count() + 1);
  acts.push_back(x);
  for (std::size_t i = 0; i < p.layer_count(); ++i) {
    Eigen::MatrixXd z = (p.weights[i] * acts.back()).colwise() + p.biases[i];
    acts.push_back(i + 1 == p.layer_count() ? softmax_cols(z) : relu(std::move(z)));
  }
  return acts;
}

}  // namespace detail

// Probability pair (land, water); entries strictly positive, sum 1.
inline Eigen::Vector2d forward(const MlpParams& p, const Eigen::VectorXd& x) {
  return detail::forward_batch(p, x).back();
}

inline Eigen::Vector2d forward(const MlpParams& p, const std::vector<double>& x) {
  return forward(p, Eigen::Map<const Eigen::VectorXd>(x.data(),
                                                      static_cast<Eigen::Index>(x.size())));
}

// -ln p[label], probability floored at 1e-12.
inline double cross_entropy(const Eigen::Vector2d& probs, int label) {
  if (label != 0 && label != 1)
    throw std::invalid_argument("cross_entropy: label must be 0 or 1");
  return -std::log(std::max(probs[label], 1e-12));
}

// Gradient of the batch-mean cross-entropy w.r.t. every weight and bias.
// Batch columns are samples.
inline MlpParams backward(const MlpParams& p, const Eigen::MatrixXd& x,
                          const std::vector<int>& labels) {
  const Eigen::Index batch = x.cols();
  if (batch == 0) throw std::invalid_argument("backward: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw std::invalid_argument("backward: labels/features count mismatch");
  std::vector<Eigen::MatrixXd> acts = detail::forward_batch(p, x);

  MlpParams grads;
  grads.layer_sizes = p.layer_sizes;
  grads.weights.resize(p.layer_count());
  grads.biases.resize(p.layer_count());

  // softmax + CE: delta at output = (probs - onehot) / batch
  Eigen::MatrixXd delta = acts.back();
  for (Eigen::Index c = 0; c < batch; ++c) delta(labels[c], c) -= 1.0;
  delta /= static_cast<double>(batch);

  for (std::size_t i = p.layer_count(); i-- > 0;) {
    grads.weights[i] = delta * acts[i].transpose();
    grads.biases[i] = delta.rowwise().sum();
    if (i > 0) {
      delta = (p.weights[i].transpose() * delta).eval();
      // ReLU mask: acts[i] is post-activation of hidden layer i
      delta = delta.cwiseProduct(
          (acts[i].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

inline MlpParams sgd_step(const MlpParams& p, const MlpParams& grads,
                          double learning_rate) {
  p.require_same_shape(grads, "sgd_step");
  MlpParams out = p;
  for (std::size_t i = 0; i < p.layer_count(); ++i) {
    out.weights[i] -= learning_rate * grads.weights[i];
    out.biases[i] -= learning_rate * grads.biases[i];
  }
  return out;
}

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 20;
  int batch_size = 128;
  std::vector<int> hidden_sizes = {64};
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // mean CE (nats) over the training set, end of epoch
  double train_acc = 0;
  double val_acc = 0;
};

using TrainReport = std::vector<EpochStats>;

namespace detail {

inline Eigen::MatrixXd sample_matrix(const eurosat::SampleSet& s,
                                     const std::vector<std::uint32_t>& idx,
                                     std::size_t begin, std::size_t end) {
  Eigen::MatrixXd x(s.feature_dim, end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const float* r = s.row(idx[i]);
    for (int d = 0; d < s.feature_dim; ++d) x(d, i - begin) = r[d];
  }
  return x;
}

struct EvalResult {
  double mean_loss = 0;
  double accuracy = 0;
};

inline EvalResult evaluate(const MlpParams& p, const eurosat::SampleSet& s) {
  EvalResult r;
  if (s.count() == 0) return r;
  const std::size_t chunk = 4096;
  double loss_sum = 0;
  std::size_t correct = 0;
  std::vector<std::uint32_t> idx(s.count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
  for (std::size_t b = 0; b < s.count(); b += chunk) {
    const std::size_t e = std::min(s.count(), b + chunk);
    Eigen::MatrixXd x = sample_matrix(s, idx, b, e);
    Eigen::MatrixXd probs = forward_batch(p, x).back();
    for (std::size_t i = b; i < e; ++i) {
      const Eigen::Index c = static_cast<Eigen::Index>(i - b);
      const int label = s.labels[i];
      loss_sum += -std::log(std::max(probs(label, c), 1e-12));
      // argmax with ties toward land (index 0)
      const int pred = probs(1, c) > probs(0, c) ? 1 : 0;
      correct += (pred == label);
    }
  }
  r.mean_loss = loss_sum / static_cast<double>(s.count());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(s.count());
  return r;
}

}  // namespace detail

// Seeded-shuffled mini-batch SGD. Per-epoch stats are computed with the
// epoch-final parameters over the full train and validation sets.
inline std::pair<MlpParams, TrainReport> train(const TrainConfig& cfg,
                                               const eurosat::SampleSet& train_set,
                                               const eurosat::SampleSet& val_set) {
  if (train_set.count() == 0)
    throw std::invalid_argument("train: empty training set");
  if (cfg.learning_rate <= 0) throw std::invalid_argument("train: learning_rate <= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epoch count");

  std::vector<int> sizes;
  sizes.push_back(train_set.feature_dim);
  sizes.insert(sizes.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
  sizes.push_back(2);
  MlpParams p = init_params(sizes, cfg.seed);
  TrainReport report;

  auto g = rng::engine(rng::mix(cfg.seed, 0x7261696eull));  // shuffle stream
  std::vector<std::uint32_t> idx(train_set.count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::shuffle(idx, g);
    for (std::size_t b = 0; b < idx.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(idx.size(), b + cfg.batch_size);
      Eigen::MatrixXd x = detail::sample_matrix(train_set, idx, b, e);
      std::vector<int> labels(e - b);
      for (std::size_t i = b; i < e; ++i) labels[i - b] = train_set.labels[idx[i]];
      MlpParams grads = backward(p, x, labels);
      p = sgd_step(p, grads, cfg.learning_rate);
    }
    detail::EvalResult tr = detail::evaluate(p, train_set);
    detail::EvalResult va = detail::evaluate(p, val_set);
    report.push_back({epoch, tr.mean_loss, tr.accuracy, va.accuracy});
  }
  return {std::move(p), std::move(report)};
}

// Per-pixel classification of a whole image. Ties break toward land (0).
// Row-parallel when threads > 1; the result is schedule-independent.
inline LabelMap segment(const MlpParams& p, const Raster<float>& raster, int window,
                        int threads = 1) {
  if (raster.channels != 3)
    throw std::invalid_argument("segment: raster must have 3 channels");
  require_odd_window(window);
  if (window_feature_dim(window) != p.input_dim())
    throw std::invalid_argument(
        "segment: window " + std::to_string(window) + " gives feature dim " +
        std::to_string(window_feature_dim(window)) + " but model expects " +
        std::to_string(p.input_dim()));
  LabelMap out(raster.height, raster.width, 2);
  auto run_rows = [&](int y0, int y1) {
    std::vector<double> feat(p.input_dim());
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < raster.width; ++x) {
        window_feature(raster, y, x, window, feat.data());
        Eigen::Vector2d probs = forward(p, feat);
        out.at(y, x) = probs[1] > probs[0] ? 1 : 0;
      }
    }
  };
  threads = std::max(1, std::min(threads, raster.height));
  if (threads == 1) {
    run_rows(0, raster.height);
  } else {
    std::vector<std::thread> pool;
    const int rows_per = (raster.height + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int y0 = t * rows_per;
      const int y1 = std::min(raster.height, y0 + rows_per);
      if (y0 < y1) pool.emplace_back(run_rows, y0, y1);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

// Majority vote over the (2r+1)^2 reflect-padded neighborhood; ties keep the
// center label.
inline LabelMap majority_filter(const LabelMap& in, int radius) {
  if (radius < 0) throw std::invalid_argument("majority_filter: negative radius");
  if (radius == 0) return in;
  LabelMap out(in.height, in.width, in.num_categories);
  std::vector<int> counts(in.num_categories);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      std::fill(counts.begin(), counts.end(), 0);
      for (int dy = -radius; dy <= radius; ++dy) {
        const int sy = reflect_index(y + dy, in.height);
        for (int dx = -radius; dx <= radius; ++dx)
          ++counts[in.at(sy, reflect_index(x + dx, in.width))];
      }
      const std::uint8_t center = in.at(y, x);
      int best = 0;
      int max_count = -1, max_holders = 0;
      for (int k = 0; k < in.num_categories; ++k) {
        if (counts[k] > max_count) {
          max_count = counts[k];
          best = k;
          max_holders = 1;
        } else if (counts[k] == max_count) {
          ++max_holders;
        }
      }
      // an ambiguous majority keeps the center label
      out.at(y, x) = max_holders > 1 ? center : static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

// Model container: magic "ARTMAPML", version u16, layer count u16, layer
// sizes u32 each, then per layer the row-major weight matrix followed by the
// bias vector, all little-endian f64.
inline constexpr char kModelMagic[9] = "ARTMAPML";
inline constexpr std::uint16_t kModelVersion = 1;

inline void save_model(const MlpParams& p, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  ser::write_magic(f, kModelMagic);
  ser::write_pod<std::uint16_t>(f, kModelVersion);
  ser::write_pod<std::uint16_t>(f, static_cast<std::uint16_t>(p.layer_sizes.size()));
  for (int s : p.layer_sizes) ser::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(s));
  for (std::size_t i = 0; i < p.layer_count(); ++i) {
    // Eigen default storage is column-major; write row-major explicitly.
    const auto& w = p.weights[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) ser::write_pod<double>(f, w(r, c));
    for (Eigen::Index r = 0; r < p.biases[i].size(); ++r)
      ser::write_pod<double>(f, p.biases[i][r]);
  }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline MlpParams load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open model file " + path.string());
  ser::expect_magic(f, kModelMagic, "model");
  auto version = ser::read_pod<std::uint16_t>(f);
  if (version != kModelVersion)
    throw std::runtime_error("unsupported model version " + std::to_string(version));
  auto layer_count = ser::read_pod<std::uint16_t>(f);
  if (layer_count < 3) throw std::runtime_error("model: fewer than 3 layer sizes");
  MlpParams p;
  p.layer_sizes.resize(layer_count);
  for (auto& s : p.layer_sizes)
    s = static_cast<int>(ser::read_pod<std::uint32_t>(f));
  if (p.layer_sizes.back() != 2)
    throw std::runtime_error("model: final layer size must be 2");
  for (std::size_t i = 0; i + 1 < p.layer_sizes.size(); ++i) {
    Eigen::MatrixXd w(p.layer_sizes[i + 1], p.layer_sizes[i]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = ser::read_pod<double>(f);
    Eigen::VectorXd b(p.layer_sizes[i + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = ser::read_pod<double>(f);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

}  // namespace artmap::mlp
