// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "reenc/model/specs.hpp"
#include "reenc/nn/modules.hpp"
#include "reenc/types.hpp"

namespace reenc {

// Latent discriminator: the C x T latent is treated as a one-channel image of
// height C and width T. Six stride-1 convolutions, the first five with 3x7
// kernels and pad 1 (so each trims the width by 4 and keeps the height), the
// last 3x3 pad 1 (shape preserving). Feature taps: post-activation maps for
// layers 1-5 plus the raw final map, which doubles as the score map.
template <typename T>
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const int ch = spec_.internal_channels;
    layers_.reserve(6);
    layers_.emplace_back(1, ch, 3, 7, 1, 1);
    for (int i = 0; i < 4; ++i) layers_.emplace_back(ch, ch, 3, 7, 1, 1);
    layers_.emplace_back(ch, 1, 3, 3, 1, 1);
    for (int i = 0; i < 5; ++i) acts_.emplace_back(static_cast<T>(spec_.leaky_slope));
  }

  void init(Rng& rng, double stddev = 0.02) {
    for (auto& l : layers_) l.init(rng, stddev);
  }

  // Per-layer (height, width) after each of the six convolutions.
  static std::vector<std::pair<int, int>> layer_shapes(int height, int width) {
    std::vector<std::pair<int, int>> shapes;
    int h = height, w = width;
    for (int i = 0; i < 5; ++i) {
      h = h + 2 - 3 + 1;
      w = w + 2 - 7 + 1;
      shapes.emplace_back(h, w);
    }
    shapes.emplace_back(h, w);  // final 3x3 pad 1 preserves both
    return shapes;
  }

  static void check_input_size(int height, int width) {
    if (height < 3) throw DimensionError("discriminator: latent needs at least 3 channels, got " + std::to_string(height));
    if (width < 7) throw DimensionError("discriminator: sequence too short, needs at least 7 frames, got " + std::to_string(width));
    for (auto [h, w] : layer_shapes(height, width))
      if (h < 1 || w < 1)
        throw DimensionError("discriminator: sequence of width " + std::to_string(width) +
                             " collapses below one column inside the stack");
  }

  struct Output {
    nn::Mat<T> score;                   // final raw map, C' x T' flattened as 1 x (h*w)... stored as matrix h x w
    std::vector<nn::Mat<T>> features;   // 6 taps, each channels x (h*w)
    std::vector<std::pair<int, int>> shapes;  // per-tap (height, width)
  };

  Output forward(const nn::Mat<T>& z) {
    check_input_size(static_cast<int>(z.rows()), static_cast<int>(z.cols()));
    Output out;
    out.shapes = layer_shapes(static_cast<int>(z.rows()), static_cast<int>(z.cols()));
    nn::FeatureMap<T> h = nn::FeatureMap<T>::from(z);
    for (int i = 0; i < 5; ++i) {
      h = layers_[static_cast<std::size_t>(i)].forward(h);
      h.data = acts_[static_cast<std::size_t>(i)].forward(h.data);
      out.features.push_back(h.data);
    }
    h = layers_[5].forward(h);
    out.features.push_back(h.data);
    out.score.resize(h.height, h.width);
    for (int r = 0; r < h.height; ++r)
      for (int c = 0; c < h.width; ++c) out.score(r, c) = h.data(0, r * h.width + c);
    in_height_ = static_cast<int>(z.rows());
    in_width_ = static_cast<int>(z.cols());
    return out;
  }

  // dfeatures[i] matches features[i]; gradients w.r.t. the score map must be
  // folded into dfeatures[5] by the caller (same tensor). Returns d z.
  nn::Mat<T> backward(const std::vector<nn::Mat<T>>& dfeatures) {
    if (dfeatures.size() != 6) throw DimensionError("discriminator backward: expected 6 gradient maps");
    auto shapes = layer_shapes(in_height_, in_width_);
    nn::FeatureMap<T> g;
    g.channels = 1;
    g.height = shapes[5].first;
    g.width = shapes[5].second;
    g.data = dfeatures[5];
    g = layers_[5].backward(g);
    for (int i = 4; i >= 0; --i) {
      g.data += dfeatures[static_cast<std::size_t>(i)];
      g.data = acts_[static_cast<std::size_t>(i)].backward(g.data);
      g = layers_[static_cast<std::size_t>(i)].backward(g);
    }
    nn::Mat<T> dz(in_height_, in_width_);
    for (int r = 0; r < in_height_; ++r)
      for (int c = 0; c < in_width_; ++c) dz(r, c) = g.data(0, r * in_width_ + c);
    return dz;
  }

  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].collect("disc.layer" + std::to_string(i), out);
    return out;
  }

  const DiscriminatorSpec& spec() const { return spec_; }

 private:
  DiscriminatorSpec spec_;
  std::vector<nn::Conv2d<T>> layers_;
  std::vector<nn::LeakyRelu<T>> acts_;
  int in_height_ = 0, in_width_ = 0;
};

}  // namespace reenc
