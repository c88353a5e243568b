// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reenc/nn/modules.hpp"

namespace reenc {

// Residual sequence block: depthwise conv -> layer norm (with adaptive
// modulation when conditioned) -> expand -> GELU -> global response norm ->
// project -> skip. The modulation projection starts at zero, so a conditioned
// block reproduces the unconditioned computation at initialization.
template <typename T>
class ConvNextBlock {
 public:
  ConvNextBlock(int hidden, int expansion, int dw_kernel, bool conditioned, int cond_dim)
      : dw_(hidden, dw_kernel),
        ln_(hidden),
        expand_(hidden, hidden * expansion),
        grn_(hidden * expansion),
        project_(hidden * expansion, hidden),
        hidden_(hidden),
        conditioned_(conditioned) {
    if (conditioned) mod_.emplace(cond_dim, 2 * hidden);
  }

  void init(Rng& rng, double stddev = 0.02) {
    dw_.init(rng, stddev);
    expand_.init(rng, stddev);
    project_.init(rng, stddev);
    // mod_ stays zero: identity modulation at start
  }

  nn::Mat<T> forward(const nn::Mat<T>& x, const nn::Mat<T>* c) {
    if (conditioned_ != (c != nullptr)) throw DimensionError("block: conditioning presence does not match spec");
    nn::Mat<T> h = ln_.forward(dw_.forward(x));
    if (conditioned_) {
      ln_out_ = h;
      nn::Mat<T> m = mod_->forward(*c);
      ga_ = m.topRows(hidden_);
      ba_ = m.bottomRows(hidden_);
      h = h.array().colwise() * (ga_.col(0).array() + T(1));
      h.colwise() += ba_.col(0);
    }
    return x + project_.forward(grn_.forward(act_.forward(expand_.forward(h))));
  }

  // dc, when present, is accumulated into (+=). Returns dx.
  nn::Mat<T> backward(const nn::Mat<T>& dy, nn::Mat<T>* dc) {
    nn::Mat<T> dh = expand_.backward(act_.backward(grn_.backward(project_.backward(dy))));
    if (conditioned_) {
      nn::Mat<T> dm(2 * hidden_, 1);
      dm.topRows(hidden_) = (dh.array() * ln_out_.array()).rowwise().sum();
      dm.bottomRows(hidden_) = dh.rowwise().sum();
      nn::Mat<T> dc_local = mod_->backward(dm);
      if (dc) *dc += dc_local;
      dh = dh.array().colwise() * (ga_.col(0).array() + T(1));
    }
    return dy + dw_.backward(ln_.backward(dh));
  }

  void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& out) {
    dw_.collect(prefix + ".dw", out);
    ln_.collect(prefix + ".ln", out);
    if (conditioned_) mod_->collect(prefix + ".mod", out);
    expand_.collect(prefix + ".expand", out);
    grn_.collect(prefix + ".grn", out);
    project_.collect(prefix + ".project", out);
  }

 private:
  nn::DepthwiseConv1d<T> dw_;
  nn::LayerNormChannels<T> ln_;
  std::optional<nn::Pointwise<T>> mod_;
  nn::Pointwise<T> expand_;
  nn::Gelu<T> act_;
  nn::Grn<T> grn_;
  nn::Pointwise<T> project_;
  int hidden_;
  bool conditioned_;
  nn::Mat<T> ln_out_, ga_, ba_;
};

}  // namespace reenc
