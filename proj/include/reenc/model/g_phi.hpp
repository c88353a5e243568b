// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "reenc/model/block.hpp"
#include "reenc/model/specs.hpp"
#include "reenc/types.hpp"

namespace reenc {

// Conditioning encoder: the stacked stereo target (2C x T) is projected to the
// hidden width, run through unconditioned blocks, mean-pooled over time, and
// mapped to the posterior parameters (mu, log sigma). log sigma is clamped for
// numerical safety; the clamp gradient is zero where it binds.
template <typename T>
class GPhi {
 public:
  explicit GPhi(ConditioningEncoderSpec spec)
      : spec_(std::move(spec)),
        in_proj_(spec_.input_channels, spec_.hidden_dim),
        mu_head_(spec_.hidden_dim, spec_.output_dim),
        logsig_head_(spec_.hidden_dim, spec_.output_dim) {
    spec_.validate();
    blocks_.reserve(spec_.num_blocks);
    for (int i = 0; i < spec_.num_blocks; ++i)
      blocks_.emplace_back(spec_.hidden_dim, spec_.expansion, spec_.dw_kernel, false, 0);
  }

  void init(Rng& rng, double stddev = 0.02) {
    in_proj_.init(rng, stddev);
    for (auto& b : blocks_) b.init(rng, stddev);
    mu_head_.init(rng, stddev);
    logsig_head_.init(rng, stddev);
  }

  struct Posterior {
    nn::Mat<T> mu;         // H x 1
    nn::Mat<T> log_sigma;  // H x 1, clamped
  };

  Posterior forward(const nn::Mat<T>& z_stacked) {
    if (z_stacked.rows() != spec_.input_channels)
      throw DimensionError("conditioning encoder: expected " + std::to_string(spec_.input_channels) +
                           " stacked channels, got " + std::to_string(z_stacked.rows()));
    if (z_stacked.cols() < 1) throw DimensionError("conditioning encoder: empty time axis");
    if (!z_stacked.allFinite()) throw ValueError("conditioning encoder: non-finite input");
    nn::Mat<T> h = in_proj_.forward(z_stacked);
    for (auto& b : blocks_) h = b.forward(h, nullptr);
    nn::Mat<T> pooled = pool_.forward(h);
    Posterior p;
    p.mu = mu_head_.forward(pooled);
    nn::Mat<T> raw = logsig_head_.forward(pooled);
    const T lim = static_cast<T>(spec_.log_sigma_clamp);
    clamp_mask_ = raw.unaryExpr([lim](T v) { return (v > -lim && v < lim) ? T(1) : T(0); });
    p.log_sigma = raw.unaryExpr([lim](T v) { return std::min(std::max(v, -lim), lim); });
    return p;
  }

  nn::Mat<T> backward(const nn::Mat<T>& dmu, const nn::Mat<T>& dlog_sigma) {
    nn::Mat<T> dpooled = mu_head_.backward(dmu);
    dpooled += logsig_head_.backward((dlog_sigma.array() * clamp_mask_.array()).matrix());
    nn::Mat<T> dh = pool_.backward(dpooled);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) dh = it->backward(dh, nullptr);
    return in_proj_.backward(dh);
  }

  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> out;
    in_proj_.collect("g_phi.in_proj", out);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].collect("g_phi.block" + std::to_string(i), out);
    mu_head_.collect("g_phi.mu_head", out);
    logsig_head_.collect("g_phi.logsig_head", out);
    return out;
  }

  const ConditioningEncoderSpec& spec() const { return spec_; }

 private:
  ConditioningEncoderSpec spec_;
  nn::Pointwise<T> in_proj_;
  std::vector<ConvNextBlock<T>> blocks_;
  nn::MeanPoolTime<T> pool_;
  nn::Pointwise<T> mu_head_;
  nn::Pointwise<T> logsig_head_;
  nn::Mat<T> clamp_mask_;
};

// Runs the conditioning encoder on a stacked target latent and draws the
// reparameterized sample c = mu + sigma .* eps from the given generator.
inline ConditionVector g_phi_condition(GPhi<float>& encoder, const StackedLatent& z_tgt, Rng& rng) {
  auto post = encoder.forward(z_tgt.as_stacked_matrix());
  const int h = static_cast<int>(post.mu.rows());
  Eigen::VectorXf mu = post.mu.col(0);
  Eigen::VectorXf sigma = post.log_sigma.col(0).array().exp();
  Eigen::VectorXf c(h);
  for (int i = 0; i < h; ++i) c(i) = mu(i) + sigma(i) * static_cast<float>(rng.gauss());
  return ConditionVector(std::move(mu), std::move(sigma), std::move(c));
}

}  // namespace reenc
