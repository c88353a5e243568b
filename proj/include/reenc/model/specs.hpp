// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>

#include "reenc/error.hpp"
#include "reenc/rng.hpp"

namespace reenc {

// Hyperparameters of the latent predictor trunk.
struct ModelSpec {
  std::string variant = "custom";  // "S", "M", or "custom"
  int num_blocks = 4;
  int hidden_dim = 512;
  int expansion = 2;
  int latent_channels_in = 64;
  int latent_channels_out = 64;  // per output stream
  int output_streams = 1;        // 2 for stereo prediction
  bool conditioned = false;
  int condition_dim = 0;
  int dw_kernel = 7;

  void validate() const {
    if (num_blocks < 1 || hidden_dim < 1 || expansion < 1) throw ConfigError("model spec: blocks, hidden, expansion must be positive");
    if (latent_channels_in < 1 || latent_channels_out < 1) throw ConfigError("model spec: latent channels must be positive");
    if (output_streams != 1 && output_streams != 2) throw ConfigError("model spec: output streams must be 1 or 2");
    if (dw_kernel < 1 || dw_kernel % 2 == 0) throw ConfigError("model spec: depthwise kernel must be odd");
    if (conditioned && condition_dim < 1) throw ConfigError("model spec: conditioned model needs condition_dim > 0");
    if (variant == "S" && (num_blocks != 4 || hidden_dim != 512)) throw ConfigError("model spec: S preset is 4 blocks, hidden 512");
    if (variant == "M" && (num_blocks != 8 || hidden_dim != 768)) throw ConfigError("model spec: M preset is 8 blocks, hidden 768");
  }

  static ModelSpec preset_s_bwe(int latent_channels = 64) {
    ModelSpec s;
    s.variant = "S";
    s.num_blocks = 4;
    s.hidden_dim = 512;
    s.latent_channels_in = s.latent_channels_out = latent_channels;
    return s;
  }

  static ModelSpec preset_m_bwe(int latent_channels = 64) {
    ModelSpec s;
    s.variant = "M";
    s.num_blocks = 8;
    s.hidden_dim = 768;
    s.latent_channels_in = s.latent_channels_out = latent_channels;
    return s;
  }

  static ModelSpec preset_m2s(int latent_channels = 64, int condition_dim = 64) {
    ModelSpec s = preset_m_bwe(latent_channels);
    s.output_streams = 2;
    s.conditioned = true;
    s.condition_dim = condition_dim;
    return s;
  }
};

// Hyperparameters of the conditioning encoder.
struct ConditioningEncoderSpec {
  int num_blocks = 2;
  int hidden_dim = 768;
  int expansion = 2;
  int input_channels = 128;  // stacked stereo, 2*C
  int output_dim = 64;       // H
  int dw_kernel = 7;
  double log_sigma_clamp = 8.0;

  void validate() const {
    if (num_blocks < 1 || hidden_dim < 1 || expansion < 1) throw ConfigError("conditioning spec: blocks, hidden, expansion must be positive");
    if (input_channels < 1 || output_dim < 1) throw ConfigError("conditioning spec: channels and output dim must be positive");
    if (dw_kernel < 1 || dw_kernel % 2 == 0) throw ConfigError("conditioning spec: depthwise kernel must be odd");
    if (log_sigma_clamp <= 0) throw ConfigError("conditioning spec: log sigma clamp must be positive");
  }

  static ConditioningEncoderSpec preset_full(int latent_channels = 64, int condition_dim = 64) {
    ConditioningEncoderSpec s;
    s.input_channels = 2 * latent_channels;
    s.output_dim = condition_dim;
    return s;
  }
};

// Topology of the latent discriminator. Layer count and kernel schedule are
// fixed; only the internal width is adjustable for small-scale runs.
struct DiscriminatorSpec {
  int num_layers = 6;
  int internal_channels = 256;
  int input_channels = 1;
  int output_channels = 1;
  double leaky_slope = 0.2;

  void validate() const {
    if (num_layers != 6) throw ConfigError("discriminator spec: layer count is fixed at 6");
    if (internal_channels < 1) throw ConfigError("discriminator spec: internal channels must be positive");
    if (input_channels != 1 || output_channels != 1) throw ConfigError("discriminator spec: single-channel input and output");
  }
};

// Global conditioning vector with its Gaussian parameters.
struct ConditionVector {
  Eigen::VectorXf mu;
  Eigen::VectorXf sigma;
  Eigen::VectorXf c;

  ConditionVector() = default;
  ConditionVector(Eigen::VectorXf mu_in, Eigen::VectorXf sigma_in, Eigen::VectorXf c_in)
      : mu(std::move(mu_in)), sigma(std::move(sigma_in)), c(std::move(c_in)) {
    if (mu.size() < 1) throw DimensionError("condition vector: empty");
    if (sigma.size() != mu.size() || c.size() != mu.size()) throw DimensionError("condition vector: mismatched component sizes");
    if (!(sigma.array() > 0.0f).all()) throw ValueError("condition vector: sigma must be positive");
    if (!mu.allFinite() || !sigma.allFinite() || !c.allFinite()) throw ValueError("condition vector: non-finite values");
  }

  int dim() const { return static_cast<int>(mu.size()); }
};

inline ConditionVector sample_prior(int dim, Rng& rng) {
  if (dim < 1) throw ValueError("sample_prior: dimension must be positive");
  Eigen::VectorXf c(dim);
  for (int i = 0; i < dim; ++i) c(i) = static_cast<float>(rng.gauss());
  return ConditionVector(Eigen::VectorXf::Zero(dim), Eigen::VectorXf::Ones(dim), std::move(c));
}

}  // namespace reenc
