// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "reenc/nn/adamw.hpp"
#include "reenc/nn/modules.hpp"
#include "reenc/types.hpp"

namespace reenc {

// Interface parameters of the frozen autoencoder (A_E, A_D). Any encoder
// honoring this contract can replace the toy VAE, including pre-computed
// latents imported from RELT files.
struct AutoencoderSpec {
  int sample_rate_hz = 44100;
  int downsample_factor = 1024;
  int latent_channels = 64;
  bool variational = true;

  double frame_rate_hz() const { return static_cast<double>(sample_rate_hz) / downsample_factor; }

  void validate() const {
    if (sample_rate_hz < 1 || downsample_factor < 1 || latent_channels < 1)
      throw ConfigError("autoencoder spec: rate, downsample, channels must be positive");
  }

  static AutoencoderSpec full_scale() { return AutoencoderSpec{44100, 1024, 64, true}; }
  static AutoencoderSpec tiny() { return AutoencoderSpec{8000, 64, 16, true}; }
};

// Desk-scale stand-in autoencoder: strided 1-D conv encoder, transposed-conv
// decoder, trained with waveform L1 + multi-resolution STFT loss + KL.
struct ToyVAEConfig {
  int sample_rate_hz = 8000;
  int downsample_factor = 64;
  int latent_channels = 16;
  bool variational = true;
  std::vector<int> widths = {32, 64, 128};   // encoder stage outputs; decoder mirrors
  std::vector<int> strides = {4, 4, 4};      // product must equal downsample_factor
  double kl_weight = 1e-4;
  double w_wave_l1 = 1.0;
  double w_stft = 1.0;
  double log_sigma_clamp = 8.0;
  std::vector<int> stft_ffts = {256, 512, 1024};  // loss resolutions; hop = fft/4

  // training knobs
  int train_batch = 8;
  double train_lr = 1e-3;
  double train_chunk_seconds = 0.5;

  AutoencoderSpec interface_spec() const {
    return AutoencoderSpec{sample_rate_hz, downsample_factor, latent_channels, variational};
  }

  void validate() const;

  static ToyVAEConfig tiny() { return ToyVAEConfig{}; }
  static ToyVAEConfig full_scale();
};

class ToyVAE {
 public:
  explicit ToyVAE(ToyVAEConfig cfg);

  void init(Rng& rng);

  // Frozen-mode interface: encode returns the posterior mean, deterministic.
  LatentSequence encode(const AudioBuffer& x);
  AudioBuffer decode(const LatentSequence& z);

  const ToyVAEConfig& config() const { return cfg_; }
  const AutoencoderSpec& spec() const { return spec_; }
  std::vector<nn::ParamRef<float>> params();

  // Training-path hooks (used by train_toy_vae).
  struct EncodeStats {
    nn::Mat<float> mu, log_sigma;
  };
  EncodeStats encode_train(const nn::Mat<float>& wave);               // wave: 1 x L
  nn::Mat<float> decode_train(const nn::Mat<float>& z);               // z: C x T -> 1 x (T*downsample)
  nn::Mat<float> decode_backward(const nn::Mat<float>& dwave);        // -> dz
  nn::Mat<float> encode_backward(const nn::Mat<float>& dmu, const nn::Mat<float>& dlog_sigma);  // -> dwave

 private:
  ToyVAEConfig cfg_;
  AutoencoderSpec spec_;
  std::vector<nn::Conv1dStrided<float>> enc_stages_;
  std::vector<nn::Gelu<float>> enc_acts_;
  nn::Pointwise<float> enc_out_;
  nn::Pointwise<float> dec_in_;
  std::vector<nn::Gelu<float>> dec_acts_;
  std::vector<nn::TransposedConv1d<float>> dec_stages_;
  nn::Pointwise<float> dec_out_;
  nn::Mat<float> clamp_mask_;
};

struct ToyVAETrainResult {
  ToyVAE model;
  std::vector<double> total_trace;  // per step
  std::vector<double> rec_trace;    // waveform L1 + STFT portion per step
};

// Trains from scratch on mono clips at the config sample rate. Deterministic
// given (config, corpus, steps, seed) on one thread.
ToyVAETrainResult train_toy_vae(const ToyVAEConfig& cfg, const std::vector<AudioBuffer>& corpus,
                                int steps, std::uint64_t seed);

}  // namespace reenc
