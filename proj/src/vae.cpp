// SPDX-License-Identifier: Apache-2.0
#include "reenc/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace reenc {

namespace {

// Differentiable multi-resolution STFT distance for the VAE objective,
// computed with explicit DFT tables so gradients are exact. Window length
// equals the FFT size, hop is a quarter of it, Hann window.
class DifferentiableStftLoss {
 public:
  explicit DifferentiableStftLoss(const std::vector<int>& ffts) {
    for (int n : ffts) {
      Resolution r;
      r.fft = n;
      r.hop = std::max(1, n / 4);
      const int bins = n / 2 + 1;
      r.cos.resize(bins, n);
      r.sin.resize(bins, n);
      r.window.resize(n);
      for (int i = 0; i < n; ++i)
        r.window(i) = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * M_PI * i / n));
      for (int k = 0; k < bins; ++k)
        for (int i = 0; i < n; ++i) {
          const double ang = 2.0 * M_PI * k * i / n;
          r.cos(k, i) = static_cast<float>(std::cos(ang));
          r.sin(k, i) = static_cast<float>(-std::sin(ang));
        }
      res_.push_back(std::move(r));
    }
  }

  // Returns the loss (mean over usable resolutions) and accumulates
  // d loss / d x_hat into dx_hat (same shape as the inputs, 1 x L rows).
  float loss_and_grad(const nn::Mat<float>& x_ref, const nn::Mat<float>& x_hat,
                      nn::Mat<float>& dx_hat) const {
    nn::Mat<float> grad = nn::Mat<float>::Zero(1, x_hat.cols());
    float total = 0.0f;
    int counted = 0;
    for (const auto& r : res_) {
      const int len = static_cast<int>(x_ref.cols());
      if (len < r.fft) continue;
      const int frames = (len - r.fft) / r.hop + 1;
      const int bins = r.fft / 2 + 1;

      nn::Mat<float> wr(r.fft, frames), wh(r.fft, frames);
      for (int f = 0; f < frames; ++f) {
        wr.col(f) = x_ref.row(0).segment(f * r.hop, r.fft).transpose().cwiseProduct(r.window);
        wh.col(f) = x_hat.row(0).segment(f * r.hop, r.fft).transpose().cwiseProduct(r.window);
      }
      nn::Mat<float> re_r = r.cos * wr, im_r = r.sin * wr;
      nn::Mat<float> re_h = r.cos * wh, im_h = r.sin * wh;
      nn::Mat<float> mag_r = (re_r.array().square() + im_r.array().square() + 1e-12f).sqrt();
      nn::Mat<float> mag_h = (re_h.array().square() + im_h.array().square() + 1e-12f).sqrt();

      const float ref_norm = mag_r.norm() + 1e-8f;
      nn::Mat<float> diff = mag_h - mag_r;
      const float diff_norm = diff.norm();
      const float sc = diff_norm / ref_norm;

      nn::Mat<float> log_r = (mag_r.array() + 1e-5f).log();
      nn::Mat<float> log_h = (mag_h.array() + 1e-5f).log();
      const float n_el = static_cast<float>(mag_r.size());
      const float lm = (log_h - log_r).array().abs().mean();

      total += sc + lm;
      ++counted;

      // d loss / d mag_h
      nn::Mat<float> dmag = nn::Mat<float>::Zero(bins, frames);
      if (diff_norm > 0.0f) dmag += diff / (diff_norm * ref_norm);
      dmag.array() += (log_h - log_r)
                          .unaryExpr([](float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); })
                          .array() /
                      ((mag_h.array() + 1e-5f) * n_el);

      nn::Mat<float> dre = dmag.cwiseProduct(re_h.cwiseQuotient(mag_h));
      nn::Mat<float> dim = dmag.cwiseProduct(im_h.cwiseQuotient(mag_h));
      nn::Mat<float> dwin = r.cos.transpose() * dre + r.sin.transpose() * dim;  // fft x frames
      for (int f = 0; f < frames; ++f)
        grad.row(0).segment(f * r.hop, r.fft) += (dwin.col(f).cwiseProduct(r.window)).transpose();
    }
    if (counted == 0) throw DataError("stft loss: clip shorter than every analysis window");
    dx_hat += grad / static_cast<float>(counted);
    return total / static_cast<float>(counted);
  }

  int usable_resolutions(int len) const {
    int n = 0;
    for (const auto& r : res_)
      if (len >= r.fft) ++n;
    return n;
  }

 private:
  struct Resolution {
    int fft, hop;
    nn::Mat<float> cos, sin;
    Eigen::VectorXf window;
  };
  std::vector<Resolution> res_;
};

int stride_product(const std::vector<int>& strides) {
  int p = 1;
  for (int s : strides) p *= s;
  return p;
}

}  // namespace

void ToyVAEConfig::validate() const {
  interface_spec().validate();
  if (widths.empty() || strides.empty()) throw ConfigError("toy vae: widths and strides must be non-empty");
  if (widths.size() != strides.size()) throw ConfigError("toy vae: widths and strides must have equal length");
  for (int w : widths)
    if (w < 1) throw ConfigError("toy vae: widths must be positive");
  for (int s : strides) {
    if (s < 2) throw ConfigError("toy vae: strides must be >= 2");
    if (s % 2 != 0) throw ConfigError("toy vae: strides must be even");
  }
  if (stride_product(strides) != downsample_factor)
    throw ConfigError("toy vae: product of strides (" + std::to_string(stride_product(strides)) +
                      ") must equal downsample_factor (" + std::to_string(downsample_factor) + ")");
  if (kl_weight < 0 || w_wave_l1 < 0 || w_stft < 0) throw ConfigError("toy vae: loss weights must be non-negative");
  if (train_batch < 1) throw ConfigError("toy vae: train_batch must be >= 1");
  if (!(train_lr > 0)) throw ConfigError("toy vae: train_lr must be positive");
  if (!(train_chunk_seconds > 0)) throw ConfigError("toy vae: train_chunk_seconds must be positive");
  if (stft_ffts.empty()) throw ConfigError("toy vae: needs at least one stft loss resolution");
}

ToyVAEConfig ToyVAEConfig::full_scale() {
  ToyVAEConfig c;
  c.sample_rate_hz = 44100;
  c.downsample_factor = 1024;
  c.latent_channels = 64;
  c.widths = {32, 64, 128, 256, 512};
  c.strides = {4, 4, 4, 4, 4};
  c.stft_ffts = {512, 1024, 2048};
  c.train_chunk_seconds = 0.25;
  return c;
}

ToyVAE::ToyVAE(ToyVAEConfig cfg)
    : cfg_(std::move(cfg)),
      spec_(cfg_.interface_spec()),
      enc_out_(0, 0),
      dec_in_(0, 0),
      dec_out_(0, 0) {
  cfg_.validate();
  const auto& w = cfg_.widths;
  const auto& s = cfg_.strides;
  int in_ch = 1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    enc_stages_.emplace_back(in_ch, w[i], 2 * s[i] + 1, s[i]);
    enc_acts_.emplace_back();
    in_ch = w[i];
  }
  enc_out_ = nn::Pointwise<float>(w.back(), 2 * cfg_.latent_channels);
  dec_in_ = nn::Pointwise<float>(cfg_.latent_channels, w.back());
  for (std::size_t i = w.size(); i-- > 0;) {
    const int out_ch = (i == 0) ? w[0] : w[i - 1];
    dec_acts_.emplace_back();
    dec_stages_.emplace_back(w[i], out_ch, 2 * s[i], s[i], s[i] / 2);
  }
  dec_out_ = nn::Pointwise<float>(w[0], 1);
}

void ToyVAE::init(Rng& rng) {
  const double stddev = 0.05;
  for (auto& e : enc_stages_) e.init(rng, stddev);
  enc_out_.init(rng, 0.02);
  dec_in_.init(rng, stddev);
  for (auto& d : dec_stages_) d.init(rng, stddev);
  dec_out_.init(rng, stddev);
}

std::vector<nn::ParamRef<float>> ToyVAE::params() {
  std::vector<nn::ParamRef<float>> out;
  for (std::size_t i = 0; i < enc_stages_.size(); ++i)
    enc_stages_[i].collect("vae.enc" + std::to_string(i), out);
  enc_out_.collect("vae.enc_out", out);
  dec_in_.collect("vae.dec_in", out);
  for (std::size_t i = 0; i < dec_stages_.size(); ++i)
    dec_stages_[i].collect("vae.dec" + std::to_string(i), out);
  dec_out_.collect("vae.dec_out", out);
  return out;
}

ToyVAE::EncodeStats ToyVAE::encode_train(const nn::Mat<float>& wave) {
  nn::Mat<float> h = wave;
  for (std::size_t i = 0; i < enc_stages_.size(); ++i)
    h = enc_acts_[i].forward(enc_stages_[i].forward(h));
  nn::Mat<float> stats = enc_out_.forward(h);
  const int c = cfg_.latent_channels;
  EncodeStats out;
  out.mu = stats.topRows(c);
  nn::Mat<float> raw = stats.bottomRows(c);
  const float lim = static_cast<float>(cfg_.log_sigma_clamp);
  clamp_mask_ = raw.unaryExpr([lim](float v) { return (v > -lim && v < lim) ? 1.0f : 0.0f; });
  out.log_sigma = raw.unaryExpr([lim](float v) { return std::min(std::max(v, -lim), lim); });
  return out;
}

nn::Mat<float> ToyVAE::encode_backward(const nn::Mat<float>& dmu, const nn::Mat<float>& dlog_sigma) {
  const int c = cfg_.latent_channels;
  nn::Mat<float> dstats(2 * c, dmu.cols());
  dstats.topRows(c) = dmu;
  dstats.bottomRows(c) = dlog_sigma.cwiseProduct(clamp_mask_);
  nn::Mat<float> dh = enc_out_.backward(dstats);
  for (std::size_t i = enc_stages_.size(); i-- > 0;)
    dh = enc_stages_[i].backward(enc_acts_[i].backward(dh));
  return dh;
}

nn::Mat<float> ToyVAE::decode_train(const nn::Mat<float>& z) {
  nn::Mat<float> h = dec_in_.forward(z);
  for (std::size_t i = 0; i < dec_stages_.size(); ++i)
    h = dec_stages_[i].forward(dec_acts_[i].forward(h));
  return dec_out_.forward(h);
}

nn::Mat<float> ToyVAE::decode_backward(const nn::Mat<float>& dwave) {
  nn::Mat<float> dh = dec_out_.backward(dwave);
  for (std::size_t i = dec_stages_.size(); i-- > 0;)
    dh = dec_acts_[i].backward(dec_stages_[i].backward(dh));
  return dec_in_.backward(dh);
}

LatentSequence ToyVAE::encode(const AudioBuffer& x) {
  if (x.sample_rate_hz() != spec_.sample_rate_hz)
    throw DimensionError("encode: audio is " + std::to_string(x.sample_rate_hz()) +
                         " Hz, autoencoder expects " + std::to_string(spec_.sample_rate_hz));
  if (x.channels() != 1) throw DimensionError("encode: mono input per call; split stereo channel-wise");
  if (x.length() < 1) throw DataError("encode: empty audio");
  auto stats = encode_train(x.samples());
  return LatentSequence(std::move(stats.mu), spec_.frame_rate_hz());
}

AudioBuffer ToyVAE::decode(const LatentSequence& z) {
  if (z.channels() != spec_.latent_channels)
    throw DimensionError("decode: latent has " + std::to_string(z.channels()) + " channels, autoencoder expects " +
                         std::to_string(spec_.latent_channels));
  nn::Mat<float> wave = decode_train(z.data());
  return AudioBuffer(std::move(wave), spec_.sample_rate_hz);
}

ToyVAETrainResult train_toy_vae(const ToyVAEConfig& cfg, const std::vector<AudioBuffer>& corpus,
                                int steps, std::uint64_t seed) {
  cfg.validate();
  if (corpus.empty()) throw DataError("train_toy_vae: empty corpus");
  if (steps < 1) throw ValueError("train_toy_vae: steps must be >= 1");
  const int chunk_raw = static_cast<int>(std::llround(cfg.train_chunk_seconds * cfg.sample_rate_hz));
  const int chunk = ((chunk_raw + cfg.downsample_factor - 1) / cfg.downsample_factor) * cfg.downsample_factor;
  for (const auto& clip : corpus) {
    if (clip.channels() != 1) throw DataError("train_toy_vae: corpus must be mono");
    if (clip.sample_rate_hz() != cfg.sample_rate_hz) throw DataError("train_toy_vae: corpus sample rate mismatch");
    if (clip.length() < chunk)
      throw DataError("train_toy_vae: clip shorter than the training chunk (" + std::to_string(chunk) + " samples)");
  }

  ToyVAETrainResult result{ToyVAE(cfg), {}, {}};
  Rng rng(seed);
  Rng init_rng = rng.fork(1);
  Rng data_rng = rng.fork(2);
  Rng eps_rng = rng.fork(3);
  result.model.init(init_rng);

  DifferentiableStftLoss stft(cfg.stft_ffts);
  if (stft.usable_resolutions(chunk) == 0)
    throw ConfigError("train_toy_vae: training chunk shorter than every stft loss window");

  auto params = result.model.params();
  nn::AdamWConfig opt_cfg;
  opt_cfg.weight_decay = 1e-5;
  nn::AdamW<float> opt(opt_cfg);

  const int c_lat = cfg.latent_channels;
  for (int step = 0; step < steps; ++step) {
    nn::zero_grads(params);
    double total_acc = 0.0, rec_acc = 0.0;
    for (int b = 0; b < cfg.train_batch; ++b) {
      const auto& clip = corpus[static_cast<std::size_t>(data_rng.below(corpus.size()))];
      const std::int64_t max_off = clip.length() - chunk;
      const std::int64_t off = max_off > 0 ? static_cast<std::int64_t>(data_rng.below(static_cast<std::uint64_t>(max_off + 1))) : 0;
      nn::Mat<float> x = clip.samples().middleCols(off, chunk);

      auto stats = result.model.encode_train(x);
      const int t = static_cast<int>(stats.mu.cols());
      nn::Mat<float> sigma = stats.log_sigma.array().exp();
      nn::Mat<float> eps(c_lat, t);
      if (cfg.variational)
        for (int j = 0; j < t; ++j)
          for (int i = 0; i < c_lat; ++i) eps(i, j) = static_cast<float>(eps_rng.gauss());
      else
        eps.setZero();
      nn::Mat<float> z = stats.mu + sigma.cwiseProduct(eps);
      nn::Mat<float> x_hat = result.model.decode_train(z);

      const float n_w = static_cast<float>(x.cols());
      const float l1 = (x_hat - x).array().abs().mean();
      nn::Mat<float> dx_hat = (x_hat - x).unaryExpr([n_w](float v) {
        return (v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f)) / n_w;
      });
      dx_hat *= static_cast<float>(cfg.w_wave_l1);

      nn::Mat<float> dx_stft = nn::Mat<float>::Zero(1, x.cols());
      const float stft_val = stft.loss_and_grad(x, x_hat, dx_stft);
      dx_hat += dx_stft * static_cast<float>(cfg.w_stft);

      const float n_el = static_cast<float>(stats.mu.size());
      nn::Mat<float> sigma_sq = sigma.array().square();
      const float kl = 0.5f *
                       (stats.mu.array().square() + sigma_sq.array() - 1.0f -
                        2.0f * stats.log_sigma.array())
                           .mean();

      const float rec = static_cast<float>(cfg.w_wave_l1) * l1 + static_cast<float>(cfg.w_stft) * stft_val;
      const float total = rec + static_cast<float>(cfg.kl_weight) * kl;
      if (!std::isfinite(total)) throw ValueError("train_toy_vae: non-finite loss at step " + std::to_string(step));
      total_acc += total;
      rec_acc += rec;

      nn::Mat<float> dz = result.model.decode_backward(dx_hat);
      nn::Mat<float> dmu = dz;
      nn::Mat<float> dls = dz.cwiseProduct(eps).cwiseProduct(sigma);
      dmu += static_cast<float>(cfg.kl_weight) * (stats.mu / n_el);
      dls.array() += static_cast<float>(cfg.kl_weight) * (sigma_sq.array() - 1.0f) / n_el;
      result.model.encode_backward(dmu, dls);
    }
    for (auto& p : params) *p.g /= static_cast<float>(cfg.train_batch);
    opt.step(params, cfg.train_lr);
    result.total_trace.push_back(total_acc / cfg.train_batch);
    result.rec_trace.push_back(rec_acc / cfg.train_batch);
  }
  return result;
}

}  // namespace reenc
