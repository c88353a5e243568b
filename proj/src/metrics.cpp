// SPDX-License-Identifier: Apache-2.0
#include "reenc/metrics.hpp"

#include <cmath>

#include "reenc/fft.hpp"

namespace reenc {

void STFTDistanceConfig::validate() const {
  if (resolutions.empty()) throw ConfigError("stft distance: needs at least one resolution");
  for (const auto& r : resolutions) {
    if (r.hop < 1 || !(r.hop < r.window_length) || !(r.window_length <= r.fft_size))
      throw ConfigError("stft distance: require 0 < hop < window_length <= fft_size");
    if (!is_power_of_two(static_cast<std::size_t>(r.fft_size)))
      throw ConfigError("stft distance: fft_size must be a power of two");
  }
  if (log_floor <= 0) throw ConfigError("stft distance: log_floor must be positive");
}

void MelDistanceConfig::validate() const {
  if (hop < 1 || fft_size < 2 || !is_power_of_two(static_cast<std::size_t>(fft_size)))
    throw ConfigError("mel distance: fft_size must be a power of two and hop positive");
  if (mel_bins < 1) throw ConfigError("mel distance: mel_bins must be >= 1");
  if (fmin_hz < 0) throw ConfigError("mel distance: fmin must be >= 0");
  if (log_floor <= 0) throw ConfigError("mel distance: log_floor must be positive");
}

namespace {

void require_comparable_mono(const AudioBuffer& ref, const AudioBuffer& est) {
  if (ref.channels() != 1 || est.channels() != 1)
    throw DimensionError("metric: expects mono signals (evaluate channels separately)");
  if (ref.sample_rate_hz() != est.sample_rate_hz())
    throw DimensionError("metric: sample rates differ");
  if (ref.length() != est.length())
    throw DimensionError("metric: lengths differ (" + std::to_string(ref.length()) + " vs " +
                         std::to_string(est.length()) + "); align before comparing");
}

double htk_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double htk_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

Eigen::MatrixXd magnitude_spectrogram(const AudioBuffer& mono, int fft_size, int window_length, int hop) {
  if (mono.channels() != 1) throw DimensionError("spectrogram: mono input required");
  const auto len = mono.length();
  if (len < window_length)
    throw DimensionError("spectrogram: signal of " + std::to_string(len) +
                         " samples is shorter than the analysis window (" +
                         std::to_string(window_length) + ")");
  const auto frames = static_cast<Eigen::Index>((len - window_length) / hop + 1);
  const auto bins = static_cast<Eigen::Index>(fft_size / 2 + 1);

  std::vector<double> window(static_cast<std::size_t>(window_length));
  for (int i = 0; i < window_length; ++i)
    window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / window_length);

  Eigen::MatrixXd mag(bins, frames);
  std::vector<double> frame(static_cast<std::size_t>(window_length));
  const auto& x = mono.samples();
  for (Eigen::Index f = 0; f < frames; ++f) {
    const auto start = f * hop;
    for (int i = 0; i < window_length; ++i)
      frame[static_cast<std::size_t>(i)] =
          static_cast<double>(x(0, start + i)) * window[static_cast<std::size_t>(i)];
    const auto spec = rfft(frame, static_cast<std::size_t>(fft_size));
    for (Eigen::Index k = 0; k < bins; ++k) mag(k, f) = std::abs(spec[static_cast<std::size_t>(k)]);
  }
  return mag;
}

StftDistanceDetail stft_distance_detail(const AudioBuffer& ref, const AudioBuffer& est,
                                        const STFTDistanceConfig& cfg) {
  cfg.validate();
  require_comparable_mono(ref, est);
  StftDistanceDetail out;
  out.per_resolution.reserve(cfg.resolutions.size());
  double total = 0.0;
  for (const auto& r : cfg.resolutions) {
    const Eigen::MatrixXd ma = magnitude_spectrogram(ref, r.fft_size, r.window_length, r.hop);
    const Eigen::MatrixXd mb = magnitude_spectrogram(est, r.fft_size, r.window_length, r.hop);
    const double ref_norm = ma.norm();
    // Identical inputs must give exactly zero, including for all-silent pairs
    // where the normalizer vanishes.
    const double diff_norm = (ma - mb).norm();
    const double sc = diff_norm == 0.0 ? 0.0 : diff_norm / std::max(ref_norm, 1e-30);
    const double log_mag =
        (ma.cwiseMax(cfg.log_floor).array().log() - mb.cwiseMax(cfg.log_floor).array().log())
            .abs()
            .mean();
    out.per_resolution.push_back({sc, log_mag});
    total += sc + log_mag;
  }
  out.value = total / static_cast<double>(cfg.resolutions.size());
  return out;
}

double stft_distance(const AudioBuffer& ref, const AudioBuffer& est, const STFTDistanceConfig& cfg) {
  return stft_distance_detail(ref, est, cfg).value;
}

Eigen::MatrixXd mel_filterbank(const MelDistanceConfig& cfg, int sample_rate_hz) {
  cfg.validate();
  const double fmax = cfg.fmax_hz > 0 ? cfg.fmax_hz : 0.5 * sample_rate_hz;
  if (!(cfg.fmin_hz < fmax)) throw ConfigError("mel distance: fmin must be below fmax");
  const auto bins = static_cast<Eigen::Index>(cfg.fft_size / 2 + 1);
  const double mel_lo = htk_mel(cfg.fmin_hz), mel_hi = htk_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.mel_bins) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = htk_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                   static_cast<double>(cfg.mel_bins + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.mel_bins, bins);
  const double hz_per_bin = static_cast<double>(sample_rate_hz) / cfg.fft_size;
  for (int m = 0; m < cfg.mel_bins; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m) + 1];
    const double hi = edges[static_cast<std::size_t>(m) + 2];
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * hz_per_bin;
      double w = 0.0;
      if (f > lo && f < hi) w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fb(m, k) = w;
    }
    if (fb.row(m).sum() <= 0.0)
      throw ConfigError("mel distance: filter " + std::to_string(m) +
                        " covers no frequency bin; reduce mel_bins or raise fft_size");
  }
  return fb;
}

double mel_distance(const AudioBuffer& ref, const AudioBuffer& est, const MelDistanceConfig& cfg) {
  cfg.validate();
  require_comparable_mono(ref, est);
  const Eigen::MatrixXd fb = mel_filterbank(cfg, ref.sample_rate_hz());
  // window == fft_size here: the window length is not separately configurable
  const Eigen::MatrixXd ma = fb * magnitude_spectrogram(ref, cfg.fft_size, cfg.fft_size, cfg.hop);
  const Eigen::MatrixXd mb = fb * magnitude_spectrogram(est, cfg.fft_size, cfg.fft_size, cfg.hop);
  return (ma.cwiseMax(cfg.log_floor).array().log() - mb.cwiseMax(cfg.log_floor).array().log())
      .abs()
      .mean();
}

BandedMetrics banded_metrics(const AudioBuffer& ref, const AudioBuffer& est, const BandSplitConfig& split,
                             const STFTDistanceConfig& scfg, const MelDistanceConfig& mcfg) {
  require_comparable_mono(ref, est);
  const auto [ref_low, ref_high] = band_split(ref, split);
  const auto [est_low, est_high] = band_split(est, split);
  BandedMetrics out;
  out.stft_d.full = stft_distance(ref, est, scfg);
  out.stft_d.low = stft_distance(ref_low, est_low, scfg);
  out.stft_d.high = stft_distance(ref_high, est_high, scfg);
  out.mel_d.full = mel_distance(ref, est, mcfg);
  out.mel_d.low = mel_distance(ref_low, est_low, mcfg);
  out.mel_d.high = mel_distance(ref_high, est_high, mcfg);
  return out;
}

StereoMetrics stereo_metrics(const AudioBuffer& ref, const AudioBuffer& est,
                             const STFTDistanceConfig& scfg, const MelDistanceConfig& mcfg) {
  if (ref.channels() != 2 || est.channels() != 2)
    throw DimensionError("stereo metrics: both signals must be stereo");
  if (ref.sample_rate_hz() != est.sample_rate_hz() || ref.length() != est.length())
    throw DimensionError("stereo metrics: signals must share rate and length");
  const AudioBuffer ref_ms = to_mid_side(ref);
  const AudioBuffer est_ms = to_mid_side(est);
  StereoMetrics out;
  out.stft_d.left = stft_distance(ref.channel(0), est.channel(0), scfg);
  out.stft_d.right = stft_distance(ref.channel(1), est.channel(1), scfg);
  out.stft_d.mid = stft_distance(ref_ms.channel(0), est_ms.channel(0), scfg);
  out.stft_d.side = stft_distance(ref_ms.channel(1), est_ms.channel(1), scfg);
  out.mel_d.left = mel_distance(ref.channel(0), est.channel(0), mcfg);
  out.mel_d.right = mel_distance(ref.channel(1), est.channel(1), mcfg);
  out.mel_d.mid = mel_distance(ref_ms.channel(0), est_ms.channel(0), mcfg);
  out.mel_d.side = mel_distance(ref_ms.channel(1), est_ms.channel(1), mcfg);
  return out;
}

}  // namespace reenc
