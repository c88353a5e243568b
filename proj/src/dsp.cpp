// SPDX-License-Identifier: Apache-2.0
#include "reenc/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace reenc {

namespace {

constexpr double kKaiserBeta = 8.6;
constexpr int kZeroCrossingsPerSide = 64;

double bessel_i0(double x) {
  // Power series; converges quickly for the argument range used here.
  double sum = 1.0, term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

// Kernel value at offset tau (input samples from the interpolation point).
double sinc_kernel(double tau, double cutoff, double tau_max, double inv_i0_beta) {
  const double r = tau / tau_max;
  if (std::fabs(r) >= 1.0) return 0.0;
  const double window = bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) * inv_i0_beta;
  return 2.0 * cutoff * sinc(2.0 * cutoff * tau) * window;
}

Eigen::VectorXf resample_channel(const Eigen::Ref<const Eigen::RowVectorXf>& x, int in_rate, int out_rate,
                                 std::int64_t out_len) {
  const double cutoff = 0.5 * std::min(1.0, static_cast<double>(out_rate) / in_rate);
  const double tau_max = kZeroCrossingsPerSide / (2.0 * cutoff);
  const int half_width = static_cast<int>(std::ceil(tau_max));
  const double inv_i0_beta = 1.0 / bessel_i0(kKaiserBeta);

  const std::int64_t g = std::gcd<std::int64_t>(in_rate, out_rate);
  const std::int64_t phases = out_rate / g;  // distinct fractional offsets

  // Phase p covers output samples with (n * in_rate) % out_rate == p * g.
  // Precompute one normalized kernel per phase.
  std::vector<std::vector<double>> kernels(static_cast<std::size_t>(phases));
  for (std::int64_t p = 0; p < phases; ++p) {
    const double frac = static_cast<double>(p * g) / out_rate;
    auto& k = kernels[static_cast<std::size_t>(p)];
    k.resize(static_cast<std::size_t>(2 * half_width + 1));
    double sum = 0.0;
    for (int j = -half_width; j <= half_width; ++j) {
      const double v = sinc_kernel(static_cast<double>(j) - frac, cutoff, tau_max, inv_i0_beta);
      k[static_cast<std::size_t>(j + half_width)] = v;
      sum += v;
    }
    for (auto& v : k) v /= sum;  // exact unit DC gain per phase
  }

  const std::int64_t in_len = x.cols();
  Eigen::VectorXf y(out_len);
  for (std::int64_t n = 0; n < out_len; ++n) {
    const std::int64_t num = n * in_rate;
    const std::int64_t idx = num / out_rate;
    const std::int64_t phase = (num % out_rate) / g;
    const auto& k = kernels[static_cast<std::size_t>(phase)];
    double acc = 0.0;
    const std::int64_t k_lo = std::max<std::int64_t>(-half_width, -idx);
    const std::int64_t k_hi = std::min<std::int64_t>(half_width, in_len - 1 - idx);
    for (std::int64_t j = k_lo; j <= k_hi; ++j)
      acc += static_cast<double>(x(idx + j)) * k[static_cast<std::size_t>(j + half_width)];
    y(n) = static_cast<float>(acc);
  }
  return y;
}

}  // namespace

AudioBuffer resample_sinc(const AudioBuffer& x, int target_rate_hz) {
  if (target_rate_hz <= 0) throw ValueError("resample_sinc: target rate must be positive");
  if (!is_supported_rate(target_rate_hz))
    throw ValueError("resample_sinc: unsupported target rate " + std::to_string(target_rate_hz));
  if (target_rate_hz == x.sample_rate_hz()) return x;

  const std::int64_t in_len = x.length();
  const std::int64_t out_len =
      (in_len * target_rate_hz + x.sample_rate_hz() / 2) / x.sample_rate_hz();
  MatrixF out(x.channels(), out_len);
  for (int c = 0; c < x.channels(); ++c)
    out.row(c) = resample_channel(x.samples().row(c), x.sample_rate_hz(), target_rate_hz, out_len).transpose();
  return AudioBuffer(std::move(out), target_rate_hz);
}

namespace dsp_detail {

std::vector<double> design_lowpass(double cutoff_hz, int sample_rate_hz, int taps, const std::string& window) {
  if (taps < 3 || taps % 2 == 0) throw ValueError("band_split: filter_taps must be odd and >= 3");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= 0.5 * sample_rate_hz)
    throw ValueError("band_split: cutoff must lie strictly below Nyquist (" +
                     std::to_string(0.5 * sample_rate_hz) + " Hz)");

  const double f = cutoff_hz / sample_rate_hz;  // cycles per sample
  const int mid = (taps - 1) / 2;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    const double t = static_cast<double>(i - mid);
    double w;
    const double phase = 2.0 * M_PI * i / (taps - 1);
    if (window == "hann") {
      w = 0.5 - 0.5 * std::cos(phase);
    } else if (window == "hamming") {
      w = 0.54 - 0.46 * std::cos(phase);
    } else if (window == "blackman") {
      w = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    } else {
      throw ValueError("band_split: unknown window '" + window + "'");
    }
    h[static_cast<std::size_t>(i)] = 2.0 * f * sinc(2.0 * f * t) * w;
    sum += h[static_cast<std::size_t>(i)];
  }
  for (auto& v : h) v /= sum;
  return h;
}

}  // namespace dsp_detail

std::pair<AudioBuffer, AudioBuffer> band_split(const AudioBuffer& x, const BandSplitConfig& cfg) {
  const auto h = dsp_detail::design_lowpass(cfg.cutoff_hz, x.sample_rate_hz(), cfg.filter_taps, cfg.window);
  const int taps = cfg.filter_taps;
  const int delay = (taps - 1) / 2;
  const std::int64_t len = x.length();

  MatrixF low(x.channels(), len);
  for (int c = 0; c < x.channels(); ++c) {
    for (std::int64_t t = 0; t < len; ++t) {
      // low[t] = full convolution evaluated at t + delay (group delay removed)
      double acc = 0.0;
      for (int i = 0; i < taps; ++i) {
        const std::int64_t src = t + delay - i;
        if (src >= 0 && src < len) acc += h[static_cast<std::size_t>(i)] * x.samples()(c, src);
      }
      low(c, t) = static_cast<float>(acc);
    }
  }
  MatrixF high = x.samples() - low;
  return {AudioBuffer(std::move(low), x.sample_rate_hz()), AudioBuffer(std::move(high), x.sample_rate_hz())};
}

AudioBuffer to_mid_side(const AudioBuffer& stereo) {
  if (stereo.channels() != 2) throw DimensionError("to_mid_side: input must be stereo");
  MatrixF ms(2, stereo.length());
  ms.row(0) = 0.5f * (stereo.samples().row(0) + stereo.samples().row(1));
  ms.row(1) = 0.5f * (stereo.samples().row(0) - stereo.samples().row(1));
  return AudioBuffer(std::move(ms), stereo.sample_rate_hz());
}

AudioBuffer from_mid_side(const AudioBuffer& mid_side) {
  if (mid_side.channels() != 2) throw DimensionError("from_mid_side: input must have 2 channels");
  MatrixF lr(2, mid_side.length());
  lr.row(0) = mid_side.samples().row(0) + mid_side.samples().row(1);
  lr.row(1) = mid_side.samples().row(0) - mid_side.samples().row(1);
  return AudioBuffer(std::move(lr), mid_side.sample_rate_hz());
}

double channel_log_energy_ratio(const AudioBuffer& stereo) {
  if (stereo.channels() != 2) throw DimensionError("channel_log_energy_ratio: input must be stereo");
  constexpr double eps = 1e-12;
  const double e_left = stereo.samples().row(0).cast<double>().squaredNorm();
  const double e_right = stereo.samples().row(1).cast<double>().squaredNorm();
  return std::log((e_left + eps) / (e_right + eps));
}

std::vector<AudioBuffer> chunk_audio(const AudioBuffer& x, double duration_s, double hop_s) {
  if (!(duration_s > 0.0)) throw ValueError("chunk_audio: duration must be positive");
  if (!(hop_s > 0.0)) throw ValueError("chunk_audio: hop must be positive");
  const std::int64_t chunk_len = std::llround(duration_s * x.sample_rate_hz());
  const std::int64_t hop = std::llround(hop_s * x.sample_rate_hz());
  if (chunk_len < 1 || hop < 1) throw ValueError("chunk_audio: duration and hop must span at least one sample");

  std::vector<AudioBuffer> chunks;
  for (std::int64_t start = 0; start + chunk_len <= x.length(); start += hop)
    chunks.emplace_back(MatrixF(x.samples().middleCols(start, chunk_len)), x.sample_rate_hz());
  return chunks;
}

}  // namespace reenc
