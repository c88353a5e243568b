// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "reenc/dsp.hpp"
#include "reenc/types.hpp"

namespace reenc {

struct StftResolution {
  int fft_size;
  int window_length;
  int hop;
};

// Multi-resolution STFT distance: spectral convergence plus log-magnitude L1,
// averaged over resolutions. The first argument is the reference; the SC term
// normalizes by its energy, so the metric is not symmetric.
struct STFTDistanceConfig {
  std::vector<StftResolution> resolutions = {{512, 240, 50}, {1024, 600, 120}, {2048, 1200, 240}};
  double log_floor = 1e-5;

  void validate() const;
};

struct StftTerms {
  double spectral_convergence;
  double log_magnitude;
};

struct StftDistanceDetail {
  std::vector<StftTerms> per_resolution;
  double value;  // mean over resolutions of (sc + log_magnitude)
};

StftDistanceDetail stft_distance_detail(const AudioBuffer& ref, const AudioBuffer& est,
                                        const STFTDistanceConfig& cfg = {});
double stft_distance(const AudioBuffer& ref, const AudioBuffer& est, const STFTDistanceConfig& cfg = {});

struct MelDistanceConfig {
  int fft_size = 2048;
  int hop = 512;
  int mel_bins = 128;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0 selects Nyquist
  double log_floor = 1e-5;

  void validate() const;
};

double mel_distance(const AudioBuffer& ref, const AudioBuffer& est, const MelDistanceConfig& cfg = {});

// HTK-style triangular filterbank, rows = mel bins, cols = fft_size/2 + 1.
// Exposed for the oracle tests. Throws if any row sums to zero.
Eigen::MatrixXd mel_filterbank(const MelDistanceConfig& cfg, int sample_rate_hz);

// Magnitude spectrogram used by both metrics: frames of window_length samples
// at the given hop (no centering), Hann-windowed, zero-padded to fft_size.
// Rows are frequency bins 0..fft_size/2, columns are frames.
Eigen::MatrixXd magnitude_spectrogram(const AudioBuffer& mono, int fft_size, int window_length, int hop);

struct BandedValues {
  double full;
  double low;
  double high;
};

struct BandedMetrics {
  BandedValues stft_d;
  BandedValues mel_d;
};

// Both signals pass through the same low/high filters before each banded
// metric; the full-band figures use the unfiltered signals.
BandedMetrics banded_metrics(const AudioBuffer& ref, const AudioBuffer& est, const BandSplitConfig& split,
                             const STFTDistanceConfig& scfg = {}, const MelDistanceConfig& mcfg = {});

struct StereoValues {
  double left;
  double right;
  double mid;
  double side;
};

struct StereoMetrics {
  StereoValues stft_d;
  StereoValues mel_d;
};

StereoMetrics stereo_metrics(const AudioBuffer& ref, const AudioBuffer& est,
                             const STFTDistanceConfig& scfg = {}, const MelDistanceConfig& mcfg = {});

}  // namespace reenc
