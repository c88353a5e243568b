// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "reenc/types.hpp"

namespace reenc {

// Complementary low/high split around cutoff_hz. The lowpass is a windowed-sinc
// FIR; taps must be odd so the group delay is an integer and can be compensated
// exactly. The high band is formed as (delay-compensated input - low band), so
// low + high reproduces the input sample-exactly.
struct BandSplitConfig {
  double cutoff_hz = 11025.0;
  int filter_taps = 255;
  std::string window = "hann";  // hann | hamming | blackman
};

// Windowed-sinc resampler: Kaiser window, beta 8.6, 64 zero crossings per side.
// Rates must be in the supported set. Per-phase kernel normalization makes DC
// gain exactly one, so the operation stays linear in the input.
AudioBuffer resample_sinc(const AudioBuffer& x, int target_rate_hz);

std::pair<AudioBuffer, AudioBuffer> band_split(const AudioBuffer& x, const BandSplitConfig& cfg);

// mid = (L+R)/2, side = (L-R)/2. Channel 0 of the result is mid, 1 is side.
AudioBuffer to_mid_side(const AudioBuffer& stereo);
AudioBuffer from_mid_side(const AudioBuffer& mid_side);

// ln((E_left + eps) / (E_right + eps)) with E = sum of squares, eps = 1e-12.
double channel_log_energy_ratio(const AudioBuffer& stereo);

// Fixed-length chunks with sample-exact boundaries; the final partial chunk is
// dropped. An audio shorter than one chunk yields an empty sequence.
std::vector<AudioBuffer> chunk_audio(const AudioBuffer& x, double duration_s, double hop_s);

namespace dsp_detail {
// Lowpass FIR design shared by band_split and tests.
std::vector<double> design_lowpass(double cutoff_hz, int sample_rate_hz, int taps, const std::string& window);
}  // namespace dsp_detail

}  // namespace reenc
