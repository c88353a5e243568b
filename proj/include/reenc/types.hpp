// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "reenc/error.hpp"

namespace reenc {

using MatrixF = Eigen::MatrixXf;

inline bool all_finite(const Eigen::Ref<const MatrixF>& m) {
  return m.allFinite();
}

constexpr std::array<int, 9> kSupportedSampleRates = {4000,  8000,  11025, 16000, 22050,
                                                      24000, 32000, 44100, 48000};

inline bool is_supported_rate(int rate_hz) {
  for (int r : kSupportedSampleRates)
    if (r == rate_hz) return true;
  return false;
}

// A C x T latent sequence: C channels of latent features at a low frame rate.
// The universal currency of the system. Immutable after construction.
class LatentSequence {
 public:
  LatentSequence(MatrixF data, double frame_rate_hz) : data_(std::move(data)), frame_rate_hz_(frame_rate_hz) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw DimensionError("LatentSequence: channels and frames must be positive, got " +
                           std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
    if (!(frame_rate_hz_ > 0.0))
      throw ValueError("LatentSequence: frame_rate_hz must be > 0, got " + std::to_string(frame_rate_hz_));
    if (!all_finite(data_)) throw ValueError("LatentSequence: data contains non-finite values");
  }

  int channels() const { return static_cast<int>(data_.rows()); }
  int frames() const { return static_cast<int>(data_.cols()); }
  double frame_rate_hz() const { return frame_rate_hz_; }
  const MatrixF& data() const { return data_; }

  bool same_layout(const LatentSequence& other) const {
    return channels() == other.channels() && frames() == other.frames() &&
           frame_rate_hz() == other.frame_rate_hz();
  }

 private:
  MatrixF data_;
  double frame_rate_hz_;
};

// S parallel latent streams sharing (C, T, frame rate). S = 2 for stereo,
// stream 0 = left, stream 1 = right.
class StackedLatent {
 public:
  StackedLatent(std::vector<MatrixF> streams, double frame_rate_hz)
      : streams_(std::move(streams)), frame_rate_hz_(frame_rate_hz) {
    if (streams_.empty()) throw DimensionError("StackedLatent: needs at least one stream");
    const auto rows = streams_[0].rows();
    const auto cols = streams_[0].cols();
    if (rows < 1 || cols < 1) throw DimensionError("StackedLatent: channels and frames must be positive");
    if (!(frame_rate_hz_ > 0.0)) throw ValueError("StackedLatent: frame_rate_hz must be > 0");
    for (const auto& s : streams_) {
      if (s.rows() != rows || s.cols() != cols)
        throw DimensionError("StackedLatent: all streams must share channels x frames");
      if (!all_finite(s)) throw ValueError("StackedLatent: data contains non-finite values");
    }
  }

  int streams() const { return static_cast<int>(streams_.size()); }
  int channels() const { return static_cast<int>(streams_[0].rows()); }
  int frames() const { return static_cast<int>(streams_[0].cols()); }
  double frame_rate_hz() const { return frame_rate_hz_; }
  const MatrixF& stream(int s) const { return streams_.at(static_cast<std::size_t>(s)); }

  // Streams stacked along channels into a (S*C) x T matrix; stream s occupies
  // rows [s*C, (s+1)*C).
  MatrixF as_stacked_matrix() const {
    MatrixF out(static_cast<Eigen::Index>(streams()) * channels(), frames());
    for (int s = 0; s < streams(); ++s) out.middleRows(s * channels(), channels()) = streams_[static_cast<std::size_t>(s)];
    return out;
  }

 private:
  std::vector<MatrixF> streams_;
  double frame_rate_hz_;
};

// Multichannel waveform. Rows are channels, columns are samples.
class AudioBuffer {
 public:
  AudioBuffer(MatrixF samples, int sample_rate_hz)
      : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (!is_supported_rate(sample_rate_hz_))
      throw ValueError("AudioBuffer: unsupported sample rate " + std::to_string(sample_rate_hz_));
    if (samples_.rows() < 1 || samples_.rows() > 2)
      throw DimensionError("AudioBuffer: channels must be 1 or 2, got " + std::to_string(samples_.rows()));
    if (!all_finite(samples_)) throw ValueError("AudioBuffer: samples contain non-finite values");
  }

  int sample_rate_hz() const { return sample_rate_hz_; }
  int channels() const { return static_cast<int>(samples_.rows()); }
  std::int64_t length() const { return samples_.cols(); }
  double duration_seconds() const { return static_cast<double>(length()) / sample_rate_hz_; }
  const MatrixF& samples() const { return samples_; }

  AudioBuffer channel(int c) const {
    if (c < 0 || c >= channels()) throw DimensionError("AudioBuffer: channel index out of range");
    return AudioBuffer(samples_.row(c), sample_rate_hz_);
  }

 private:
  MatrixF samples_;
  int sample_rate_hz_;
};

// Order convention is (left, right).
inline StackedLatent stack_streams(const LatentSequence& left, const LatentSequence& right) {
  if (!left.same_layout(right))
    throw DimensionError("stack_streams: left and right must share channels, frames and frame rate");
  return StackedLatent({left.data(), right.data()}, left.frame_rate_hz());
}

inline std::pair<LatentSequence, LatentSequence> split_streams(const StackedLatent& s) {
  if (s.streams() != 2)
    throw DimensionError("split_streams: expected 2 streams, got " + std::to_string(s.streams()));
  return {LatentSequence(s.stream(0), s.frame_rate_hz()), LatentSequence(s.stream(1), s.frame_rate_hz())};
}

}  // namespace reenc
