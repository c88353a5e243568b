// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reenc/rng.hpp"
#include "reenc/types.hpp"

namespace reenc {

// Music-like test signals: a harmonic stack with vibrato and an attack/decay
// envelope over a bed of lowpass-filtered noise. The partial amplitudes follow
// a power-law rolloff, so the upper spectrum is predictable from the lower
// one; that makes bandwidth extension learnable on this corpus by design.
struct SynthSpec {
  int sample_rate = 8000;
  double duration_seconds = 2.0;
  double f0_min = 220.0;
  double f0_max = 440.0;
  int max_partials = 16;
  double max_partial_hz_frac = 0.45;  // cap partials below this fraction of sr
  double rolloff_min = 0.5;           // amplitude of partial k is k^-rolloff
  double rolloff_max = 1.2;
  double vibrato_hz_min = 4.0;
  double vibrato_hz_max = 6.5;
  double vibrato_depth = 0.004;       // relative frequency excursion
  double noise_level = 0.03;          // relative to tone RMS
  double noise_cutoff_min_hz = 400.0;
  double noise_cutoff_max_hz = 3000.0;
  double rms_min = 0.08;
  double rms_max = 0.20;
  // Stereo: equal-power pan angle in (0, pi/2), kept away from hard edges.
  double pan_margin = 0.15;

  void validate() const;
};

// One mono clip. Consumes a deterministic number of draws per call only in the
// sense that the stream is advanced; callers wanting clip-level independence
// should fork the generator per clip.
AudioBuffer synth_mono_clip(const SynthSpec& spec, Rng& rng);

// One stereo clip: an equal-power panned mono source plus independent
// per-channel noise beds. The pan angle is the main spatial control axis.
AudioBuffer synth_stereo_clip(const SynthSpec& spec, Rng& rng);

// Deterministic corpus: clip i is generated from fork(seed_rng, i), so the
// corpus is stable under count changes (a prefix is always reproduced).
std::vector<AudioBuffer> synth_corpus(const SynthSpec& spec, int count, std::uint64_t seed, int channels);

// Renders a corpus into dir as 16-bit WAVs named clip_0000.wav, ... and
// returns the paths.
std::vector<std::string> write_corpus(const SynthSpec& spec, int count, std::uint64_t seed, int channels,
                                      const std::string& dir);

}  // namespace reenc
