// SPDX-License-Identifier: Apache-2.0
#include "reenc/synth.hpp"

#include <cmath>
#include <filesystem>

#include "reenc/wav.hpp"

namespace reenc {

void SynthSpec::validate() const {
  if (!is_supported_rate(sample_rate)) throw ConfigError("synth: unsupported sample rate");
  if (duration_seconds <= 0) throw ConfigError("synth: duration must be positive");
  if (!(0 < f0_min && f0_min <= f0_max)) throw ConfigError("synth: need 0 < f0_min <= f0_max");
  if (f0_max >= 0.5 * sample_rate) throw ConfigError("synth: f0_max above Nyquist");
  if (max_partials < 1) throw ConfigError("synth: max_partials must be >= 1");
  if (!(0 < max_partial_hz_frac && max_partial_hz_frac < 0.5))
    throw ConfigError("synth: max_partial_hz_frac must be in (0, 0.5)");
  if (rolloff_min > rolloff_max) throw ConfigError("synth: rolloff range inverted");
  if (noise_level < 0) throw ConfigError("synth: noise_level must be non-negative");
  if (!(0 < rms_min && rms_min <= rms_max)) throw ConfigError("synth: rms range invalid");
  if (!(0 < pan_margin && pan_margin < M_PI / 4)) throw ConfigError("synth: pan_margin out of range");
}

namespace {

struct ToneDraw {
  double f0, rolloff, vib_hz, vib_depth, attack_s, decay_s, noise_cut, rms;
  std::vector<double> phases;
  int partials;
};

ToneDraw draw_tone(const SynthSpec& spec, Rng& rng) {
  ToneDraw d;
  d.f0 = rng.uniform(spec.f0_min, spec.f0_max);
  d.rolloff = rng.uniform(spec.rolloff_min, spec.rolloff_max);
  d.vib_hz = rng.uniform(spec.vibrato_hz_min, spec.vibrato_hz_max);
  d.vib_depth = spec.vibrato_depth * rng.uniform(0.5, 1.0);
  d.attack_s = rng.uniform(0.005, 0.04);
  d.decay_s = rng.uniform(0.4, 1.5);
  d.noise_cut = rng.uniform(spec.noise_cutoff_min_hz, spec.noise_cutoff_max_hz);
  d.rms = rng.uniform(spec.rms_min, spec.rms_max);
  const double fmax = spec.max_partial_hz_frac * spec.sample_rate;
  d.partials = std::min(spec.max_partials, static_cast<int>(fmax / d.f0));
  if (d.partials < 1) d.partials = 1;
  d.phases.resize(static_cast<std::size_t>(d.partials));
  for (auto& p : d.phases) p = rng.uniform(0.0, 2.0 * M_PI);
  return d;
}

// Rendered at 64-bit then narrowed once; the envelope and vibrato phase are
// integrated sample by sample so partials stay exactly harmonic.
Eigen::VectorXd render_tone(const SynthSpec& spec, const ToneDraw& d) {
  const auto n = static_cast<Eigen::Index>(std::llround(spec.duration_seconds * spec.sample_rate));
  const double dt = 1.0 / spec.sample_rate;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double phase = 0.0;  // fundamental phase, radians
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double f = d.f0 * (1.0 + d.vib_depth * std::sin(2.0 * M_PI * d.vib_hz * t));
    phase += 2.0 * M_PI * f * dt;
    const double env =
        std::min(1.0, t / d.attack_s) * (0.15 + 0.85 * std::exp(-t / d.decay_s));
    double s = 0.0;
    for (int k = 1; k <= d.partials; ++k)
      s += std::pow(static_cast<double>(k), -d.rolloff) *
           std::sin(static_cast<double>(k) * phase + d.phases[static_cast<std::size_t>(k - 1)]);
    x[i] = env * s;
  }
  return x;
}

// One-pole lowpass noise bed, RMS-normalized to `level`.
Eigen::VectorXd render_noise(const SynthSpec& spec, double cutoff_hz, double level, Eigen::Index n,
                             Rng& rng) {
  Eigen::VectorXd x(n);
  const double a = std::exp(-2.0 * M_PI * cutoff_hz / spec.sample_rate);
  double state = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    state = a * state + (1.0 - a) * rng.gauss();
    x[i] = state;
  }
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(n));
  if (rms > 0) x *= level / rms;
  return x;
}

void set_rms(Eigen::VectorXd& x, double target) {
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  if (rms > 0) x *= target / rms;
  // keep strict headroom for 16-bit quantization
  const double peak = x.cwiseAbs().maxCoeff();
  if (peak > 0.95) x *= 0.95 / peak;
}

Eigen::VectorXd render_mono(const SynthSpec& spec, Rng& rng) {
  const ToneDraw d = draw_tone(spec, rng);
  Eigen::VectorXd x = render_tone(spec, d);
  const double tone_rms = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  x += render_noise(spec, d.noise_cut, spec.noise_level * std::max(tone_rms, 1e-9), x.size(), rng);
  set_rms(x, d.rms);
  return x;
}

}  // namespace

AudioBuffer synth_mono_clip(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  const Eigen::VectorXd x = render_mono(spec, rng);
  MatrixF m(1, x.size());
  m.row(0) = x.transpose().cast<float>();
  return AudioBuffer(std::move(m), spec.sample_rate);
}

AudioBuffer synth_stereo_clip(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  const ToneDraw d = draw_tone(spec, rng);
  Eigen::VectorXd src = render_tone(spec, d);
  const double theta = rng.uniform(spec.pan_margin, M_PI / 2 - spec.pan_margin);
  const double tone_rms = std::sqrt(src.squaredNorm() / static_cast<double>(src.size()));
  const double bed = spec.noise_level * std::max(tone_rms, 1e-9);
  Eigen::VectorXd left = std::cos(theta) * src + render_noise(spec, d.noise_cut, bed, src.size(), rng);
  Eigen::VectorXd right = std::sin(theta) * src + render_noise(spec, d.noise_cut, bed, src.size(), rng);
  // shared gain so the L/R energy ratio set by the pan angle survives
  Eigen::VectorXd mid = 0.5 * (left + right);
  const double mid_rms = std::sqrt(mid.squaredNorm() / static_cast<double>(mid.size()));
  const double gain = d.rms / std::max(mid_rms, 1e-12);
  left *= gain;
  right *= gain;
  const double peak = std::max(left.cwiseAbs().maxCoeff(), right.cwiseAbs().maxCoeff());
  if (peak > 0.95) {
    left *= 0.95 / peak;
    right *= 0.95 / peak;
  }
  MatrixF m(2, src.size());
  m.row(0) = left.transpose().cast<float>();
  m.row(1) = right.transpose().cast<float>();
  return AudioBuffer(std::move(m), spec.sample_rate);
}

std::vector<AudioBuffer> synth_corpus(const SynthSpec& spec, int count, std::uint64_t seed, int channels) {
  if (count < 1) throw ValueError("synth: corpus count must be >= 1");
  if (channels != 1 && channels != 2) throw ValueError("synth: channels must be 1 or 2");
  Rng root(seed);
  std::vector<AudioBuffer> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng clip = root.fork(static_cast<std::uint64_t>(i) + 1);
    out.push_back(channels == 1 ? synth_mono_clip(spec, clip) : synth_stereo_clip(spec, clip));
  }
  return out;
}

std::vector<std::string> write_corpus(const SynthSpec& spec, int count, std::uint64_t seed, int channels,
                                      const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto clips = synth_corpus(spec, count, seed, channels);
  std::vector<std::string> paths;
  paths.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04zu.wav", i);
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_wav(path, clips[i]);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace reenc
