// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "reenc/dsp.hpp"
#include "reenc/rng.hpp"

using namespace reenc;

namespace {

AudioBuffer tone(double freq, int rate, double seconds, double amp = 0.5) {
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * rate));
  MatrixF m(1, n);
  for (Eigen::Index i = 0; i < n; ++i)
    m(0, i) = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * freq * i / rate));
  return AudioBuffer(std::move(m), rate);
}

AudioBuffer noise(int channels, int rate, double seconds, Rng& rng, double amp = 0.3) {
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * rate));
  MatrixF m(channels, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(amp * rng.gauss());
  return AudioBuffer(std::move(m), rate);
}

// Goertzel-style single-bin power at freq, rectangular window over the middle
// of the signal (edges dropped to ignore filter transients).
double band_power(const AudioBuffer& x, double freq, double half_width_hz) {
  const Eigen::Index skip = x.length() / 8;
  const Eigen::Index n = x.length() - 2 * skip;
  double acc = 0.0;
  int bins = 0;
  const double df = static_cast<double>(x.sample_rate_hz()) / n;
  for (double f = freq - half_width_hz; f <= freq + half_width_hz; f += df) {
    if (f <= 0.0 || f >= x.sample_rate_hz() / 2.0) continue;
    double re = 0.0, im = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ph = 2.0 * std::numbers::pi * f * i / x.sample_rate_hz();
      re += x.samples()(0, skip + i) * std::cos(ph);
      im += x.samples()(0, skip + i) * std::sin(ph);
    }
    acc += (re * re + im * im) / (n * n);
    ++bins;
  }
  return bins ? acc / bins : 0.0;
}

}  // namespace

TEST_CASE("resampler: DC gain exactly one in both directions") {
  MatrixF m = MatrixF::Constant(1, 8000, 0.25f);
  const AudioBuffer dc(m, 8000);
  for (const int target : {4000, 16000}) {
    const AudioBuffer y = resample_sinc(dc, target);
    CHECK(y.sample_rate_hz() == target);
    const Eigen::Index skip = y.length() / 8;
    for (Eigen::Index i = skip; i < y.length() - skip; ++i)
      CHECK(y.samples()(0, i) == doctest::Approx(0.25).epsilon(1e-6));
  }
}

TEST_CASE("resampler: passband tone preserved, images below -60 dB") {
  const AudioBuffer x = tone(1000.0, 8000, 1.0);
  const AudioBuffer up = resample_sinc(x, 16000);

  const double signal = band_power(up, 1000.0, 20.0);
  CHECK(signal > 0.0);
  // The naive zero-stuffing image of a 1 kHz tone at 2x sits at 15 kHz.
  const double image = band_power(up, 15000.0, 20.0);
  CHECK(10.0 * std::log10(image / signal) < -60.0);

  // Round trip back to the original rate stays close in the passband.
  const AudioBuffer back = resample_sinc(up, 8000);
  const Eigen::Index n = std::min(back.length(), x.length());
  const Eigen::Index skip = n / 8;
  double err = 0.0, ref = 0.0;
  for (Eigen::Index i = skip; i < n - skip; ++i) {
    const double d = back.samples()(0, i) - x.samples()(0, i);
    err += d * d;
    ref += x.samples()(0, i) * x.samples()(0, i);
  }
  CHECK(std::sqrt(err / ref) < 1e-3);
}

TEST_CASE("resampler rejects unsupported rates") {
  const AudioBuffer x = tone(440.0, 8000, 0.1);
  CHECK_THROWS_AS(resample_sinc(x, 8001), ValueError);
}

TEST_CASE("band split: complementary to 1e-3 and band-selective") {
  Rng rng(4);
  const AudioBuffer x = noise(1, 8000, 1.0, rng);
  BandSplitConfig cfg;
  cfg.cutoff_hz = 2000.0;
  const auto [low, high] = band_split(x, cfg);
  CHECK(low.length() == x.length());
  CHECK(high.length() == x.length());
  float worst = 0.0f;
  for (Eigen::Index i = 0; i < x.length(); ++i)
    worst = std::max(worst, std::abs(low.samples()(0, i) + high.samples()(0, i) - x.samples()(0, i)));
  CHECK(worst < 1e-3f);

  // A 500 Hz tone lives in the low band, a 3500 Hz tone in the high band.
  const auto [lo_tone_low, lo_tone_high] = band_split(tone(500.0, 8000, 1.0), cfg);
  CHECK(band_power(lo_tone_high, 500.0, 20.0) / band_power(lo_tone_low, 500.0, 20.0) < 1e-4);
  const auto [hi_tone_low, hi_tone_high] = band_split(tone(3500.0, 8000, 1.0), cfg);
  CHECK(band_power(hi_tone_low, 3500.0, 20.0) / band_power(hi_tone_high, 3500.0, 20.0) < 1e-4);
}

TEST_CASE("mid/side: round trip under 1e-6 and ratio antisymmetry") {
  Rng rng(5);
  const AudioBuffer x = noise(2, 44100, 0.25, rng);
  const AudioBuffer ms = to_mid_side(x);
  const AudioBuffer back = from_mid_side(ms);
  CHECK((back.samples() - x.samples()).cwiseAbs().maxCoeff() < 1e-6f);

  MatrixF swapped(2, x.length());
  swapped.row(0) = x.samples().row(1);
  swapped.row(1) = x.samples().row(0);
  const AudioBuffer xs(swapped, 44100);
  CHECK(channel_log_energy_ratio(x) == doctest::Approx(-channel_log_energy_ratio(xs)).epsilon(1e-9));

  // Hard-panned signals give large-magnitude ratios of the right sign.
  MatrixF leftonly = MatrixF::Zero(2, 4096);
  leftonly.row(0) = x.samples().row(0).leftCols(4096);
  CHECK(channel_log_energy_ratio(AudioBuffer(leftonly, 44100)) > 10.0);
}

TEST_CASE("chunking: exact boundaries, final partial dropped") {
  Rng rng(6);
  const AudioBuffer x = noise(1, 8000, 1.3, rng);
  const auto chunks = chunk_audio(x, 0.5, 0.5);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].length() == 4000);
  CHECK((chunks[1].samples() - x.samples().block(0, 4000, 1, 4000)).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(chunk_audio(x, 2.0, 2.0).empty());
}
