// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance harness: prints one PASS/FAIL line per criterion and
// exits nonzero if any fail. Optional argv selects a subset, e.g.
// ./acceptance 8 9 10.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reenc/counting.hpp"
#include "reenc/dsp.hpp"
#include "reenc/experiments.hpp"
#include "reenc/latent_io.hpp"
#include "reenc/losses.hpp"
#include "reenc/metrics.hpp"
#include "reenc/model/discriminator.hpp"
#include "reenc/model/f_theta.hpp"
#include "reenc/model/g_phi.hpp"
#include "reenc/synth.hpp"
#include "reenc/train.hpp"
#include "support.hpp"

using namespace reenc;
using nn::Mat;
namespace fs = std::filesystem;

namespace {

std::string work_dir() {
  static const std::string dir = [] {
    const auto d = (fs::temp_directory_path() / "reenc_acceptance").string();
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void note(const std::string& line) {
  std::cout << "  " << line << "\n";
  std::cout.flush();
}

Mat<double> random_mat(int r, int c, Rng& rng, double scale = 1.0) {
  Mat<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.gauss();
  return m;
}

AudioBuffer noise_clip(int channels, Eigen::Index len, int rate, Rng& rng, double amp = 0.4) {
  MatrixF m(channels, len);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(amp * rng.gauss());
  return AudioBuffer(std::move(m), rate);
}

// ---- criterion 1: parameter counts ----------------------------------------

bool criterion_params() {
  FTheta<float> s(ModelSpec::preset_s_bwe(64));
  FTheta<float> m(ModelSpec::preset_m_bwe(64));
  FTheta<float> m2s_f(ModelSpec::preset_m2s(64, 64));
  GPhi<float> m2s_g(ConditioningEncoderSpec::preset_full(64, 64));

  const std::int64_t n_s = count_params(s);
  const std::int64_t n_m = count_params(m);
  const std::int64_t n_m2s = count_params(m2s_f, m2s_g);
  note("S = " + std::to_string(n_s) + " (target 4.3M), M = " + std::to_string(n_m) +
       " (target 19.1M), M2S = " + std::to_string(n_m2s) + " (target 24.8M)");

  auto within = [](std::int64_t n, double target) {
    return std::abs(static_cast<double>(n) / target - 1.0) <= 0.10;
  };
  return within(n_s, 4.3e6) && within(n_m, 19.1e6) && within(n_m2s, 24.8e6);
}

// ---- criterion 2: FLOPs ----------------------------------------------------

bool criterion_flops() {
  const double rate = 44100.0 / 1024.0;
  const double fs = count_flops(ModelSpec::preset_s_bwe(64), 1.0, rate);
  const double fm = count_flops(ModelSpec::preset_m_bwe(64), 1.0, rate);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "S = %.6f GFLOPs (target 0.4), M = %.6f GFLOPs (target 1.6)",
                fs / 1e9, fm / 1e9);
  note(buf);
  bool ok = std::abs(fs / 0.4e9 - 1.0) <= 0.15 && std::abs(fm / 1.6e9 - 1.0) <= 0.15;

  for (const double sec : {0.25, 2.0, 3.5, 10.0, 64.0}) {
    const double direct = count_flops(ModelSpec::preset_m_bwe(64), sec, rate);
    ok = ok && std::abs(direct - sec * fm) <= 1e-12 * std::abs(direct);
  }
  const double a = count_flops(ModelSpec::preset_s_bwe(64), 1.5, rate);
  const double b = count_flops(ModelSpec::preset_s_bwe(64), 2.5, rate);
  const double c = count_flops(ModelSpec::preset_s_bwe(64), 4.0, rate);
  ok = ok && std::abs(a + b - c) <= 1e-12 * c;
  note(std::string("duration linearity: ") + (ok ? "exact" : "violated"));
  return ok;
}

// ---- criterion 3: loss identities ------------------------------------------

bool criterion_loss_identities() {
  const double tol = 1e-9;
  bool ok = true;
  Rng rng(31);

  const Mat<double> z = random_mat(6, 9, rng);
  ok = ok && std::abs(rec_loss<double>(z, z)) <= tol;

  const struct { double s, want; } gen_cases[] = {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.25}};
  for (const auto& g : gen_cases)
    ok = ok && std::abs(gen_adv_loss<double>(Mat<double>::Constant(4, 7, g.s)) - g.want) <= tol;

  const struct { double r, f, want; } disc_cases[] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 2.0}, {0.5, 0.5, 0.5}};
  for (const auto& d : disc_cases)
    ok = ok && std::abs(disc_loss<double>(Mat<double>::Constant(4, 7, d.r),
                                          Mat<double>::Constant(4, 7, d.f)) -
                        d.want) <= tol;

  const int dim = 12;
  const Mat<double> zero = Mat<double>::Zero(dim, 1);
  const Mat<double> one = Mat<double>::Ones(dim, 1);
  ok = ok && std::abs(kl_loss<double>(zero, zero)) <= tol;
  ok = ok && std::abs(kl_loss<double>(one, zero) / dim - 0.5) <= tol;

  note(std::string("rec/gen_adv/disc/kl canonical values: ") + (ok ? "all within 1e-9" : "MISMATCH"));
  return ok;
}

// ---- criterion 4: gradients vs finite differences --------------------------

bool criterion_gradients() {
  bool ok = true;

  {  // conditioned predictor, parameters and condition input
    ModelSpec spec;
    spec.variant = "custom";
    spec.num_blocks = 2;
    spec.hidden_dim = 8;
    spec.expansion = 2;
    spec.latent_channels_in = 4;
    spec.latent_channels_out = 4;
    spec.output_streams = 2;
    spec.conditioned = true;
    spec.condition_dim = 3;
    FTheta<double> f(spec);
    Rng rng(41);
    auto params = f.params();
    testsup::randomize_params(params, rng, 0.3);
    Mat<double> z = random_mat(4, 5, rng);
    Mat<double> c = random_mat(3, 1, rng);
    Mat<double> tgt = random_mat(8, 5, rng);
    auto eval = [&]() { return static_cast<double>(rec_loss<double>(f.forward(z, &c), tgt)); };
    nn::zero_grads(params);
    auto [v, dy] = rec_loss_grad<double>(f.forward(z, &c), tgt);
    Mat<double> dc = Mat<double>::Zero(3, 1);
    f.backward(dy, &dc);
    Rng probe(17);
    const auto res = testsup::probe_params(params, eval, probe, 120);
    note("F: " + std::to_string(res.probes) + " probes, worst rel " + std::to_string(res.worst_rel) +
         " at " + res.worst_name);
    ok = ok && res.probes >= 100 && res.failures == 0;
  }

  {  // conditioning encoder through the reparameterization, plus KL
    ConditioningEncoderSpec spec;
    spec.num_blocks = 2;
    spec.hidden_dim = 8;
    spec.input_channels = 8;
    spec.output_dim = 3;
    GPhi<double> g(spec);
    Rng rng(52);
    auto params = g.params();
    testsup::randomize_params(params, rng, 0.3);
    Mat<double> z = random_mat(8, 6, rng);
    Mat<double> eps = random_mat(3, 1, rng);
    Mat<double> a = random_mat(3, 1, rng);
    auto eval = [&]() {
      auto post = g.forward(z);
      Mat<double> c = post.mu + post.log_sigma.array().exp().matrix().cwiseProduct(eps);
      return (a.array() * c.array()).sum() + kl_loss<double>(post.mu, post.log_sigma);
    };
    nn::zero_grads(params);
    auto post = g.forward(z);
    Mat<double> sigma = post.log_sigma.array().exp();
    auto kl = kl_loss_grad<double>(post.mu, post.log_sigma);
    Mat<double> dmu = a + kl.d_mu;
    Mat<double> dls = a.cwiseProduct(eps).cwiseProduct(sigma) + kl.d_log_sigma;
    g.backward(dmu, dls);
    Rng probe(18);
    const auto res = testsup::probe_params(params, eval, probe, 120);
    note("G: " + std::to_string(res.probes) + " probes, worst rel " + std::to_string(res.worst_rel));
    ok = ok && res.probes >= 100 && res.failures == 0;
  }

  {  // discriminator parameters through score map and all feature taps
    DiscriminatorSpec spec;
    spec.internal_channels = 4;
    Discriminator<double> d(spec);
    Rng rng(63);
    auto params = d.params();
    testsup::randomize_params(params, rng, 0.2);
    Mat<double> z = random_mat(5, 23, rng);
    std::vector<Mat<double>> probes_m;
    {
      auto out = d.forward(z);
      for (const auto& f : out.features)
        probes_m.push_back(random_mat(static_cast<int>(f.rows()), static_cast<int>(f.cols()), rng, 0.5));
    }
    auto eval = [&]() {
      auto out = d.forward(z);
      double l = gen_adv_loss<double>(out.score);
      for (std::size_t i = 0; i < out.features.size(); ++i)
        l += (out.features[i].array() * probes_m[i].array()).sum();
      return l;
    };
    nn::zero_grads(params);
    auto out = d.forward(z);
    auto [adv, dscore] = gen_adv_loss_grad<double>(out.score);
    std::vector<Mat<double>> dfeat = probes_m;
    const int sw = static_cast<int>(out.score.cols());
    for (int r = 0; r < out.score.rows(); ++r)
      for (int c = 0; c < sw; ++c) dfeat[5](0, r * sw + c) += dscore(r, c);
    d.backward(dfeat);
    Rng probe(19);
    const auto res = testsup::probe_params(params, eval, probe, 120);
    note("D: " + std::to_string(res.probes) + " probes, worst rel " + std::to_string(res.worst_rel));
    ok = ok && res.probes >= 100 && res.failures == 0;
  }

  {  // every loss: analytic element gradients vs central differences
    Rng rng(74);
    int probes = 0, failures = 0;
    double worst = 0.0;
    auto check = [&](const std::function<double()>& eval, double* slot, double analytic) {
      const double fd = testsup::central_diff(eval, slot, 1e-6);
      const double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
      ++probes;
      worst = std::max(worst, rel);
      if (rel > 1e-3) ++failures;
    };

    auto run_family = [&](const char* name, int family_probes, auto&& body) {
      const int before = probes, bad = failures;
      body(family_probes);
      note(std::string("loss ") + name + ": " + std::to_string(probes - before) + " probes, " +
           std::to_string(failures - bad) + " failures");
    };

    run_family("rec", 100, [&](int n) {
      Mat<double> a = random_mat(5, 24, rng), b = random_mat(5, 24, rng);
      auto [v, g] = rec_loss_grad<double>(a, b);
      auto eval = [&]() { return static_cast<double>(rec_loss<double>(a, b)); };
      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(a.size())));
        check(eval, a.data() + idx, g.data()[idx]);
      }
    });

    run_family("gen_adv", 100, [&](int n) {
      Mat<double> s = random_mat(6, 20, rng);
      auto [v, g] = gen_adv_loss_grad<double>(s);
      auto eval = [&]() { return static_cast<double>(gen_adv_loss<double>(s)); };
      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(s.size())));
        check(eval, s.data() + idx, g.data()[idx]);
      }
    });

    run_family("disc", 100, [&](int n) {
      Mat<double> sr = random_mat(6, 20, rng), sf = random_mat(6, 20, rng);
      auto g = disc_loss_grad<double>(sr, sf);
      auto eval = [&]() { return static_cast<double>(disc_loss<double>(sr, sf)); };
      for (int i = 0; i < n / 2; ++i) {
        const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(sr.size())));
        check(eval, sr.data() + idx, g.d_real.data()[idx]);
        check(eval, sf.data() + idx, g.d_fake.data()[idx]);
      }
    });

    run_family("fm", 120, [&](int n) {
      for (auto mode : {FmDenominator::Generated, FmDenominator::Real}) {
        std::vector<Mat<double>> real{random_mat(4, 6, rng), random_mat(3, 8, rng)};
        std::vector<Mat<double>> fake{random_mat(4, 6, rng), random_mat(3, 8, rng)};
        auto [v, grads] = feature_match_loss_grad<double>(real, fake, mode);
        auto eval = [&]() { return static_cast<double>(feature_match_loss<double>(real, fake, mode)); };
        for (int i = 0; i < n / 4; ++i)
          for (std::size_t layer = 0; layer < fake.size(); ++layer) {
            const auto idx =
                static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(fake[layer].size())));
            check(eval, fake[layer].data() + idx, grads[layer].data()[idx]);
          }
      }
    });

    run_family("kl", 100, [&](int n) {
      Mat<double> mu = random_mat(50, 1, rng), ls = random_mat(50, 1, rng, 0.5);
      auto g = kl_loss_grad<double>(mu, ls);
      auto eval = [&]() { return static_cast<double>(kl_loss<double>(mu, ls)); };
      for (int i = 0; i < n / 2; ++i) {
        const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(mu.size())));
        check(eval, mu.data() + idx, g.d_mu.data()[idx]);
        check(eval, ls.data() + idx, g.d_log_sigma.data()[idx]);
      }
    });

    note("losses total: " + std::to_string(probes) + " probes, worst rel " + std::to_string(worst));
    ok = ok && failures == 0 && probes >= 500;
  }

  return ok;
}

// ---- criterion 5: discriminator shape law ----------------------------------

bool criterion_disc_shapes() {
  bool ok = true;
  const auto shapes = Discriminator<float>::layer_shapes(64, 60);
  ok = ok && shapes.size() == 6;
  const int widths[6] = {56, 52, 48, 44, 40, 40};
  std::string seq = "60";
  for (int i = 0; i < 6 && ok; ++i) {
    ok = shapes[static_cast<std::size_t>(i)].first == 64 &&
         shapes[static_cast<std::size_t>(i)].second == widths[i];
    seq += "->" + std::to_string(shapes[static_cast<std::size_t>(i)].second);
  }
  note("1x64x60 widths: " + seq + " (height 64 throughout)");

  DiscriminatorSpec spec;
  spec.internal_channels = 4;
  Discriminator<float> d(spec);
  Rng rng(3);
  d.init(rng);

  Rng sizes(99);
  for (int trial = 0; trial < 30 && ok; ++trial) {
    const int h = 2 + static_cast<int>(sizes.below(48));
    const int w = 21 + static_cast<int>(sizes.below(70));
    const auto s = Discriminator<float>::layer_shapes(h, w);
    ok = ok && s.size() == 6;
    for (int i = 0; i < 5 && ok; ++i)
      ok = s[static_cast<std::size_t>(i)] == std::make_pair(h, w - 4 * (i + 1));
    ok = ok && s[5] == std::make_pair(h, w - 20);
    if (trial < 6 && ok) {
      const auto out = d.forward(nn::Mat<float>::Random(h, w));
      ok = out.features.size() == 6 && out.score.rows() == h && out.score.cols() == w - 20;
    }
  }
  note(std::string("random-size property (30 shapes, 6 forwards): ") + (ok ? "holds" : "violated"));
  return ok;
}

// ---- criterion 6: metric oracles -------------------------------------------

Eigen::MatrixXd dft_spectrogram(const AudioBuffer& x, int fft, int win, int hop) {
  const Eigen::Index frames = (x.length() - win) / hop + 1;
  const Eigen::Index bins = fft / 2 + 1;
  Eigen::MatrixXd mag(bins, frames);
  for (Eigen::Index f = 0; f < frames; ++f) {
    std::vector<double> buf(static_cast<std::size_t>(fft), 0.0);
    for (int i = 0; i < win; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
      buf[static_cast<std::size_t>(i)] = w * x.samples()(0, f * hop + i);
    }
    for (Eigen::Index k = 0; k < bins; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int n = 0; n < fft; ++n) {
        const double ph = -2.0 * std::numbers::pi * static_cast<double>(k) * n / fft;
        acc += buf[static_cast<std::size_t>(n)] * std::complex<double>(std::cos(ph), std::sin(ph));
      }
      mag(k, f) = std::abs(acc);
    }
  }
  return mag;
}

double oracle_stft_distance(const AudioBuffer& ref, const AudioBuffer& est,
                            const STFTDistanceConfig& cfg) {
  double total = 0.0;
  for (const auto& r : cfg.resolutions) {
    const Eigen::MatrixXd a = dft_spectrogram(ref, r.fft_size, r.window_length, r.hop);
    const Eigen::MatrixXd b = dft_spectrogram(est, r.fft_size, r.window_length, r.hop);
    const double diff = (a - b).norm();
    const double sc = diff == 0.0 ? 0.0 : diff / std::max(a.norm(), 1e-30);
    const double lm =
        (a.cwiseMax(cfg.log_floor).array().log() - b.cwiseMax(cfg.log_floor).array().log()).abs().mean();
    total += sc + lm;
  }
  return total / static_cast<double>(cfg.resolutions.size());
}

double oracle_mel_distance(const AudioBuffer& ref, const AudioBuffer& est, const MelDistanceConfig& cfg) {
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const int rate = ref.sample_rate_hz();
  const double fmax = cfg.fmax_hz > 0 ? cfg.fmax_hz : rate / 2.0;
  const Eigen::Index bins = cfg.fft_size / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.mel_bins, bins);
  for (int m = 0; m < cfg.mel_bins; ++m) {
    const double span = (mel(fmax) - mel(cfg.fmin_hz)) / (cfg.mel_bins + 1);
    const double lo = hz(mel(cfg.fmin_hz) + span * m);
    const double mid = hz(mel(cfg.fmin_hz) + span * (m + 1));
    const double hi = hz(mel(cfg.fmin_hz) + span * (m + 2));
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * rate / cfg.fft_size;
      if (f > lo && f < mid) fb(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) fb(m, k) = (hi - f) / (hi - mid);
    }
  }
  const Eigen::MatrixXd a = fb * dft_spectrogram(ref, cfg.fft_size, cfg.fft_size, cfg.hop);
  const Eigen::MatrixXd b = fb * dft_spectrogram(est, cfg.fft_size, cfg.fft_size, cfg.hop);
  return (a.cwiseMax(cfg.log_floor).array().log() - b.cwiseMax(cfg.log_floor).array().log()).abs().mean();
}

bool criterion_metric_oracles() {
  Rng rng(11);
  const STFTDistanceConfig scfg;
  const MelDistanceConfig mcfg;
  bool ok = true;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const AudioBuffer ref = noise_clip(1, 2600, 8000, rng);
    AudioBuffer est = [&] {
      MatrixF m = ref.samples();
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += static_cast<float>(0.1 * rng.gauss());
      return AudioBuffer(std::move(m), 8000);
    }();
    const double rel_s = std::abs(stft_distance(ref, est, scfg) - oracle_stft_distance(ref, est, scfg)) /
                         std::max(oracle_stft_distance(ref, est, scfg), 1e-12);
    const double rel_m = std::abs(mel_distance(ref, est, mcfg) - oracle_mel_distance(ref, est, mcfg)) /
                         std::max(oracle_mel_distance(ref, est, mcfg), 1e-12);
    worst = std::max({worst, rel_s, rel_m});
    ok = ok && rel_s < 1e-5 && rel_m < 1e-5;
  }
  note("20 random signals vs direct-DFT oracle: worst rel " + std::to_string(worst));

  const AudioBuffer x = noise_clip(1, 2600, 8000, rng);
  ok = ok && stft_distance(x, x) == 0.0 && mel_distance(x, x) == 0.0;

  const AudioBuffer zero(MatrixF::Zero(1, 2600), 8000);
  const StftDistanceDetail d = stft_distance_detail(x, zero, {});
  ok = ok && d.per_resolution.size() == 3;
  for (const auto& r : d.per_resolution) ok = ok && r.spectral_convergence == 1.0;
  note(std::string("identity exactly 0, noise-vs-silence SC = 1 per resolution: ") +
       (ok ? "yes" : "NO"));
  return ok;
}

// ---- criterion 7: DSP properties -------------------------------------------

bool criterion_dsp() {
  bool ok = true;

  {  // DC invariance both directions
    const AudioBuffer dc(MatrixF::Ones(1, 8000), 8000);
    for (const int target : {4000, 16000}) {
      const AudioBuffer y = resample_sinc(dc, target);
      const Eigen::Index lo = y.length() / 4, hi = 3 * y.length() / 4;
      double worst = 0.0;
      for (Eigen::Index i = lo; i < hi; ++i)
        worst = std::max(worst, std::abs(static_cast<double>(y.samples()(0, i)) - 1.0));
      ok = ok && worst < 1e-6;
      note("DC gain error to " + std::to_string(target) + " Hz: " + std::to_string(worst));
    }
  }

  {  // tone preservation and imaging attenuation
    const int rate = 8000, up = 16000;
    const Eigen::Index n = 8000;
    MatrixF m(1, n);
    for (Eigen::Index i = 0; i < n; ++i)
      m(0, i) = static_cast<float>(std::sin(2.0 * std::numbers::pi * 1000.0 * i / rate));
    const AudioBuffer y = resample_sinc(AudioBuffer(std::move(m), rate), up);
    auto band_power = [&](double hz) {
      const Eigen::Index lo = y.length() / 4, len = y.length() / 2;
      std::complex<double> acc(0.0, 0.0);
      for (Eigen::Index i = 0; i < len; ++i) {
        const double ph = -2.0 * std::numbers::pi * hz * (lo + i) / up;
        acc += static_cast<double>(y.samples()(0, lo + i)) *
               std::complex<double>(std::cos(ph), std::sin(ph));
      }
      return std::abs(acc) / static_cast<double>(len);
    };
    const double tone = band_power(1000.0);
    const double image = band_power(7000.0);
    const double db = 20.0 * std::log10(std::max(image, 1e-30) / std::max(tone, 1e-30));
    note("1 kHz tone upsampled: image at 7 kHz is " + std::to_string(db) + " dB");
    ok = ok && db < -60.0 && tone > 0.4;
  }

  {  // band-split complementarity
    Rng rng(21);
    const AudioBuffer x = noise_clip(1, 8000, 8000, rng);
    BandSplitConfig split;
    split.cutoff_hz = 2000.0;
    const auto [low, high] = band_split(x, split);
    double worst = 0.0;
    const Eigen::Index lo = x.length() / 8, hi = 7 * x.length() / 8;
    for (Eigen::Index i = lo; i < hi; ++i)
      worst = std::max(worst, std::abs(static_cast<double>(low.samples()(0, i)) +
                                       static_cast<double>(high.samples()(0, i)) -
                                       static_cast<double>(x.samples()(0, i))));
    note("band-split low+high vs input, worst abs: " + std::to_string(worst));
    ok = ok && worst < 1e-3;
  }

  {  // mid/side round trip and log-energy-ratio antisymmetry
    Rng rng(22);
    const AudioBuffer s = noise_clip(2, 6000, 8000, rng);
    const AudioBuffer rt = from_mid_side(to_mid_side(s));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < s.samples().size(); ++i)
      worst = std::max(worst, std::abs(static_cast<double>(s.samples().data()[i]) -
                                       static_cast<double>(rt.samples().data()[i])));
    note("mid/side round trip worst abs: " + std::to_string(worst));
    ok = ok && worst < 1e-6;

    MatrixF swapped(2, s.length());
    swapped.row(0) = s.samples().row(1);
    swapped.row(1) = s.samples().row(0);
    const double r1 = channel_log_energy_ratio(s);
    const double r2 = channel_log_energy_ratio(AudioBuffer(std::move(swapped), 8000));
    note("log-energy ratio antisymmetry: " + std::to_string(r1) + " vs " + std::to_string(r2));
    ok = ok && std::abs(r1 + r2) < 1e-9;
  }

  return ok;
}

// ---- criterion 8: desk-scale BWE -------------------------------------------

bool criterion_desk_bwe() {
  ExperimentManifest m = ExperimentManifest::desk_bwe();
  m.out_dir = work_dir() + "/bwe";
  fs::remove_all(m.out_dir);
  note("training: " + std::to_string(m.training.total_steps) + " steps (budget 2000), vae " +
       std::to_string(m.vae_steps) + " steps");
  const BweExperimentResult res = run_bwe_experiment(m, &std::cout);

  ToyVAE vae = load_vae(res.vae_checkpoint_path);
  BweTrainerState st = load_bwe_state(res.full_checkpoint_path);

  const auto held_out = synth_corpus(m.synth, m.eval_clips, 990001, 1);
  BandSplitConfig split;
  split.cutoff_hz = m.synth.sample_rate / 4.0;

  const EvalRow processed = bwe_model_row("held-out processed", st.f, vae, held_out, split);

  double baseline_high = 0.0;
  for (const AudioBuffer& x : held_out) {
    const AudioBuffer low = resample_sinc(x, m.synth.sample_rate / 2);
    const AudioBuffer up = resample_sinc(low, m.synth.sample_rate);
    const Eigen::Index n = std::min(x.length(), up.length());
    const AudioBuffer ref(MatrixF(x.samples().leftCols(n)), m.synth.sample_rate);
    const AudioBuffer cand(MatrixF(up.samples().leftCols(n)), m.synth.sample_rate);
    baseline_high += banded_metrics(ref, cand, split).stft_d.high;
  }
  baseline_high /= static_cast<double>(held_out.size());

  const double processed_high = processed.banded->stft_d.high;
  note("held-out high-band STFT-D: processed " + std::to_string(processed_high) +
       " vs unprocessed sinc-upsampled " + std::to_string(baseline_high));
  for (const auto& row : res.report.rows)
    note("experiment row '" + row.label + "': high-band STFT-D " +
         std::to_string(row.banded->stft_d.high));
  return m.training.total_steps <= 2000 && processed_high < baseline_high;
}

// ---- criteria 9 and 10: desk-scale M2S -------------------------------------

std::optional<M2sExperimentResult> g_m2s;

const M2sExperimentResult& desk_m2s_result() {
  if (!g_m2s) {
    ExperimentManifest m = ExperimentManifest::desk_m2s();
    m.out_dir = work_dir() + "/m2s";
    fs::remove_all(m.out_dir);
    note("training: " + std::to_string(m.training.total_steps) + " steps, sweep over " +
         std::to_string(m.sweep_clips) + " clips");
    g_m2s = run_m2s_experiment(m, &std::cout);
  }
  return *g_m2s;
}

bool criterion_m2s_sweep() {
  const M2sExperimentResult& res = desk_m2s_result();
  const SweepResult& s = res.sweep;
  const std::vector<double> want{0.0, 0.25, 0.5, 0.75, 1.0};
  bool ok = s.lambdas == want;
  ok = ok && static_cast<int>(s.scatter.size()) >= 64 * 5;

  std::ostringstream line;
  line << "pearson per lambda:";
  for (std::size_t i = 0; i < s.lambdas.size(); ++i)
    line << " " << s.lambdas[i] << ":" << s.correlations[i];
  note(line.str());
  note("trend spearman " + std::to_string(s.trend_spearman) + ", p " + std::to_string(s.trend_p));

  ok = ok && s.correlations.back() >= s.correlations.front() + 0.3;
  ok = ok && s.trend_p < 0.05;
  return ok;
}

bool criterion_oracle_vs_prior() {
  const M2sExperimentResult& res = desk_m2s_result();
  const EvalRow& prior = res.report.rows[1];
  const EvalRow& oracle = res.report.rows[2];
  note("L STFT-D: oracle " + std::to_string(oracle.stereo->stft_d.left) + " vs prior " +
       std::to_string(prior.stereo->stft_d.left));
  note("R STFT-D: oracle " + std::to_string(oracle.stereo->stft_d.right) + " vs prior " +
       std::to_string(prior.stereo->stft_d.right));
  return oracle.stereo->stft_d.left <= prior.stereo->stft_d.left &&
         oracle.stereo->stft_d.right <= prior.stereo->stft_d.right;
}

// ---- criterion 11: reproducibility and persistence --------------------------

bool criterion_reproducibility() {
  bool ok = true;

  ToyVAEConfig vc = ToyVAEConfig::tiny();
  SynthSpec ss;
  ss.sample_rate = vc.sample_rate_hz;
  ss.duration_seconds = 1.0;
  const auto corpus = synth_corpus(ss, 3, 77, 1);
  ToyVAE vae = train_toy_vae(vc, corpus, 60, 9).model;

  TrainingConfig cfg = TrainingConfig::bwe_defaults();
  cfg.batch_size = 2;
  cfg.chunk_seconds = 0.5;
  cfg.total_steps = 12;
  cfg.warmup_main = 2;
  cfg.warmup_disc = 3;
  cfg.adv_delay_steps = 2;
  cfg.seed = 5;

  ModelSpec ms;
  ms.variant = "custom";
  ms.num_blocks = 1;
  ms.hidden_dim = 16;
  ms.expansion = 2;
  ms.latent_channels_in = vc.latent_channels;
  ms.latent_channels_out = vc.latent_channels;
  DiscriminatorSpec ds;
  ds.internal_channels = 4;

  const PairPool pool(build_bwe_pairs(vae, corpus, cfg.chunk_seconds), cfg.seed);

  auto run_trace = [&](std::int64_t stop_after) {
    BweTrainerState st = make_bwe_trainer(cfg, ms, ds);
    TrainLoopOptions loop;
    loop.run_steps = stop_after;
    std::vector<std::string> lines;
    for (const auto& r : run_bwe_training(st, pool, loop)) lines.push_back(format_step_record(r));
    return std::make_pair(std::move(st), std::move(lines));
  };

  {  // bit-exact rerun
    const auto [st1, t1] = run_trace(-1);
    const auto [st2, t2] = run_trace(-1);
    ok = ok && t1 == t2 && t1.size() == 12;
    note(std::string("fixed-seed rerun traces (12 steps): ") + (ok ? "bit-exact" : "DIVERGED"));
  }

  {  // save/resume equals an unbroken run
    const std::string p6 = work_dir() + "/repro_mid.reck";
    const std::string p12a = work_dir() + "/repro_straight.reck";
    const std::string p12b = work_dir() + "/repro_resumed.reck";

    auto [st_half, t_head] = run_trace(6);
    save_bwe_state(st_half, p6);
    BweTrainerState st_resumed = load_bwe_state(p6);
    std::vector<std::string> t_tail;
    for (const auto& r : run_bwe_training(st_resumed, pool)) t_tail.push_back(format_step_record(r));
    save_bwe_state(st_resumed, p12b);

    auto [st_full, t_full] = run_trace(-1);
    save_bwe_state(st_full, p12a);

    std::vector<std::string> stitched = t_head;
    stitched.insert(stitched.end(), t_tail.begin(), t_tail.end());
    ok = ok && stitched == t_full;
    ok = ok && slurp(p12a) == slurp(p12b);
    note(std::string("resume at step 6 vs unbroken 12: ") +
         (ok ? "traces and checkpoint bytes identical" : "MISMATCH"));
  }

  {  // latent file round trip, both layouts
    Rng rng(123);
    MatrixF a(16, 9), b(16, 9);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<float>(rng.gauss());
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<float>(rng.gauss());

    const std::string pm = work_dir() + "/repro_mono.relt";
    const LatentSequence z(a, 43.0);
    write_latent_file(pm, z);
    const LatentSequence z2 = read_latent_file_mono(pm);
    ok = ok && z2.frame_rate_hz() == 43.0 &&
         std::memcmp(a.data(), z2.data().data(), sizeof(float) * static_cast<std::size_t>(a.size())) == 0;

    const std::string ps = work_dir() + "/repro_stacked.relt";
    const StackedLatent sz({a, b}, 43.0);
    write_latent_file(ps, sz);
    const StackedLatent sz2 = read_latent_file_stacked(ps);
    ok = ok && sz2.streams() == 2 &&
         std::memcmp(b.data(), sz2.stream(1).data(),
                     sizeof(float) * static_cast<std::size_t>(b.size())) == 0;
    note(std::string("latent file round trips: ") + (ok ? "bit-exact" : "MISMATCH"));
  }

  {  // checkpoint load/resave is byte-identical
    const std::string v1 = work_dir() + "/repro_vae1.reck";
    const std::string v2 = work_dir() + "/repro_vae2.reck";
    save_vae(vae, v1);
    ToyVAE reloaded = load_vae(v1);
    save_vae(reloaded, v2);
    ok = ok && slurp(v1) == slurp(v2);
    note(std::string("checkpoint resave: ") + (ok ? "byte-identical" : "MISMATCH"));
  }

  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  const struct {
    int id;
    const char* name;
    bool (*fn)();
  } criteria[] = {
      {1, "parameter counts within 10% of the published sizes", criterion_params},
      {2, "FLOPs within 15% and exactly linear in duration", criterion_flops},
      {3, "loss identities at canonical inputs", criterion_loss_identities},
      {4, "gradients match finite differences", criterion_gradients},
      {5, "discriminator shape law", criterion_disc_shapes},
      {6, "spectral metrics match direct-DFT oracles", criterion_metric_oracles},
      {7, "DSP invariants", criterion_dsp},
      {8, "desk-scale BWE beats the unprocessed input in the high band", criterion_desk_bwe},
      {9, "desk-scale M2S sweep: correlation rises with lambda", criterion_m2s_sweep},
      {10, "oracle conditioning at least matches prior conditioning", criterion_oracle_vs_prior},
      {11, "determinism, resume, and round-trip persistence", criterion_reproducibility},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    std::cout << "CRITERION " << c.id << " (" << c.name << ")\n";
    std::cout.flush();
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      note(std::string("exception: ") + e.what());
    }
    std::cout << "CRITERION " << c.id << ": " << (ok ? "PASS" : "FAIL") << "\n";
    std::cout.flush();
    if (!ok) ++failed;
  }
  if (failed) std::cout << failed << " criteria failed\n";
  return failed == 0 ? 0 : 1;
}
