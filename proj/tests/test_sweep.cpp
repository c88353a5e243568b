// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "reenc/report.hpp"
#include "reenc/sweep.hpp"
#include "reenc/synth.hpp"

using namespace reenc;

TEST_CASE("pearson correlation basics") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  std::vector<double> neg(y.rbegin(), y.rend());
  CHECK(pearson(x, neg) == doctest::Approx(-1.0));
  const std::vector<double> flat{3, 3, 3, 3, 3};
  CHECK(pearson(x, flat) == 0.0);  // degenerate series: defined as 0
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1.0}), DimensionError);

  const std::vector<double> noisy{1.0, 2.2, 2.9, 4.3, 4.8};
  const double r = pearson(x, noisy);
  CHECK(r > 0.95);
  CHECK(r <= 1.0);
}

TEST_CASE("exact permutation p-value for a monotone trend") {
  // Strictly increasing 5 values: only the identity permutation ties the
  // observed Spearman statistic, so p = 1/5! = 1/120.
  const std::vector<double> incr{0.1, 0.2, 0.5, 0.7, 0.9};
  const double p = increasing_trend_p(incr);
  CHECK(p == doctest::Approx(1.0 / 120.0).epsilon(1e-12));

  const std::vector<double> decr{0.9, 0.7, 0.5, 0.2, 0.1};
  CHECK(increasing_trend_p(decr) == doctest::Approx(1.0));

  // A flat series is never significant.
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5, 0.5};
  CHECK(increasing_trend_p(flat) == doctest::Approx(1.0));

  // Large n falls back to the normal approximation and stays in (0, 1].
  std::vector<double> big;
  for (int i = 0; i < 12; ++i) big.push_back(i * 0.1);
  const double pb = increasing_trend_p(big);
  CHECK(pb > 0.0);
  CHECK(pb < 0.01);
}

TEST_CASE("sweep csv formats") {
  SweepResult r;
  r.lambdas = {0.0, 1.0};
  r.correlations = {0.05, 0.9};
  r.scatter = {{0, 0.0, -0.4, 0.1}, {0, 1.0, -0.4, -0.3}};
  r.trend_spearman = 1.0;
  r.trend_p = 0.5;
  const std::string scatter = sweep_scatter_csv(r);
  CHECK(scatter.rfind("clip_id,lambda,gt_ratio,out_ratio\n", 0) == 0);
  CHECK(scatter.find("0,1,-0.4,-0.3") != std::string::npos);
  const std::string summary = sweep_summary_csv(r);
  CHECK(summary.rfind("lambda,pearson\n", 0) == 0);
  CHECK(summary.find("1,0.9") != std::string::npos);
}

TEST_CASE("report: json round trip and table rendering") {
  EvalReport rep;
  rep.title = "demo";
  rep.provenance = {{"hash", "abc"}};
  EvalRow banded_row;
  banded_row.label = "banded";
  banded_row.banded = BandedMetrics{{1.25, 0.5, 2.0}, {0.1, 0.2, 0.3}};
  banded_row.gflops_per_audio_second = 1.637;
  EvalRow stereo_row;
  stereo_row.label = "stereo";
  stereo_row.stereo = StereoMetrics{{0.4, 0.5, 0.3, 0.9}, {1.0, 1.1, 0.8, 1.9}};
  rep.rows = {banded_row, stereo_row};

  const nlohmann::json j = report_to_json(rep);
  const EvalReport back = report_from_json(j);
  CHECK(back.title == "demo");
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].banded->stft_d.high == 2.0);
  CHECK(back.rows[1].stereo->mel_d.side == 1.9);
  CHECK(*back.rows[0].gflops_per_audio_second == doctest::Approx(1.637));
  CHECK(!back.rows[0].stereo.has_value());

  const std::string table = render_report_table(rep);
  // Banded rows render as "full (low / high)", stereo as channel pairs.
  CHECK(table.find("1.2500 (0.5000 / 2.0000)") != std::string::npos);
  CHECK(table.find("0.4000 / 0.5000") != std::string::npos);
  CHECK(table.find("0.3000 / 0.9000") != std::string::npos);
  CHECK(table.find("banded") != std::string::npos);

  EvalRow bad;
  bad.label = "nan";
  bad.banded = BandedMetrics{{std::nan(""), 0, 0}, {0, 0, 0}};
  EvalReport broken;
  broken.rows = {bad};
  CHECK_THROWS_AS(broken.validate(), ValueError);
}

TEST_CASE("interpolation sweep on a synthetic stand-in model behaves sanely") {
  // Tiny untrained models: the machinery must still produce one point per
  // clip and lambda, identical on reruns.
  ModelSpec ms;
  ms.variant = "custom";
  ms.num_blocks = 1;
  ms.hidden_dim = 16;
  ms.latent_channels_in = 16;
  ms.latent_channels_out = 16;
  ms.output_streams = 2;
  ms.conditioned = true;
  ms.condition_dim = 4;
  ConditioningEncoderSpec cs;
  cs.num_blocks = 1;
  cs.hidden_dim = 16;
  cs.input_channels = 32;
  cs.output_dim = 4;

  Rng rng(3);
  FTheta<float> f(ms);
  f.init(rng);
  GPhi<float> g(cs);
  g.init(rng);
  ToyVAE vae(ToyVAEConfig::tiny());
  vae.init(rng);

  SynthSpec spec;
  spec.duration_seconds = 1.0;
  const auto corpus = synth_corpus(spec, 5, 77, 2);
  const std::vector<double> lambdas{0.0, 0.5, 1.0};

  const SweepResult a = interpolation_sweep(f, g, vae, corpus, lambdas, 9);
  REQUIRE(a.lambdas == lambdas);
  REQUIRE(a.correlations.size() == 3);
  CHECK(a.scatter.size() == 15);
  for (const auto& pt : a.scatter) {
    CHECK(std::isfinite(pt.gt_ratio));
    CHECK(std::isfinite(pt.out_ratio));
  }
  const SweepResult b = interpolation_sweep(f, g, vae, corpus, lambdas, 9);
  for (std::size_t i = 0; i < a.scatter.size(); ++i)
    CHECK(a.scatter[i].out_ratio == b.scatter[i].out_ratio);

  CHECK_THROWS_AS(interpolation_sweep(f, g, vae, corpus, {1.5}, 9), ConfigError);
  CHECK_THROWS_AS(interpolation_sweep(f, g, vae, {}, lambdas, 9), DataError);
}
