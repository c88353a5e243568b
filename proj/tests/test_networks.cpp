// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "reenc/counting.hpp"
#include "reenc/model/discriminator.hpp"
#include "reenc/model/f_theta.hpp"
#include "reenc/model/g_phi.hpp"
#include "support.hpp"

using namespace reenc;

namespace {

ModelSpec tiny_spec(bool conditioned) {
  ModelSpec s;
  s.variant = "custom";
  s.num_blocks = 2;
  s.hidden_dim = 8;
  s.expansion = 2;
  s.latent_channels_in = 4;
  s.latent_channels_out = 4;
  s.conditioned = conditioned;
  s.condition_dim = conditioned ? 3 : 0;
  return s;
}

}  // namespace

TEST_CASE("block preserves shape and is identity with zero projection") {
  Rng rng(11);
  ConvNextBlock<float> block(8, 2, 7, false, 0);
  block.init(rng);
  std::vector<nn::ParamRef<float>> refs;
  block.collect("b", refs);
  for (auto& r : refs)
    if (r.name == "b.project.weight" || r.name == "b.project.bias") r.v->setZero();
  nn::Mat<float> x = nn::Mat<float>::Random(8, 13);
  nn::Mat<float> y = block.forward(x, nullptr);
  CHECK(y.rows() == 8);
  CHECK(y.cols() == 13);
  CHECK((y - x).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("GRN on constant-per-channel input reduces to gamma*x + beta + x") {
  nn::Grn<float> grn(4);
  nn::Mat<float> x(4, 6);
  for (int c = 0; c < 4; ++c) x.row(c).setConstant(static_cast<float>(c + 1));
  // Equal per-channel L2 norms would need equal magnitudes; use per-channel
  // constants of equal magnitude but different signs instead.
  x.row(1) *= -1.0f;
  x.row(0).setConstant(2.0f);
  x.row(1).setConstant(-2.0f);
  x.row(2).setConstant(2.0f);
  x.row(3).setConstant(-2.0f);
  grn.gamma.v.setConstant(0.5f);
  grn.beta.v.setConstant(0.25f);
  nn::Mat<float> y = grn.forward(x);
  // All norms equal => scale factor 1 (up to eps), so y = 0.5*x + 0.25 + x.
  nn::Mat<float> expect = 1.5f * x;
  expect.array() += 0.25f;
  CHECK((y - expect).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("adaptive modulation is neutral at init") {
  ModelSpec cond = tiny_spec(true);
  ModelSpec plain = tiny_spec(false);
  FTheta<float> f_cond(cond), f_plain(plain);
  Rng r1(77), r2(77);
  f_cond.init(r1);
  f_plain.init(r2);
  nn::Mat<float> z = nn::Mat<float>::Random(4, 9);
  nn::Mat<float> c = nn::Mat<float>::Random(3, 1) * 5.0f;
  nn::Mat<float> y_cond = f_cond.forward(z, &c);
  nn::Mat<float> y_plain = f_plain.forward(z, nullptr);
  // Same init draw order: conditioned blocks draw identical weights because
  // the modulation projection is zero-initialized without consuming RNG.
  CHECK((y_cond - y_plain).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("predictor shape contract and zero-weight behavior") {
  ModelSpec m2s = tiny_spec(true);
  m2s.output_streams = 2;
  FTheta<float> f(m2s);
  Rng rng(5);
  f.init(rng);
  nn::Mat<float> z = nn::Mat<float>::Random(4, 11);
  nn::Mat<float> c = nn::Mat<float>::Random(3, 1);
  nn::Mat<float> y = f.forward(z, &c);
  CHECK(y.rows() == 8);  // 2 streams x 4 channels
  CHECK(y.cols() == 11);

  auto refs = f.params();
  for (auto& r : refs) r.v->setZero();
  nn::Mat<float> y0 = f.forward(z, &c);
  CHECK(y0.cwiseAbs().maxCoeff() == 0.0f);

  CHECK_THROWS_AS(f.forward(z, nullptr), DimensionError);
  nn::Mat<float> bad_c = nn::Mat<float>::Random(5, 1);
  CHECK_THROWS_AS(f.forward(z, &bad_c), DimensionError);
  nn::Mat<float> bad_z = nn::Mat<float>::Random(6, 11);
  CHECK_THROWS_AS(f.forward(bad_z, &c), DimensionError);
}

TEST_CASE("stereo wrapper splits streams by row blocks") {
  ModelSpec m2s = tiny_spec(true);
  m2s.output_streams = 2;
  FTheta<float> f(m2s);
  Rng rng(5);
  f.init(rng);
  LatentSequence z_in(MatrixF::Random(4, 11), 125.0);
  ConditionVector cond = sample_prior(3, rng);
  StackedLatent out = f_theta_predict_stereo(f, z_in, cond);
  CHECK(out.streams() == 2);
  CHECK(out.channels() == 4);
  CHECK(out.frames() == 11);
  nn::Mat<float> c = cond.c;
  nn::Mat<float> raw = f.forward(z_in.data(), &c);
  CHECK(out.stream(0).isApprox(raw.topRows(4)));
  CHECK(out.stream(1).isApprox(raw.bottomRows(4)));
}

TEST_CASE("conditioning encoder: zero heads give standard-normal posterior") {
  ConditioningEncoderSpec spec;
  spec.num_blocks = 2;
  spec.hidden_dim = 8;
  spec.input_channels = 8;
  spec.output_dim = 3;
  GPhi<float> g(spec);
  Rng rng(9);
  g.init(rng);
  auto refs = g.params();
  for (auto& r : refs)
    if (r.name.find("head") != std::string::npos) r.v->setZero();
  auto post = g.forward(nn::Mat<float>::Random(8, 10));
  CHECK(post.mu.cwiseAbs().maxCoeff() == 0.0f);
  CHECK(post.log_sigma.cwiseAbs().maxCoeff() == 0.0f);

  StackedLatent z(std::vector<MatrixF>{MatrixF::Random(4, 10), MatrixF::Random(4, 10)}, 125.0);
  Rng draw(123);
  ConditionVector cv = g_phi_condition(g, z, draw);
  CHECK((cv.sigma.array() == 1.0f).all());
  Rng draw2(123);
  ConditionVector cv2 = g_phi_condition(g, z, draw2);
  CHECK(cv.c.isApprox(cv2.c));
}

TEST_CASE("reparameterized sample matches its Gaussian moments") {
  Rng rng(2024);
  const double mu = 1.0, sigma = 2.0;
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = mu + sigma * rng.gauss();
    sum += c;
    sumsq += c * c;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(mean - mu) < 0.02);
  CHECK(std::abs(sd - sigma) < 0.03);
}

TEST_CASE("reparameterized draws pass a KS normality check") {
  // KS statistic of c = mu + sigma*eps against N(mu, sigma^2), 1e4 draws.
  Rng rng(77);
  const double mu = -0.7, sigma = 1.7;
  const int n = 10000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = mu + sigma * rng.gauss();
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = (xs[static_cast<std::size_t>(i)] - mu) / (sigma * std::sqrt(2.0));
    const double cdf = 0.5 * (1.0 + std::erf(z));
    d = std::max(d, std::abs(cdf - (i + 1.0) / n));
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
  }
  const double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n))) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  CHECK(p > 0.01);
}

TEST_CASE("prior sampling statistics and determinism") {
  Rng rng(31);
  const int h = 64, n = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(h), sumsq = Eigen::VectorXd::Zero(h);
  for (int i = 0; i < n; ++i) {
    ConditionVector cv = sample_prior(h, rng);
    sum += cv.c.cast<double>();
    sumsq += cv.c.cast<double>().cwiseAbs2();
  }
  for (int j = 0; j < h; ++j) {
    const double mean = sum(j) / n;
    const double var = sumsq(j) / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
  }
  Rng a(5), b(5);
  CHECK(sample_prior(4, a).c.isApprox(sample_prior(4, b).c));
  CHECK_THROWS_AS(sample_prior(0, rng), ValueError);
}

TEST_CASE("parameter counts match the published sizes") {
  FTheta<float> s(ModelSpec::preset_s_bwe());
  FTheta<float> m(ModelSpec::preset_m_bwe());
  FTheta<float> m2s(ModelSpec::preset_m2s());
  GPhi<float> g(ConditioningEncoderSpec::preset_full());
  CHECK(count_params(s) == 4295232);
  CHECK(count_params(m) == 19077952);
  CHECK(count_params(m2s, g) == 24868096);
  CHECK(std::abs(count_params(s) / 4.3e6 - 1.0) < 0.10);
  CHECK(std::abs(count_params(m) / 19.1e6 - 1.0) < 0.10);
  CHECK(std::abs(count_params(m2s, g) / 24.8e6 - 1.0) < 0.10);
}

TEST_CASE("analytic FLOPs match the published throughput") {
  const double fs = count_flops(ModelSpec::preset_s_bwe(), 1.0, 43.0);
  const double fm = count_flops(ModelSpec::preset_m_bwe(), 1.0, 43.0);
  CHECK(std::abs(fs / 0.4e9 - 1.0) < 0.15);
  CHECK(std::abs(fm / 1.6e9 - 1.0) < 0.15);
  CHECK(count_flops(ModelSpec::preset_s_bwe(), 2.0, 43.0) == doctest::Approx(2.0 * fs).epsilon(1e-12));
  CHECK(count_flops(ModelSpec::preset_m2s(), 2.0, 43.0) ==
        doctest::Approx(2.0 * count_flops(ModelSpec::preset_m2s(), 1.0, 43.0)).epsilon(1e-12));
}

TEST_CASE("discriminator shape law") {
  auto shapes = Discriminator<float>::layer_shapes(64, 60);
  REQUIRE(shapes.size() == 6);
  const int widths[6] = {56, 52, 48, 44, 40, 40};
  for (int i = 0; i < 6; ++i) {
    CHECK(shapes[static_cast<std::size_t>(i)].first == 64);
    CHECK(shapes[static_cast<std::size_t>(i)].second == widths[i]);
  }

  DiscriminatorSpec spec;
  spec.internal_channels = 8;
  Discriminator<float> d(spec);
  Rng rng(3);
  d.init(rng);
  auto out = d.forward(nn::Mat<float>::Random(64, 60));
  CHECK(out.features.size() == 6);
  CHECK(out.score.rows() == 64);
  CHECK(out.score.cols() == 40);

  Rng sizes(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = 3 + static_cast<int>(sizes.below(30));
    const int w = 21 + static_cast<int>(sizes.below(40));
    auto o = d.forward(nn::Mat<float>::Random(h, w));
    CHECK(o.score.rows() == h);
    CHECK(o.score.cols() == w - 20);
    for (int layer = 0; layer < 5; ++layer)
      CHECK(o.features[static_cast<std::size_t>(layer)].cols() ==
            static_cast<Eigen::Index>(h) * (w - 4 * (layer + 1)));
  }

  CHECK_THROWS_AS(d.forward(nn::Mat<float>::Random(64, 7)), DimensionError);
  CHECK_THROWS_AS(d.forward(nn::Mat<float>::Random(64, 20)), DimensionError);
  CHECK_THROWS_AS(d.forward(nn::Mat<float>::Random(2, 60)), DimensionError);

  auto o1 = d.forward(nn::Mat<float>::Constant(10, 30, 0.5f));
  auto o2 = d.forward(nn::Mat<float>::Constant(10, 30, 0.5f));
  CHECK(o1.score.isApprox(o2.score));
}
