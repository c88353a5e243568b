// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "reenc/losses.hpp"
#include "reenc/rng.hpp"

using namespace reenc;

namespace {

Eigen::MatrixXd random_mat(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.gauss();
  return m;
}

}  // namespace

TEST_CASE("reconstruction loss identities") {
  Rng rng(1);
  const Eigen::MatrixXd z = random_mat(6, 9, rng);
  CHECK(rec_loss<double>(z, z) == 0.0);

  // Mean |difference|: constant offset d gives exactly d.
  Eigen::MatrixXd shifted = z.array() + 0.75;
  CHECK(std::abs(rec_loss<double>(shifted, z) - 0.75) < 1e-9);

  Eigen::MatrixXd wrong(5, 9);
  CHECK_THROWS_AS(rec_loss<double>(wrong, z), DimensionError);
}

TEST_CASE("least-squares adversarial identities at canonical score maps") {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 7);
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 7);
  const Eigen::MatrixXd halves = Eigen::MatrixXd::Constant(4, 7, 0.5);

  CHECK(std::abs(gen_adv_loss<double>(ones) - 0.0) < 1e-9);
  CHECK(std::abs(gen_adv_loss<double>(zeros) - 1.0) < 1e-9);
  CHECK(std::abs(gen_adv_loss<double>(halves) - 0.25) < 1e-9);

  // (real, fake) canonical pairs: perfect, fooled, undecided.
  CHECK(std::abs(disc_loss<double>(ones, zeros) - 0.0) < 1e-9);
  CHECK(std::abs(disc_loss<double>(zeros, ones) - 2.0) < 1e-9);
  CHECK(std::abs(disc_loss<double>(halves, halves) - 0.5) < 1e-9);
}

TEST_CASE("KL identities") {
  const Eigen::MatrixXd mu0 = Eigen::MatrixXd::Zero(5, 1);
  const Eigen::MatrixXd ls0 = Eigen::MatrixXd::Zero(5, 1);
  CHECK(std::abs(kl_loss<double>(mu0, ls0)) < 1e-9);

  // mu = 1, sigma = 1: 0.5 per dimension.
  const Eigen::MatrixXd mu1 = Eigen::MatrixXd::Ones(5, 1);
  CHECK(std::abs(kl_loss<double>(mu1, ls0) - 0.5 * 5) < 1e-9);

  // Always non-negative (divergence).
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd mu = random_mat(4, 1, rng);
    const Eigen::MatrixXd ls = 0.5 * random_mat(4, 1, rng);
    CHECK(kl_loss<double>(mu, ls) >= -1e-12);
  }
}

TEST_CASE("feature matching: zero on identical stacks, scale-invariant numerator path") {
  Rng rng(3);
  std::vector<Eigen::MatrixXd> real, fake;
  for (int i = 0; i < 6; ++i) real.push_back(random_mat(3, 5, rng));
  CHECK(feature_match_loss<double>(real, real) == 0.0);
  CHECK(feature_match_loss<double>(real, real, FmDenominator::Real) == 0.0);

  for (const auto& r : real) fake.push_back(r.array() + 0.1);
  const double generated = feature_match_loss<double>(real, fake);
  const double vs_real = feature_match_loss<double>(real, fake, FmDenominator::Real);
  CHECK(generated > 0.0);
  CHECK(vs_real > 0.0);
  CHECK(generated != doctest::Approx(vs_real));  // different normalizers

  fake.pop_back();
  CHECK_THROWS_AS(feature_match_loss<double>(real, fake), DimensionError);
}

TEST_CASE("compose: weighting, missing and unknown terms") {
  const LossWeights w = LossWeights::bwe_defaults();
  const LossReport r = compose({{"rec", 0.2}, {"adv", 0.9}, {"fm", 3.0}}, w);
  CHECK(r.total == doctest::Approx(10.0 * 0.2 + 0.5 * 0.9 + 1.0 * 3.0));
  CHECK(r.term("rec") == doctest::Approx(0.2));  // terms stay unweighted
  CHECK(!r.has("kl"));

  CHECK_THROWS_AS(compose({{"rec", 0.2}}, w), ValueError);               // adv missing, weight nonzero
  CHECK_THROWS_AS(compose({{"rec", 0.2}, {"bogus", 1.0}}, LossWeights::m2s_defaults()), ValueError);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(compose({{"rec", inf}, {"adv", 0.0}, {"fm", 0.0}}, w), ValueError);

  LossWeights neg = w;
  neg.w_fm = -1.0;
  CHECK_THROWS_AS(compose({{"rec", 0.1}}, neg), ConfigError);

  // M2S defaults need only rec and kl.
  const LossReport m = compose({{"rec", 1.0}, {"kl", 4.0}}, LossWeights::m2s_defaults());
  CHECK(m.total == doctest::Approx(10.0 + 5e-4 * 4.0));
}
