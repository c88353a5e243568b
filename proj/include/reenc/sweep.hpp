// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reenc/model/f_theta.hpp"
#include "reenc/model/g_phi.hpp"
#include "reenc/vae.hpp"

namespace reenc {

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation of `values` against their index order (average
// ranks on ties), i.e. the strength of a monotone trend across the sequence.
double spearman_against_order(const std::vector<double>& values);

// One-sided p-value for an increasing trend: the fraction of orderings whose
// Spearman statistic reaches the observed one. Exact enumeration up to n = 8,
// normal approximation beyond.
double increasing_trend_p(const std::vector<double>& values);

struct SweepPoint {
  int clip_id;
  double lambda;
  double gt_ratio;
  double out_ratio;
};

struct SweepResult {
  std::vector<double> lambdas;
  std::vector<double> correlations;  // Pearson(gt_ratio, out_ratio) per lambda
  std::vector<SweepPoint> scatter;
  double trend_spearman = 0.0;       // correlations vs lambda order
  double trend_p = 1.0;
};

// Interpolates the condition vector c = lambda * c_gt + (1 - lambda) * c_0
// per clip, where c_gt is the conditioning posterior mean on the ground-truth
// stereo latent and c_0 is a seeded prior draw (fixed per clip across
// lambdas). Ratios are log left/right energies of the raw and generated
// stereo signals.
SweepResult interpolation_sweep(FTheta<float>& f, GPhi<float>& g, ToyVAE& frozen_ae,
                                const std::vector<AudioBuffer>& stereo_corpus,
                                const std::vector<double>& lambdas, std::uint64_t seed);

// clip_id,lambda,gt_ratio,out_ratio rows.
std::string sweep_scatter_csv(const SweepResult& r);
// lambda,pearson rows.
std::string sweep_summary_csv(const SweepResult& r);

}  // namespace reenc
