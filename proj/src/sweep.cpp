// SPDX-License-Identifier: Apache-2.0
#include "reenc/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "reenc/dsp.hpp"
#include "reenc/train.hpp"

namespace reenc {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("pearson: size mismatch");
  const auto n = x.size();
  if (n < 2) throw DataError("pearson: needs at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;  // a constant series carries no correlation signal
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const auto n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average of 1-based ranks
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_of_sequence(const std::vector<double>& values) {
  std::vector<double> order(values.size());
  std::iota(order.begin(), order.end(), 0.0);
  return pearson(order, average_ranks(values));
}

}  // namespace

double spearman_against_order(const std::vector<double>& values) {
  if (values.size() < 2) throw DataError("spearman: needs at least two values");
  return spearman_of_sequence(values);
}

double increasing_trend_p(const std::vector<double>& values) {
  const auto n = values.size();
  if (n < 3) throw DataError("trend test: needs at least three values");
  const double observed = spearman_of_sequence(values);
  if (n <= 8) {
    std::vector<double> perm = values;
    std::sort(perm.begin(), perm.end());
    std::int64_t total = 0, at_least = 0;
    do {
      ++total;
      if (spearman_of_sequence(perm) >= observed - 1e-12) ++at_least;
    } while (std::next_permutation(perm.begin(), perm.end()));
    // Duplicated values collapse distinct orderings into one; each remaining
    // ordering then stands for an equal share, so the ratio is still the
    // exact permutation p.
    return static_cast<double>(at_least) / static_cast<double>(total);
  }
  const double z = observed * std::sqrt(static_cast<double>(n) - 1.0);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

SweepResult interpolation_sweep(FTheta<float>& f, GPhi<float>& g, ToyVAE& frozen_ae,
                                const std::vector<AudioBuffer>& stereo_corpus,
                                const std::vector<double>& lambdas, std::uint64_t seed) {
  if (stereo_corpus.empty()) throw DataError("sweep: empty corpus");
  if (lambdas.empty()) throw ConfigError("sweep: needs at least one lambda");
  for (const double l : lambdas)
    if (l < 0.0 || l > 1.0) throw ConfigError("sweep: lambda values must lie in [0, 1]");
  if (!f.spec().conditioned || f.spec().output_streams != 2)
    throw ConfigError("sweep: predictor must be a conditioned stereo model");

  SweepResult out;
  out.lambdas = lambdas;
  Rng root(seed);
  std::vector<std::vector<double>> gt(lambdas.size()), pred(lambdas.size());
  for (std::size_t i = 0; i < stereo_corpus.size(); ++i) {
    const AudioBuffer& x = stereo_corpus[i];
    if (x.channels() != 2) throw DimensionError("sweep: corpus clip " + std::to_string(i) + " is not stereo");
    const double gt_ratio = channel_log_energy_ratio(x);

    MatrixF mono_m = 0.5f * (x.samples().row(0) + x.samples().row(1));
    const AudioBuffer mono(std::move(mono_m), x.sample_rate_hz());
    const LatentSequence z_l = frozen_ae.encode(x.channel(0));
    const LatentSequence z_r = frozen_ae.encode(x.channel(1));
    const auto post = g.forward(stack_streams(z_l, z_r).as_stacked_matrix());
    const Eigen::VectorXf c_gt = post.mu.col(0);

    Rng clip_rng = root.fork(7000 + i);
    const Eigen::VectorXf c0 = sample_prior(static_cast<int>(c_gt.size()), clip_rng).c;

    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      const auto lam = static_cast<float>(lambdas[li]);
      const Eigen::VectorXf c = lam * c_gt + (1.0f - lam) * c0;
      const AudioBuffer y = m2s_infer_waveform(f, frozen_ae, mono, c);
      const double out_ratio = channel_log_energy_ratio(y);
      gt[li].push_back(gt_ratio);
      pred[li].push_back(out_ratio);
      out.scatter.push_back({static_cast<int>(i), lambdas[li], gt_ratio, out_ratio});
    }
  }
  out.correlations.reserve(lambdas.size());
  for (std::size_t li = 0; li < lambdas.size(); ++li)
    out.correlations.push_back(pearson(gt[li], pred[li]));
  if (lambdas.size() >= 3) {
    out.trend_spearman = spearman_against_order(out.correlations);
    out.trend_p = increasing_trend_p(out.correlations);
  }
  return out;
}

std::string sweep_scatter_csv(const SweepResult& r) {
  std::ostringstream out;
  out.precision(10);
  out << "clip_id,lambda,gt_ratio,out_ratio\n";
  for (const auto& p : r.scatter)
    out << p.clip_id << "," << p.lambda << "," << p.gt_ratio << "," << p.out_ratio << "\n";
  return out.str();
}

std::string sweep_summary_csv(const SweepResult& r) {
  std::ostringstream out;
  out.precision(10);
  out << "lambda,pearson\n";
  for (std::size_t i = 0; i < r.lambdas.size(); ++i)
    out << r.lambdas[i] << "," << r.correlations[i] << "\n";
  return out.str();
}

}  // namespace reenc
