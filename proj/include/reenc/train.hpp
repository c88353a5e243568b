// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "reenc/checkpoint.hpp"
#include "reenc/config.hpp"
#include "reenc/latent_io.hpp"
#include "reenc/losses.hpp"
#include "reenc/model/discriminator.hpp"
#include "reenc/model/f_theta.hpp"
#include "reenc/model/g_phi.hpp"
#include "reenc/vae.hpp"

namespace reenc {

struct TrainingPair {
  LatentSequence z_in;
  AnyLatent z_tgt;  // LatentSequence for BWE, StackedLatent for M2S
};

// Decimate by 2 with the anti-aliasing resampler, sinc-upsample back, then
// encode both sides. The pair shares T because the round trip preserves
// length (trimmed when the odd-length upsample overshoots by one sample).
TrainingPair make_bwe_pair(ToyVAE& frozen_ae, const AudioBuffer& x_fullband);

// Mono fold-down (L+R)/2 as input, per-channel encodings stacked as target.
TrainingPair make_m2s_pair(ToyVAE& frozen_ae, const AudioBuffer& x_stereo);

// Linear warmup to base_lr, flat afterwards.
double lr_at(std::int64_t step, double base_lr, std::int64_t warmup_steps);

nlohmann::json model_spec_to_json(const ModelSpec& s);
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json cond_spec_to_json(const ConditioningEncoderSpec& s);
ConditioningEncoderSpec cond_spec_from_json(const nlohmann::json& j);
nlohmann::json disc_spec_to_json(const DiscriminatorSpec& s);
DiscriminatorSpec disc_spec_from_json(const nlohmann::json& j);

// One optimization step's bookkeeping. step is 1-based (counts completed
// updates); the logged learning rates are exactly lr_at(step).
struct StepRecord {
  std::int64_t step = 0;
  LossReport gen;                    // composed model objective
  std::optional<double> disc_loss;   // absent while adversarial terms are off
  double lr_main = 0.0;
  double lr_disc = 0.0;
};

std::string format_step_record(const StepRecord& r);

struct BweTrainerState {
  TrainingConfig cfg;
  ModelSpec model_spec;
  DiscriminatorSpec disc_spec;
  FTheta<float> f;
  Discriminator<float> d;
  nn::AdamW<float> opt_f;
  nn::AdamW<float> opt_d;
  std::int64_t step = 0;

  BweTrainerState(const TrainingConfig& c, const ModelSpec& ms, const DiscriminatorSpec& ds);
};

BweTrainerState make_bwe_trainer(const TrainingConfig& cfg, const ModelSpec& model_spec,
                                 const DiscriminatorSpec& disc_spec);

// Discriminator phase: LSGAN update on real targets vs current predictions.
// Prediction latents are treated as constants (no predictor gradients).
double bwe_disc_update(BweTrainerState& st, const std::vector<TrainingPair>& batch);

// Generator phase: reconstruction + adversarial + feature-matching update of
// the predictor. Discriminator parameters are read, never stepped.
LossReport bwe_gen_update(BweTrainerState& st, const std::vector<TrainingPair>& batch);

// One full step: discriminator update, then generator update, step counter +1.
StepRecord train_step_bwe(BweTrainerState& st, const std::vector<TrainingPair>& batch);

struct M2sTrainerState {
  TrainingConfig cfg;
  ModelSpec model_spec;
  ConditioningEncoderSpec cond_spec;
  FTheta<float> f;
  GPhi<float> g;
  nn::AdamW<float> opt;
  std::int64_t step = 0;
  Rng eps_rng;  // reparameterization noise; checkpointed

  M2sTrainerState(const TrainingConfig& c, const ModelSpec& ms, const ConditioningEncoderSpec& cs);
};

M2sTrainerState make_m2s_trainer(const TrainingConfig& cfg, const ModelSpec& model_spec,
                                 const ConditioningEncoderSpec& cond_spec);

// Joint predictor + conditioning-encoder update; gradients reach the encoder
// through the reparameterized condition vector.
StepRecord train_step_m2s(M2sTrainerState& st, const std::vector<TrainingPair>& batch);

// ---- checkpointing ----

Checkpoint bwe_state_to_checkpoint(BweTrainerState& st);
BweTrainerState bwe_state_from_checkpoint(const Checkpoint& ck);
void save_bwe_state(BweTrainerState& st, const std::string& path);
BweTrainerState load_bwe_state(const std::string& path);

Checkpoint m2s_state_to_checkpoint(M2sTrainerState& st);
M2sTrainerState m2s_state_from_checkpoint(const Checkpoint& ck);
void save_m2s_state(M2sTrainerState& st, const std::string& path);
M2sTrainerState load_m2s_state(const std::string& path);

// ---- deterministic data order ----

// Fixed pool of precomputed pairs. The pair used at global position p
// (p = step * batch_size + j) is a pure function of (seed, p): the pool order
// is reshuffled once per epoch with a seed-derived generator, so resumed runs
// see the byte-identical batch stream.
class PairPool {
 public:
  PairPool(std::vector<TrainingPair> pairs, std::uint64_t seed);

  const TrainingPair& at_position(std::int64_t position) const;
  std::size_t size() const { return pairs_.size(); }

 private:
  std::vector<TrainingPair> pairs_;
  std::uint64_t seed_;
  mutable std::int64_t cached_epoch_ = -1;
  mutable std::vector<std::uint32_t> order_;
};

// Chunk every corpus clip (partial tails dropped) and build pairs.
std::vector<TrainingPair> build_bwe_pairs(ToyVAE& frozen_ae, const std::vector<AudioBuffer>& corpus,
                                          double chunk_seconds);
std::vector<TrainingPair> build_m2s_pairs(ToyVAE& frozen_ae, const std::vector<AudioBuffer>& corpus,
                                          double chunk_seconds);

struct TrainLoopOptions {
  std::int64_t run_steps = -1;  // -1 runs to cfg.total_steps
  std::string checkpoint_path;
  std::int64_t checkpoint_every = 0;  // 0 saves only at the end (when path set)
  std::ostream* log = nullptr;
  std::int64_t log_every = 25;
};

std::vector<StepRecord> run_bwe_training(BweTrainerState& st, const PairPool& pool,
                                         const TrainLoopOptions& opts = {});
std::vector<StepRecord> run_m2s_training(M2sTrainerState& st, const PairPool& pool,
                                         const TrainLoopOptions& opts = {});

// ---- inference ----

// x at the autoencoder rate is used as-is (assumed band-limited); x at half
// that rate is sinc-upsampled first.
AudioBuffer bwe_infer_waveform(FTheta<float>& f, ToyVAE& frozen_ae, const AudioBuffer& x);

// Mono at the autoencoder rate -> stereo of the same length.
AudioBuffer m2s_infer_waveform(FTheta<float>& f, ToyVAE& frozen_ae, const AudioBuffer& mono,
                               const Eigen::VectorXf& c);

// ---- toy VAE persistence (shared container) ----

nlohmann::json vae_config_to_json(const ToyVAEConfig& cfg);
ToyVAEConfig vae_config_from_json(const nlohmann::json& j);
void save_vae(ToyVAE& vae, const std::string& path);
ToyVAE load_vae(const std::string& path);

}  // namespace reenc
