// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "reenc/report.hpp"
#include "reenc/sweep.hpp"
#include "reenc/synth.hpp"
#include "reenc/train.hpp"

namespace reenc {

// Everything needed to reproduce a desk-scale run: corpus generator settings,
// component recipes, and output layout. Loaded from the key=value grammar
// (preset first, then overrides); the resolved form is JSON, and its hash is
// embedded in every produced artifact.
struct ExperimentManifest {
  std::string id = "desk";
  Task task = Task::Bwe;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  SynthSpec synth;
  int train_clips = 48;
  int eval_clips = 24;
  int sweep_clips = 64;
  std::vector<double> sweep_lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};

  std::string vae_checkpoint;  // empty trains one from scratch
  int vae_steps = 2500;
  ToyVAEConfig vae_config = ToyVAEConfig::tiny();

  TrainingConfig training;
  ModelSpec model_spec;
  DiscriminatorSpec disc_spec;
  ConditioningEncoderSpec cond_spec;

  void validate() const;

  static ExperimentManifest desk_bwe();
  static ExperimentManifest desk_m2s();
  static ExperimentManifest full_bwe();
  static ExperimentManifest full_m2s();
};

nlohmann::json manifest_to_json(const ExperimentManifest& m);
std::string manifest_hash(const ExperimentManifest& m);

// Key=value form: a "preset" key picks the base manifest, remaining keys
// override scalar fields (id, seed, out_dir, clip counts, vae.steps,
// vae.checkpoint, model.*, disc.*, cond.*) or route into the training recipe
// under "training.<key>". Unknown keys are rejected.
ExperimentManifest manifest_from_key_values(const KeyValues& kv);
ExperimentManifest load_manifest(const std::string& path);

struct BweExperimentResult {
  EvalReport report;
  std::string vae_checkpoint_path;
  std::string l1_checkpoint_path;
  std::string full_checkpoint_path;
};

// Four rows against the raw full-band reference: the autoencoder round trip
// (upper bound), the decoded low-band input (degradation floor), and the
// latent module trained without and with the adversarial pair.
BweExperimentResult run_bwe_experiment(const ExperimentManifest& m, std::ostream* log = nullptr);

struct M2sExperimentResult {
  EvalReport report;
  SweepResult sweep;
  std::string vae_checkpoint_path;
  std::string checkpoint_path;
  std::string scatter_csv_path;
};

// Three rows against the raw stereo reference (autoencoder round trip,
// prior-sampled condition, oracle condition) plus the interpolation sweep.
M2sExperimentResult run_m2s_experiment(const ExperimentManifest& m, std::ostream* log = nullptr);

// Row builders shared with the acceptance harness; corpus clips must be at
// the autoencoder rate.
EvalRow bwe_vae_bound_row(ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus,
                          const BandSplitConfig& split);
EvalRow bwe_unprocessed_row(ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus,
                            const BandSplitConfig& split);
EvalRow bwe_model_row(const std::string& label, FTheta<float>& f, ToyVAE& vae,
                      const std::vector<AudioBuffer>& eval_corpus, const BandSplitConfig& split);
EvalRow m2s_vae_bound_row(ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus);
EvalRow m2s_prior_row(FTheta<float>& f, ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus,
                      std::uint64_t seed);
EvalRow m2s_oracle_row(FTheta<float>& f, GPhi<float>& g, ToyVAE& vae,
                       const std::vector<AudioBuffer>& eval_corpus);

}  // namespace reenc
