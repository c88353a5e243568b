// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "reenc/experiments.hpp"

using namespace reenc;
namespace fs = std::filesystem;

namespace {

// Minutes-scale presets shrunk to seconds for the harness.
ExperimentManifest micro_bwe(const std::string& out_dir) {
  KeyValues kv{{"preset", "desk-bwe"},
               {"id", "micro-bwe"},
               {"out_dir", out_dir},
               {"train_clips", "3"},
               {"eval_clips", "2"},
               {"vae.steps", "30"},
               {"model.num_blocks", "1"},
               {"model.hidden_dim", "16"},
               {"disc.internal_channels", "4"},
               {"training.total_steps", "4"},
               {"training.warmup_main", "2"},
               {"training.warmup_disc", "2"},
               {"training.adv_delay_steps", "1"},
               {"training.chunk_seconds", "0.5"}};
  return manifest_from_key_values(kv);
}

ExperimentManifest micro_m2s(const std::string& out_dir) {
  KeyValues kv{{"preset", "desk-m2s"},
               {"id", "micro-m2s"},
               {"out_dir", out_dir},
               {"train_clips", "3"},
               {"eval_clips", "2"},
               {"sweep_clips", "3"},
               {"sweep.lambdas", "0,1"},
               {"vae.steps", "30"},
               {"model.num_blocks", "1"},
               {"model.hidden_dim", "16"},
               {"cond.num_blocks", "1"},
               {"cond.hidden_dim", "16"},
               {"training.total_steps", "4"},
               {"training.warmup_main", "2"},
               {"training.warmup_disc", "2"},
               {"training.chunk_seconds", "0.5"}};
  return manifest_from_key_values(kv);
}

}  // namespace

TEST_CASE("manifest grammar: presets, overrides, rejects") {
  const ExperimentManifest desk = ExperimentManifest::desk_bwe();
  CHECK(desk.task == Task::Bwe);
  CHECK(desk.training.total_steps <= 2000);
  CHECK(desk.model_spec.variant == "S");
  desk.validate();
  ExperimentManifest::desk_m2s().validate();
  ExperimentManifest::full_bwe().validate();
  ExperimentManifest::full_m2s().validate();

  const ExperimentManifest full = ExperimentManifest::full_bwe();
  CHECK(full.training.batch_size == 256);
  CHECK(full.training.total_steps == 250000);
  CHECK(full.training.chunk_seconds == doctest::Approx(1.4));
  CHECK(full.vae_config.downsample_factor == 1024);

  KeyValues kv{{"preset", "desk-m2s"}, {"seed", "17"}, {"training.batch_size", "8"}};
  const ExperimentManifest m = manifest_from_key_values(kv);
  CHECK(m.seed == 17);
  CHECK(m.training.seed == 17);
  CHECK(m.training.batch_size == 8);
  CHECK(m.task == Task::M2s);

  CHECK_THROWS_AS(manifest_from_key_values(KeyValues{{"preset", "nope"}}), ConfigError);
  CHECK_THROWS_AS(manifest_from_key_values(KeyValues{{"bogus_key", "1"}}), ConfigError);
  CHECK_THROWS_AS(manifest_from_key_values(KeyValues{{"train_clips", "three"}}), ConfigError);
  CHECK_THROWS_AS(manifest_from_key_values(KeyValues{{"preset", "desk-m2s"}, {"sweep.lambdas", "0,x"}}),
                  ConfigError);
  CHECK_THROWS_AS(manifest_from_key_values(KeyValues{{"preset", "desk-m2s"}, {"sweep.lambdas", "0,2"}}),
                  ConfigError);

  // Hash is stable under re-serialization, sensitive to any field.
  CHECK(manifest_hash(m) == manifest_hash(manifest_from_key_values(kv)));
  KeyValues kv2 = kv;
  kv2["seed"] = "18";
  CHECK(manifest_hash(m) != manifest_hash(manifest_from_key_values(kv2)));
}

TEST_CASE("manifest files load through the shared config grammar") {
  const auto path = (fs::temp_directory_path() / "reenc_manifest.cfg").string();
  {
    std::ofstream f(path);
    f << "# micro experiment\n";
    f << "preset = desk-bwe\n";
    f << "seed = 9\n";
    f << "training.total_steps = 300\n";
  }
  const ExperimentManifest m = load_manifest(path);
  CHECK(m.seed == 9);
  CHECK(m.training.total_steps == 300);
  fs::remove(path);
}

TEST_CASE("every shipped config file loads and validates") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(REENC_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    const ExperimentManifest m = load_manifest(entry.path().string());
    CHECK(!m.id.empty());
    ++seen;
  }
  CHECK(seen >= 4);
}

TEST_CASE("bwe experiment: row contract, provenance, determinism") {
  const auto out1 = (fs::temp_directory_path() / "reenc_exp_bwe1").string();
  const auto out2 = (fs::temp_directory_path() / "reenc_exp_bwe2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);

  const BweExperimentResult r1 = run_bwe_experiment(micro_bwe(out1));
  REQUIRE(r1.report.rows.size() == 4);
  CHECK(r1.report.rows[0].label == "autoencoder reconstruction");
  CHECK(r1.report.rows[1].label == "unprocessed low-band input");
  CHECK(r1.report.rows[2].label == "latent module (L1)");
  CHECK(r1.report.rows[3].label == "latent module (L1 + discriminator)");
  CHECK(!r1.report.rows[0].gflops_per_audio_second.has_value());
  CHECK(r1.report.rows[2].gflops_per_audio_second.has_value());
  for (const auto& row : r1.report.rows) {
    REQUIRE(row.banded.has_value());
    CHECK(row.banded->stft_d.full >= 0.0);
    CHECK(!row.stereo.has_value());
  }
  r1.report.validate();

  CHECK(r1.report.provenance.contains("manifest_hash"));
  CHECK(r1.report.provenance.contains("vae_hash"));
  CHECK(r1.report.provenance.contains("l1_hash"));
  CHECK(r1.report.provenance.contains("full_hash"));
  CHECK(fs::exists(fs::path(out1) / "manifest.json"));
  CHECK(fs::exists(fs::path(out1) / "reports" / "bwe.json"));
  CHECK(fs::exists(fs::path(out1) / "reports" / "bwe.txt"));
  CHECK(fs::exists(r1.vae_checkpoint_path));
  CHECK(fs::exists(r1.l1_checkpoint_path));
  CHECK(fs::exists(r1.full_checkpoint_path));

  const EvalReport loaded = load_report((fs::path(out1) / "reports" / "bwe.json").string());
  CHECK(loaded.rows.size() == 4);
  CHECK(loaded.rows[3].label == r1.report.rows[3].label);

  // Same manifest (different out_dir): every reported scalar reproduces.
  const BweExperimentResult r2 = run_bwe_experiment(micro_bwe(out2));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r1.report.rows[i].banded->stft_d.full == r2.report.rows[i].banded->stft_d.full);
    CHECK(r1.report.rows[i].banded->mel_d.high == r2.report.rows[i].banded->mel_d.high);
  }
  CHECK(r1.report.provenance["vae_hash"] == r2.report.provenance["vae_hash"]);
  CHECK(r1.report.provenance["full_hash"] == r2.report.provenance["full_hash"]);

  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("bwe experiment: missing external autoencoder names the dependency") {
  const auto out = (fs::temp_directory_path() / "reenc_exp_missing").string();
  fs::remove_all(out);
  ExperimentManifest m = micro_bwe(out);
  m.vae_checkpoint = "/does/not/exist.reck";
  CHECK_THROWS_AS(run_bwe_experiment(m), ArtifactError);
  fs::remove_all(out);
}

TEST_CASE("m2s experiment: row contract and sweep artifacts") {
  const auto out = (fs::temp_directory_path() / "reenc_exp_m2s").string();
  fs::remove_all(out);

  const M2sExperimentResult r = run_m2s_experiment(micro_m2s(out));
  REQUIRE(r.report.rows.size() == 3);
  CHECK(r.report.rows[0].label == "autoencoder stereo reconstruction");
  CHECK(r.report.rows[1].label == "prior condition (blind upmix)");
  CHECK(r.report.rows[2].label == "oracle condition");
  for (const auto& row : r.report.rows) {
    REQUIRE(row.stereo.has_value());
    CHECK(!row.banded.has_value());
  }
  CHECK(r.report.rows[1].gflops_per_audio_second.has_value());
  r.report.validate();

  CHECK(r.sweep.lambdas == std::vector<double>{0.0, 1.0});
  CHECK(r.sweep.scatter.size() == 6);  // 3 clips x 2 lambdas
  CHECK(fs::exists(r.scatter_csv_path));
  CHECK(fs::exists(fs::path(out) / "sweeps" / "summary.csv"));
  CHECK(fs::exists(fs::path(out) / "reports" / "m2s.json"));
  CHECK(r.report.provenance.contains("m2s_hash"));
  CHECK(r.report.provenance["sweep"]["lambdas"].size() == 2);

  fs::remove_all(out);
}
