#pragma once

#include "hmsyn/common.hpp"
#include "hmsyn/headmotion.hpp"
#include "hmsyn/models.hpp"
#include "hmsyn/signal.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hmsyn::pipeline {

struct ManifestEntry {
  std::string id;
  std::string audio_path;   // .wav clip or .fmat frame matrix
  std::string motion_path;  // motion CSV
  std::string mask_path;    // speaking-mask CSV, may be empty
  std::string split;        // train | valid | test
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> split(const std::string& name) const;
};

/// Manifest CSV: header `id,audio,motion,mask,split`; relative paths are
/// resolved against the manifest's directory on load.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest);

struct RunConfig {
  double alpha = 1.0;
  int embed_dim = 30;
  int hidden_dim = 60;
  int context_half_window = 25;
  int cca_window = 300;
  int postfilter_window = 50;
  signal::FeatureKind feature = signal::FeatureKind::Embed;
  bool use_mask = true;
  std::uint64_t seed = 0;

  int batch_size = 512;
  int cccae_epochs = 30;
  int pretrain_epochs = 4;
  int regressor_epochs = 6;
  int postfilter_epochs = 80;
  int regressor_stride = 2;  // train the regressor on every n-th frame
  int patience = 10;
  double validation_fraction = 0.1;
  double learning_rate = 2e-4;
};

/// Generator for the paired synthetic corpus. Audio carries a few
/// frame-coherent tone components whose amplitudes follow the motion latent,
/// buried under a larger bank of independently modulated nuisance tones and
/// broadband noise; motion is the smoothed latent plus observation noise.
struct SyntheticSpec {
  double duration_s = 600.0;  // total across all utterances
  int utterances = 10;
  int latent_dim = 3;
  double latent_cutoff_hz = 4.0;
  int nuisance_tones = 36;
  double motion_noise = 0.01;   // radians
  double audio_noise = 0.02;    // broadband amplitude
  double signal_tone_amp = 0.02;
  double duty_cycle = 0.7;
  std::uint64_t seed = 0;
};

/// Flat `key = value` config text; `#` starts a comment. Unknown keys are
/// errors.
std::map<std::string, std::string> read_config_file(const std::string& path);
void apply_config(RunConfig& cfg,
                  const std::map<std::string, std::string>& kv);
void apply_config(SyntheticSpec& spec,
                  const std::map<std::string, std::string>& kv);

/// Writes WAVs, motion CSVs, mask CSVs and manifest.csv under out_dir with a
/// 60/20/20 train/valid/test split; returns the manifest.
Manifest generate_synthetic_corpus(const SyntheticSpec& spec,
                                   const std::string& out_dir);

/// One utterance loaded and frame-aligned: raw waveform frames, motion and
/// mask truncated to a common length.
struct LoadedUtterance {
  std::string id;
  signal::WaveFrameMatrix frames;
  headmotion::HeadMotionSequence motion;
  models::SpeakingMask mask;
};

LoadedUtterance load_utterance(const ManifestEntry& entry, bool use_mask);

models::SpeakingMask read_mask_csv(const std::string& path);
void write_mask_csv(const std::string& path, const models::SpeakingMask& mask);

/// Trains the full stack from the train split: normalization stats, CCCAE
/// (skipped for non-embed features), regressor, post-filter. Writes
/// norm.stats, cccae.model, regressor.model, postfilter.model and run.log
/// into out_dir.
void run_training(const Manifest& manifest, const RunConfig& cfg,
                  const std::string& out_dir);

struct PredictFlags {
  bool use_mask = true;  // accepted for interface parity; synthesis always
                         // covers every frame
  bool postfilter = false;
};

/// Predicts per-utterance motion CSVs for a split using models from
/// models_dir.
void run_prediction(const Manifest& manifest, const std::string& split,
                    const std::string& models_dir, const PredictFlags& flags,
                    const std::string& out_dir);

struct EvalOptions {
  std::string system = "system";
  int cca_window = 300;
  std::uint64_t seed = 0;
  bool with_chance = true;
};

/// Evaluates predictions against ground truth: per-utterance JSON reports
/// plus an aligned-text summary table in out_dir.
void run_evaluation(const Manifest& manifest, const std::string& split,
                    const std::string& pred_dir, const std::string& out_dir,
                    const EvalOptions& options);

/// Extracts one feature kind for every entry of a split ("all" for every
/// entry) into out_dir as <id>.<kind>.fmat, unnormalized.
void run_feature_extraction(const Manifest& manifest, const std::string& split,
                            signal::FeatureKind kind,
                            const std::string& out_dir);

// Stage configs derived from RunConfig (seeds mixed per stage).
nn::TrainConfig cccae_train_config(const RunConfig& cfg);
nn::TrainConfig regressor_train_config(const RunConfig& cfg);
nn::TrainConfig postfilter_train_config(const RunConfig& cfg);

}  // namespace hmsyn::pipeline
