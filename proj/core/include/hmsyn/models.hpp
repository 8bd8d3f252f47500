#pragma once

#include "hmsyn/audio.hpp"
#include "hmsyn/common.hpp"
#include "hmsyn/headmotion.hpp"
#include "hmsyn/nn.hpp"
#include "hmsyn/signal.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hmsyn::models {

/// Per-frame speaking indicator; training restricts to speaking frames.
using SpeakingMask = std::vector<std::uint8_t>;

constexpr int kEmbedDim = 30;
constexpr int kCccaeHidden = 60;
constexpr int kContextHalfWindow = 25;
constexpr int kPostFilterWindow = 50;  // 500 ms at 100 Hz

/// Autoencoder over raw waveform frames whose bottleneck is pushed toward
/// head motion: objective = reconstruction MSE - alpha * canonical
/// correlation between the codes and the motion. alpha = 0 is a plain
/// autoencoder.
struct CccaeModel {
  nn::Mlp encoder;  // 100 -> 60 (tanh) -> 30 (linear)
  nn::Mlp decoder;  // 30 -> 60 (tanh) -> 100 (linear)
  double alpha = 0.0;
  signal::NormStats norm_stats;

  Eigen::Index embed_dim() const { return encoder.output_dim(); }
};

struct RegressorModel {
  nn::Mlp net;  // 51*D -> 256 (relu) -> 128 (relu) -> 3
  int context_half_window = kContextHalfWindow;
  signal::FeatureKind feature_kind = signal::FeatureKind::Embed;

  Eigen::Index feature_dim() const {
    return net.input_dim() / (2 * context_half_window + 1);
  }
};

struct PostFilterModel {
  nn::Mlp net;  // 150 -> 64 (tanh) -> 150
  int window = kPostFilterWindow;
};

/// Per-epoch objective terms logged during CCCAE training. The entry at
/// index 0 is evaluated before any update.
struct CccaeEpochLog {
  double recon_mse = 0.0;
  double cca = 0.0;
  double objective = 0.0;
  double valid_objective = 0.0;
};
using CccaeLog = std::vector<CccaeEpochLog>;

/// Trains the CCCAE on variance-normalized waveform frames paired with
/// frame-aligned motion. The mask is applied before training; layer-wise
/// pretraining runs first, then joint minibatch Adam on the composite
/// objective. `stats` is stored in the returned model for later encoding.
CccaeModel train_cccae(const Matrix& frames_norm,
                       const headmotion::HeadMotionSequence& motion,
                       const SpeakingMask& mask, double alpha,
                       const nn::TrainConfig& cfg,
                       const signal::NormStats& stats,
                       CccaeLog* log = nullptr, int embed_dim = kEmbedDim,
                       int hidden_dim = kCccaeHidden);

/// Row-wise encoder pass over normalized frames; kind Embed.
signal::FeatureMatrix encode(const CccaeModel& model,
                             const Matrix& frames_norm);
Matrix decode(const CccaeModel& model, const Matrix& embedded);

/// Row t = concatenation of rows t-h..t+h with edge replication;
/// output is T x ((2h+1) * D).
Matrix assemble_context(const Matrix& features, int half_window = kContextHalfWindow);

RegressorModel train_regressor(const signal::FeatureMatrix& features,
                               const headmotion::HeadMotionSequence& motion,
                               const SpeakingMask& mask,
                               const nn::TrainConfig& cfg);

/// Multi-utterance entry point: contexts already assembled (per utterance)
/// and stacked.
RegressorModel train_regressor_on_contexts(const Matrix& contexts,
                                           const Matrix& targets,
                                           const SpeakingMask& mask,
                                           signal::FeatureKind kind,
                                           int context_half_window,
                                           const nn::TrainConfig& cfg);

headmotion::HeadMotionSequence predict_motion(
    const RegressorModel& model, const signal::FeatureMatrix& features);

/// Non-overlapping `window`-frame blocks of a motion sequence flattened to
/// rows of 3*window values (frame-major).
Matrix motion_windows(const headmotion::HeadMotionSequence& motion,
                      int window = kPostFilterWindow);

PostFilterModel train_postfilter(const headmotion::HeadMotionSequence& clean,
                                 const nn::TrainConfig& cfg);
PostFilterModel train_postfilter_on_windows(const Matrix& windows,
                                            const nn::TrainConfig& cfg);

/// Sliding-window (hop 1) reconstruction; each output frame is the average
/// of every window reconstruction that covers it.
headmotion::HeadMotionSequence apply_postfilter(
    const PostFilterModel& model, const headmotion::HeadMotionSequence& motion);

/// Heuristic mask for real audio: frames whose log energy is above the
/// 30th percentile are treated as speaking.
SpeakingMask energy_speaking_mask(const signal::AudioClip& audio);

// Model container I/O: a UTF-8 header block (kind, hyperparameters, one
// `dense <in> <out> <activation>` line per layer), a blank line, then FMAT
// blobs in layer order (W then b), plus mean/std blobs for embedded stats.
void save_cccae(const std::string& path, const CccaeModel& model);
CccaeModel load_cccae(const std::string& path);
void save_regressor(const std::string& path, const RegressorModel& model);
RegressorModel load_regressor(const std::string& path);
void save_postfilter(const std::string& path, const PostFilterModel& model);
PostFilterModel load_postfilter(const std::string& path);
void save_norm_stats(const std::string& path, const signal::NormStats& stats,
                     signal::FeatureKind kind);
std::pair<signal::NormStats, signal::FeatureKind> load_norm_stats(
    const std::string& path);

}  // namespace hmsyn::models
