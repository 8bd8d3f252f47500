#pragma once

#include "hmsyn/audio.hpp"
#include "hmsyn/common.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hmsyn::signal {

// 25 ms windows with 10 ms shift at 4 kHz.
constexpr int kSampleRate = 4000;
constexpr int kFrameLen = 100;
constexpr int kFrameShift = 40;
constexpr double kFrameRate = 100.0;

constexpr int kNumMelFilters = 26;
constexpr double kMelLowHz = 0.0;
constexpr double kMelHighHz = 2000.0;
constexpr int kFftSize = 128;
// ln(1e-10); log energies never go below this, so silence is finite.
constexpr double kLogFloor = -23.025850929940457;

constexpr double kF0MinHz = 60.0;
constexpr double kF0MaxHz = 400.0;
constexpr double kVoicingThreshold = 0.3;

enum class FeatureKind { Mfcc39, Fbank27, F0e6, Wave100, Embed, Generic };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Expected column count for a kind, or -1 when the width is free
/// (Embed, Generic).
int expected_dim(FeatureKind kind);

/// T x D feature rows at a fixed frame rate.
struct FeatureMatrix {
  Matrix data;
  FeatureKind kind = FeatureKind::Generic;
  double frame_rate = kFrameRate;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

/// T x 100 raw waveform frames (no window function applied).
struct WaveFrameMatrix {
  Matrix data;
  double frame_rate = kFrameRate;

  Eigen::Index frames() const { return data.rows(); }
};

FeatureMatrix to_features(const WaveFrameMatrix& frames);

/// Per-dimension normalization parameters estimated on training data.
/// `center` records whether means are subtracted when the stats are applied;
/// raw waveform frames are scaled only.
struct NormStats {
  Vector mean;
  Vector stddev;
  bool center = true;

  Eigen::Index dim() const { return stddev.size(); }
};

WaveFrameMatrix frame_waveform(const AudioClip& audio);

/// 26 log mel-filterbank energies + log frame energy (D = 27).
FeatureMatrix compute_fbank(const AudioClip& audio);

/// Log energy + 12 mel-cepstral coefficients, with first and second
/// derivatives appended (D = 39).
FeatureMatrix compute_mfcc(const AudioClip& audio);

/// F0 (Hz, 0 when unvoiced) + log energy, moving-average smoothed, with
/// derivatives appended (D = 6).
FeatureMatrix compute_f0_energy(const AudioClip& audio);

/// Appends delta and delta-delta blocks: D_out = 3 * D_in. Deltas use a
/// +/-2 regression window with edge replication.
FeatureMatrix append_deltas(const FeatureMatrix& features);

/// Moving average over `window` frames (leaning one frame to the past for
/// even windows), truncated at the edges.
FeatureMatrix smooth_moving_average(const FeatureMatrix& features,
                                    int window = 10);

NormStats fit_norm_stats(const Matrix& data, bool center);
Matrix apply_norm_stats(const Matrix& data, const NormStats& stats);

/// Divides each column by its training standard deviation (and subtracts the
/// mean for every kind except raw waveform frames). When `stats` is supplied
/// they are applied unchanged; otherwise they are estimated from `features`.
std::pair<FeatureMatrix, NormStats> variance_normalize(
    const FeatureMatrix& features,
    const std::optional<NormStats>& stats = std::nullopt);

/// Center frequencies (Hz) of the mel filterbank; exposed so tests can check
/// filter placement directly.
std::vector<double> mel_filter_centers_hz();
double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace hmsyn::signal
