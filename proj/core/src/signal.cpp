#include "hmsyn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace hmsyn::signal {

namespace {

using std::numbers::pi;

void check_4khz(const AudioClip& audio, const char* op) {
  if (audio.sample_rate != kSampleRate) {
    throw DataError(std::string(op) + ": expected " +
                    std::to_string(kSampleRate) + " Hz audio, got " +
                    std::to_string(audio.sample_rate) + " Hz");
  }
}

// Iterative radix-2 FFT, n a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> hamming_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.54 - 0.46 * std::cos(2.0 * pi * i / (n - 1));
  }
  return w;
}

// Triangular mel filterbank as a (filters x bins) weight matrix over the
// one-sided power spectrum of a kFftSize FFT.
Matrix mel_filterbank() {
  const int bins = kFftSize / 2 + 1;
  const double mel_lo = hz_to_mel(kMelLowHz);
  const double mel_hi = hz_to_mel(kMelHighHz);
  std::vector<double> edges(kNumMelFilters + 2);
  for (int i = 0; i < kNumMelFilters + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_to_hz(
        mel_lo + (mel_hi - mel_lo) * i / (kNumMelFilters + 1));
  }
  Matrix fb = Matrix::Zero(kNumMelFilters, bins);
  for (int f = 0; f < kNumMelFilters; ++f) {
    const double lo = edges[static_cast<std::size_t>(f)];
    const double mid = edges[static_cast<std::size_t>(f + 1)];
    const double hi = edges[static_cast<std::size_t>(f + 2)];
    for (int k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * kSampleRate / kFftSize;
      if (hz > lo && hz < mid) {
        fb(f, k) = (hz - lo) / (mid - lo);
      } else if (hz >= mid && hz < hi) {
        fb(f, k) = (hi - hz) / (hi - mid);
      }
    }
  }
  return fb;
}

// Orthonormal DCT-II rows 1..12 over kNumMelFilters inputs.
Matrix dct_matrix(int n_out, int n_in) {
  Matrix d(n_out, n_in);
  for (int j = 1; j <= n_out; ++j) {
    for (int m = 0; m < n_in; ++m) {
      d(j - 1, m) = std::sqrt(2.0 / n_in) *
                    std::cos(pi * j * (2.0 * m + 1.0) / (2.0 * n_in));
    }
  }
  return d;
}

double floored_log(double x) { return std::log(std::max(x, 1e-10)); }

// Per-frame log mel energies (T x 26) and raw-frame log energy (T).
void spectral_features(const AudioClip& audio, Matrix& log_mel,
                       Vector& log_energy) {
  const WaveFrameMatrix frames = frame_waveform(audio);
  const Eigen::Index t_count = frames.data.rows();
  static const std::vector<double> window = hamming_window(kFrameLen);
  static const Matrix fb = mel_filterbank();

  log_mel.resize(t_count, kNumMelFilters);
  log_energy.resize(t_count);
  std::vector<std::complex<double>> buf(kFftSize);
  Vector power(kFftSize / 2 + 1);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    double energy = 0.0;
    for (int i = 0; i < kFrameLen; ++i) {
      const double s = frames.data(t, i);
      energy += s * s;
      buf[static_cast<std::size_t>(i)] = s * window[static_cast<std::size_t>(i)];
    }
    for (int i = kFrameLen; i < kFftSize; ++i)
      buf[static_cast<std::size_t>(i)] = 0.0;
    fft_inplace(buf);
    for (int k = 0; k <= kFftSize / 2; ++k)
      power[k] = std::norm(buf[static_cast<std::size_t>(k)]);
    const Vector mel = fb * power;
    for (int f = 0; f < kNumMelFilters; ++f)
      log_mel(t, f) = floored_log(mel[f]);
    log_energy[t] = floored_log(energy);
  }
}

}  // namespace

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Mfcc39: return "mfcc39";
    case FeatureKind::Fbank27: return "fbank27";
    case FeatureKind::F0e6: return "f0e6";
    case FeatureKind::Wave100: return "wave100";
    case FeatureKind::Embed: return "embed";
    case FeatureKind::Generic: return "generic";
  }
  return "generic";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "mfcc39") return FeatureKind::Mfcc39;
  if (name == "fbank27") return FeatureKind::Fbank27;
  if (name == "f0e6") return FeatureKind::F0e6;
  if (name == "wave100") return FeatureKind::Wave100;
  if (name == "embed") return FeatureKind::Embed;
  if (name == "generic") return FeatureKind::Generic;
  throw UsageError("unknown feature kind: " + name);
}

int expected_dim(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Mfcc39: return 39;
    case FeatureKind::Fbank27: return 27;
    case FeatureKind::F0e6: return 6;
    case FeatureKind::Wave100: return 100;
    default: return -1;
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> mel_filter_centers_hz() {
  const double mel_lo = hz_to_mel(kMelLowHz);
  const double mel_hi = hz_to_mel(kMelHighHz);
  std::vector<double> centers(kNumMelFilters);
  for (int f = 0; f < kNumMelFilters; ++f) {
    centers[static_cast<std::size_t>(f)] = mel_to_hz(
        mel_lo + (mel_hi - mel_lo) * (f + 1) / (kNumMelFilters + 1));
  }
  return centers;
}

FeatureMatrix to_features(const WaveFrameMatrix& frames) {
  return FeatureMatrix{frames.data, FeatureKind::Wave100, frames.frame_rate};
}

WaveFrameMatrix frame_waveform(const AudioClip& audio) {
  check_4khz(audio, "frame_waveform");
  const auto n = static_cast<Eigen::Index>(audio.samples.size());
  if (n < kFrameLen) {
    throw DataError("frame_waveform: clip has " + std::to_string(n) +
                    " samples; at least " + std::to_string(kFrameLen) +
                    " are required");
  }
  const Eigen::Index t_count = (n - kFrameLen) / kFrameShift + 1;
  WaveFrameMatrix out;
  out.data.resize(t_count, kFrameLen);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (int i = 0; i < kFrameLen; ++i) {
      out.data(t, i) =
          audio.samples[static_cast<std::size_t>(t * kFrameShift + i)];
    }
  }
  return out;
}

FeatureMatrix compute_fbank(const AudioClip& audio) {
  Matrix log_mel;
  Vector log_energy;
  spectral_features(audio, log_mel, log_energy);
  FeatureMatrix out;
  out.kind = FeatureKind::Fbank27;
  out.data.resize(log_mel.rows(), kNumMelFilters + 1);
  out.data.leftCols(kNumMelFilters) = log_mel;
  out.data.col(kNumMelFilters) = log_energy;
  return out;
}

FeatureMatrix compute_mfcc(const AudioClip& audio) {
  Matrix log_mel;
  Vector log_energy;
  spectral_features(audio, log_mel, log_energy);
  static const Matrix dct = dct_matrix(12, kNumMelFilters);

  FeatureMatrix base;
  base.data.resize(log_mel.rows(), 13);
  base.data.col(0) = log_energy;
  base.data.rightCols(12) = log_mel * dct.transpose();
  FeatureMatrix out = append_deltas(base);
  out.kind = FeatureKind::Mfcc39;
  return out;
}

FeatureMatrix compute_f0_energy(const AudioClip& audio) {
  check_4khz(audio, "compute_f0_energy");
  const WaveFrameMatrix frames = frame_waveform(audio);
  const Eigen::Index t_count = frames.data.rows();
  const int lag_min = static_cast<int>(std::floor(kSampleRate / kF0MaxHz));
  const int lag_max = static_cast<int>(std::ceil(kSampleRate / kF0MinHz));

  FeatureMatrix base;
  base.data.resize(t_count, 2);
  std::vector<double> r(static_cast<std::size_t>(lag_max) + 2, 0.0);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const auto frame = frames.data.row(t);
    const double energy = frame.squaredNorm();
    base.data(t, 1) = floored_log(energy);

    // Normalized autocorrelation over the voiced lag range.
    int best_lag = 0;
    double best_r = 0.0;
    for (int lag = lag_min - 1; lag <= lag_max + 1 && lag < kFrameLen; ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      for (int i = 0; i + lag < kFrameLen; ++i) {
        num += frame[i] * frame[i + lag];
        e0 += frame[i] * frame[i];
        e1 += frame[i + lag] * frame[i + lag];
      }
      const double denom = std::sqrt(e0 * e1);
      r[static_cast<std::size_t>(lag)] = (denom > 1e-20) ? num / denom : 0.0;
      if (lag >= lag_min && lag <= lag_max &&
          r[static_cast<std::size_t>(lag)] > best_r) {
        best_r = r[static_cast<std::size_t>(lag)];
        best_lag = lag;
      }
    }
    double f0 = 0.0;
    if (best_lag > 0 && best_r > kVoicingThreshold) {
      double lag_refined = best_lag;
      const double rm = r[static_cast<std::size_t>(best_lag) - 1];
      const double rc = r[static_cast<std::size_t>(best_lag)];
      const double rp = r[static_cast<std::size_t>(best_lag) + 1];
      const double denom = rm - 2.0 * rc + rp;
      if (std::abs(denom) > 1e-20) {
        const double delta = std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
        lag_refined += delta;
      }
      f0 = kSampleRate / lag_refined;
    }
    base.data(t, 0) = f0;
  }

  FeatureMatrix smoothed = smooth_moving_average(base, 10);
  FeatureMatrix out = append_deltas(smoothed);
  out.kind = FeatureKind::F0e6;
  return out;
}

FeatureMatrix append_deltas(const FeatureMatrix& features) {
  const Eigen::Index t_count = features.data.rows();
  const Eigen::Index d = features.data.cols();
  if (t_count < 5) {
    throw DataError("append_deltas: need at least 5 frames, got " +
                    std::to_string(t_count));
  }
  // delta_t = sum_k k * (x[t+k] - x[t-k]) / (2 * sum_k k^2), k in {1, 2},
  // with boundary frames replicated.
  auto delta_of = [t_count, d](const Matrix& x) {
    Matrix out(t_count, d);
    auto clamp_row = [t_count](Eigen::Index i) {
      return std::clamp<Eigen::Index>(i, 0, t_count - 1);
    };
    for (Eigen::Index t = 0; t < t_count; ++t) {
      out.row(t) = (1.0 * (x.row(clamp_row(t + 1)) - x.row(clamp_row(t - 1))) +
                    2.0 * (x.row(clamp_row(t + 2)) - x.row(clamp_row(t - 2)))) /
                   10.0;
    }
    return out;
  };

  const Matrix delta = delta_of(features.data);
  const Matrix delta2 = delta_of(delta);
  FeatureMatrix out;
  out.kind = features.kind;
  out.frame_rate = features.frame_rate;
  out.data.resize(t_count, 3 * d);
  out.data.leftCols(d) = features.data;
  out.data.middleCols(d, d) = delta;
  out.data.rightCols(d) = delta2;
  return out;
}

FeatureMatrix smooth_moving_average(const FeatureMatrix& features,
                                    int window) {
  if (window < 1) throw UsageError("smooth_moving_average: window must be >= 1");
  const Eigen::Index t_count = features.data.rows();
  FeatureMatrix out = features;
  if (window == 1 || t_count == 0) return out;
  const Eigen::Index back = window / 2;
  const Eigen::Index fwd = (window - 1) / 2;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - back);
    const Eigen::Index hi = std::min<Eigen::Index>(t_count - 1, t + fwd);
    out.data.row(t) =
        features.data.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return out;
}

NormStats fit_norm_stats(const Matrix& data, bool center) {
  if (data.rows() < 2) {
    throw DataError("fit_norm_stats: need at least 2 rows to estimate");
  }
  if (!data.allFinite()) {
    throw NumericalError("fit_norm_stats: non-finite input");
  }
  NormStats stats;
  stats.center = center;
  stats.mean = data.colwise().mean();
  stats.stddev.resize(data.cols());
  const auto t_count = static_cast<double>(data.rows());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double var =
        (data.col(c).array() - stats.mean[c]).square().sum() / t_count;
    if (var < 1e-24) {
      warn("fit_norm_stats: dimension " + std::to_string(c) +
           " has zero variance; std clamped to 1");
      stats.stddev[c] = 1.0;
    } else {
      stats.stddev[c] = std::sqrt(var);
    }
  }
  return stats;
}

Matrix apply_norm_stats(const Matrix& data, const NormStats& stats) {
  if (data.cols() != stats.dim()) {
    throw DataError("apply_norm_stats: dimension mismatch (" +
                    std::to_string(data.cols()) + " vs " +
                    std::to_string(stats.dim()) + ")");
  }
  Matrix out = data;
  if (stats.center) out.rowwise() -= stats.mean.transpose();
  out.array().rowwise() /= stats.stddev.transpose().array();
  return out;
}

std::pair<FeatureMatrix, NormStats> variance_normalize(
    const FeatureMatrix& features, const std::optional<NormStats>& stats) {
  NormStats used =
      stats ? *stats
            : fit_norm_stats(features.data,
                             features.kind != FeatureKind::Wave100);
  FeatureMatrix out = features;
  out.data = apply_norm_stats(features.data, used);
  return {std::move(out), std::move(used)};
}

}  // namespace hmsyn::signal
