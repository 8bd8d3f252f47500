#include "hmsyn/audio.hpp"
#include "hmsyn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

namespace hmsyn::pipeline {

namespace {

using std::numbers::pi;

// Gaussian-smoothed unit-variance noise track of length n. The cutoff maps
// to the kernel width via sigma = frame_rate / (2 pi fc).
Vector smooth_latent(Eigen::Index n, double cutoff_hz, double frame_rate,
                     Rng& rng) {
  const double sigma = frame_rate / (2.0 * pi * cutoff_hz);
  const auto half = static_cast<Eigen::Index>(std::ceil(4.0 * sigma));
  Vector kernel(2 * half + 1);
  for (Eigen::Index i = -half; i <= half; ++i) {
    kernel[i + half] = std::exp(-0.5 * (i / sigma) * (i / sigma));
  }
  kernel /= kernel.norm();  // unit l2 norm keeps the output variance at 1

  Vector white(n + 2 * half);
  for (Eigen::Index i = 0; i < white.size(); ++i) white[i] = gaussian(rng);
  Vector out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    out[t] = kernel.dot(white.segment(t, 2 * half + 1));
  }
  return out;
}

// Alternating speaking/silent segments hitting the requested duty cycle.
models::SpeakingMask make_mask(Eigen::Index frames, double duty, Rng& rng) {
  models::SpeakingMask mask(static_cast<std::size_t>(frames), 1);
  if (duty >= 0.999) return mask;
  Eigen::Index t = 0;
  while (t < frames) {
    const auto speak = static_cast<Eigen::Index>(
        std::lround(uniform(rng, 1.5, 4.0) * 100.0));
    const auto silent = static_cast<Eigen::Index>(std::lround(
        static_cast<double>(speak) * (1.0 / duty - 1.0) *
        uniform(rng, 0.7, 1.3)));
    for (Eigen::Index i = 0; i < speak && t < frames; ++i, ++t) {
      mask[static_cast<std::size_t>(t)] = 1;
    }
    for (Eigen::Index i = 0; i < silent && t < frames; ++i, ++t) {
      mask[static_cast<std::size_t>(t)] = 0;
    }
  }
  return mask;
}

// Linear interpolation of a 100 Hz track at an audio sample position.
double track_at(const Vector& track, double frame_pos) {
  const auto n = track.size();
  if (frame_pos <= 0.0) return track[0];
  if (frame_pos >= static_cast<double>(n - 1)) return track[n - 1];
  const auto lo = static_cast<Eigen::Index>(std::floor(frame_pos));
  const double frac = frame_pos - static_cast<double>(lo);
  return (1.0 - frac) * track[lo] + frac * track[lo + 1];
}

}  // namespace

Manifest generate_synthetic_corpus(const SyntheticSpec& spec,
                                   const std::string& out_dir) {
  if (spec.duration_s < 60.0) {
    throw UsageError("synthetic corpus: duration must be >= 60 s for stable "
                     "windowed-correlation estimates");
  }
  if (spec.utterances < 1 || spec.latent_dim < 1) {
    throw UsageError("synthetic corpus: utterances and latent_dim must be "
                     ">= 1");
  }
  if (spec.duty_cycle <= 0.0 || spec.duty_cycle > 1.0) {
    throw UsageError("synthetic corpus: duty cycle must be in (0, 1]");
  }
  std::filesystem::create_directories(out_dir);

  const double dur_utt = spec.duration_s / spec.utterances;
  const auto frames = static_cast<Eigen::Index>(std::floor(dur_utt * 100.0));
  const Eigen::Index samples = 40 * frames + 60;  // last frame complete

  // Signal tones sit on multiples of 100 Hz, so every 40-sample frame shift
  // lands on the same phase and the component is one fixed direction in
  // frame space. Nuisance tones use the remaining multiples of 50 Hz.
  const std::vector<double> signal_freqs = {300.0, 600.0, 900.0};
  std::vector<double> nuisance_pool;
  for (double f = 150.0; f <= 1900.0; f += 50.0) {
    if (std::find(signal_freqs.begin(), signal_freqs.end(), f) ==
        signal_freqs.end()) {
      nuisance_pool.push_back(f);
    }
  }
  if (spec.nuisance_tones > static_cast<int>(nuisance_pool.size())) {
    throw UsageError("synthetic corpus: at most " +
                     std::to_string(nuisance_pool.size()) +
                     " nuisance tones are available");
  }

  Manifest manifest;
  for (int u = 0; u < spec.utterances; ++u) {
    Rng rng(mix_seed(spec.seed, 0x73796eULL + static_cast<std::uint64_t>(u)));

    // Latents first, in a fixed draw order.
    Matrix z(frames, spec.latent_dim);
    for (int j = 0; j < spec.latent_dim; ++j) {
      z.col(j) = smooth_latent(frames, spec.latent_cutoff_hz, 100.0, rng);
    }

    std::vector<double> nuis_freq(static_cast<std::size_t>(spec.nuisance_tones));
    std::vector<double> nuis_amp(nuis_freq.size());
    std::vector<double> nuis_phase(nuis_freq.size());
    std::vector<double> pool = nuisance_pool;
    std::shuffle(pool.begin(), pool.end(), rng);
    Matrix nuis_mod(frames, spec.nuisance_tones);
    for (int m = 0; m < spec.nuisance_tones; ++m) {
      nuis_freq[static_cast<std::size_t>(m)] = pool[static_cast<std::size_t>(m)];
      nuis_amp[static_cast<std::size_t>(m)] = uniform(rng, 0.03, 0.045);
      nuis_phase[static_cast<std::size_t>(m)] = uniform(rng, 0.0, 2.0 * pi);
      nuis_mod.col(m) = smooth_latent(frames, spec.latent_cutoff_hz, 100.0, rng);
    }

    const models::SpeakingMask mask = make_mask(frames, spec.duty_cycle, rng);

    // Motion: latent plus observation noise, mild per-axis scaling.
    const double axis_amp[3] = {0.15, 0.12, 0.10};
    headmotion::HeadMotionSequence motion;
    motion.data.resize(frames, 3);
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (int j = 0; j < 3; ++j) {
        const double latent =
            (j < spec.latent_dim) ? z(t, j) : 0.0;
        motion.data(t, j) = axis_amp[j] * latent +
                            spec.motion_noise * gaussian(rng);
      }
    }

    // Per-frame tone amplitude tracks.
    Matrix sig_amp(frames, static_cast<Eigen::Index>(signal_freqs.size()));
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (std::size_t j = 0; j < signal_freqs.size(); ++j) {
        const double latent =
            (static_cast<int>(j) < spec.latent_dim) ? z(t, static_cast<int>(j)) : 0.0;
        sig_amp(t, static_cast<Eigen::Index>(j)) =
            spec.signal_tone_amp * (1.0 + 0.6 * latent);
      }
    }

    signal::AudioClip clip;
    clip.sample_rate = signal::kSampleRate;
    clip.samples.resize(static_cast<std::size_t>(samples));
    for (Eigen::Index n = 0; n < samples; ++n) {
      const double frame_pos = (static_cast<double>(n) - 50.0) / 40.0;
      const auto mask_frame = static_cast<std::size_t>(std::clamp<Eigen::Index>(
          static_cast<Eigen::Index>(std::lround(frame_pos)), 0, frames - 1));
      const bool speaking = mask[mask_frame] != 0;
      const double ts = static_cast<double>(n) / signal::kSampleRate;
      double s = spec.audio_noise * (speaking ? 1.0 : 0.5) * gaussian(rng);
      if (speaking) {
        for (std::size_t j = 0; j < signal_freqs.size(); ++j) {
          s += track_at(sig_amp.col(static_cast<Eigen::Index>(j)), frame_pos) *
               std::sin(2.0 * pi * signal_freqs[j] * ts);
        }
        for (int m = 0; m < spec.nuisance_tones; ++m) {
          const double amp =
              nuis_amp[static_cast<std::size_t>(m)] *
              (1.0 + 0.5 * track_at(nuis_mod.col(m), frame_pos));
          s += amp * std::sin(2.0 * pi * nuis_freq[static_cast<std::size_t>(m)] *
                                  ts +
                              nuis_phase[static_cast<std::size_t>(m)]);
        }
      }
      clip.samples[static_cast<std::size_t>(n)] = std::clamp(s, -0.999, 0.999);
    }

    char id[32];
    std::snprintf(id, sizeof(id), "utt%03d", u);
    const std::string base = std::string(out_dir) + "/" + id;
    signal::write_wav(base + ".wav", clip);
    headmotion::write_motion_csv(base + ".motion.csv", motion);
    write_mask_csv(base + ".mask.csv", mask);

    ManifestEntry entry;
    entry.id = id;
    entry.audio_path = std::string(id) + ".wav";
    entry.motion_path = std::string(id) + ".motion.csv";
    entry.mask_path = std::string(id) + ".mask.csv";
    const double frac = (u + 0.5) / spec.utterances;
    entry.split = frac < 0.6 ? "train" : (frac < 0.8 ? "valid" : "test");
    manifest.entries.push_back(entry);
  }

  save_manifest(std::string(out_dir) + "/manifest.csv", manifest);
  // Reload so entry paths resolve against the corpus directory.
  return load_manifest(std::string(out_dir) + "/manifest.csv");
}

}  // namespace hmsyn::pipeline
