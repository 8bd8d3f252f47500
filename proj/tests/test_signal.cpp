#include "hmsyn/signal.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hmsyn;
using signal::AudioClip;
using signal::FeatureKind;
using signal::FeatureMatrix;

namespace {

constexpr double kPi = std::numbers::pi;

AudioClip clip_of(std::size_t n, double value = 0.0) {
  AudioClip clip;
  clip.sample_rate = 4000;
  clip.samples.assign(n, value);
  return clip;
}

AudioClip seeded_noise_clip(std::size_t n, unsigned seed) {
  AudioClip clip = clip_of(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (auto& s : clip.samples) s = dist(rng);
  return clip;
}

}  // namespace

TEST_CASE("frame counts follow floor((N-100)/40)+1") {
  CHECK(signal::frame_waveform(clip_of(4000)).data.rows() == 98);
  CHECK(signal::frame_waveform(clip_of(100)).data.rows() == 1);
  CHECK(signal::frame_waveform(clip_of(139)).data.rows() == 1);
  CHECK(signal::frame_waveform(clip_of(140)).data.rows() == 2);
  for (std::size_t n : {100u, 257u, 1000u, 4001u, 12345u}) {
    const auto t = signal::frame_waveform(clip_of(n)).data.rows();
    CHECK(t == static_cast<Eigen::Index>((n - 100) / 40 + 1));
  }
}

TEST_CASE("frame rows are raw sample slices at 40-sample hops") {
  const AudioClip clip = seeded_noise_clip(500, 3);
  const auto frames = signal::frame_waveform(clip);
  for (Eigen::Index t = 0; t < frames.data.rows(); ++t) {
    for (int i = 0; i < 100; ++i) {
      CHECK(frames.data(t, i) ==
            clip.samples[static_cast<std::size_t>(40 * t + i)]);
    }
  }
}

TEST_CASE("short clips raise an error naming the minimum") {
  CHECK_THROWS_WITH_AS((void)signal::frame_waveform(clip_of(99)),
                       doctest::Contains("100"), DataError);
  AudioClip wrong_rate = clip_of(4000);
  wrong_rate.sample_rate = 8000;
  CHECK_THROWS_AS((void)signal::frame_waveform(wrong_rate), DataError);
}

TEST_CASE("fbank shape and silence floor") {
  const FeatureMatrix fbank = signal::compute_fbank(clip_of(4000));
  CHECK(fbank.data.rows() == 98);
  CHECK(fbank.data.cols() == 27);
  CHECK(fbank.kind == FeatureKind::Fbank27);
  for (Eigen::Index t = 0; t < fbank.data.rows(); ++t) {
    for (Eigen::Index c = 0; c < fbank.data.cols(); ++c) {
      CHECK(fbank.data(t, c) == doctest::Approx(signal::kLogFloor));
    }
  }
}

TEST_CASE("a 500 Hz tone peaks in the mel filter nearest 500 Hz") {
  AudioClip clip = clip_of(4000);
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    clip.samples[n] = 0.5 * std::sin(2.0 * kPi * 500.0 * n / 4000.0);
  }
  const FeatureMatrix fbank = signal::compute_fbank(clip);

  const auto centers = signal::mel_filter_centers_hz();
  int oracle = 0;
  for (int f = 1; f < static_cast<int>(centers.size()); ++f) {
    if (std::abs(centers[static_cast<std::size_t>(f)] - 500.0) <
        std::abs(centers[static_cast<std::size_t>(oracle)] - 500.0)) {
      oracle = f;
    }
  }
  for (Eigen::Index t = 10; t < fbank.data.rows() - 10; ++t) {
    Eigen::Index argmax = 0;
    fbank.data.row(t).head(26).maxCoeff(&argmax);
    CHECK(argmax == oracle);
  }
}

TEST_CASE("mfcc shape, silence and the direct-summation DCT oracle") {
  CHECK(signal::compute_mfcc(clip_of(4000)).data.rows() == 98);
  CHECK(signal::compute_mfcc(clip_of(4000)).data.cols() == 39);

  const FeatureMatrix silent = signal::compute_mfcc(clip_of(4000));
  for (Eigen::Index t = 0; t < silent.data.rows(); ++t) {
    for (int j = 1; j <= 12; ++j) {
      CHECK(std::abs(silent.data(t, j)) < 1e-12);
    }
  }

  // c1..c12 must equal an independent brute-force orthonormal DCT-II of the
  // log mel energies (reused from compute_fbank, which is tested above).
  const AudioClip noise = seeded_noise_clip(4000, 17);
  const FeatureMatrix fbank = signal::compute_fbank(noise);
  const FeatureMatrix mfcc = signal::compute_mfcc(noise);
  for (Eigen::Index t = 0; t < mfcc.data.rows(); ++t) {
    for (int j = 1; j <= 12; ++j) {
      double acc = 0.0;
      for (int m = 0; m < 26; ++m) {
        acc += fbank.data(t, m) *
               std::cos(kPi * j * (2.0 * m + 1.0) / (2.0 * 26.0));
      }
      acc *= std::sqrt(2.0 / 26.0);
      CHECK(mfcc.data(t, j) == doctest::Approx(acc).epsilon(1e-9));
    }
    CHECK(mfcc.data(t, 0) == doctest::Approx(fbank.data(t, 26)));
  }
}

TEST_CASE("f0 of a 200 Hz sawtooth stays within 5 Hz on interior frames") {
  AudioClip clip = clip_of(4000);
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    const double phase = static_cast<double>(n) * 200.0 / 4000.0;
    clip.samples[n] = 2.0 * (phase - std::floor(phase)) - 1.0;
  }
  const FeatureMatrix f0e = signal::compute_f0_energy(clip);
  CHECK(f0e.data.cols() == 6);
  CHECK(f0e.kind == FeatureKind::F0e6);
  int hits = 0, total = 0;
  for (Eigen::Index t = 5; t < f0e.data.rows() - 5; ++t) {
    ++total;
    if (std::abs(f0e.data(t, 0) - 200.0) <= 5.0) ++hits;
  }
  CHECK(hits >= (9 * total) / 10);
}

TEST_CASE("f0 of silence is zero everywhere") {
  const FeatureMatrix f0e = signal::compute_f0_energy(clip_of(4000));
  CHECK(f0e.data.rows() == 98);
  for (Eigen::Index t = 0; t < f0e.data.rows(); ++t) {
    CHECK(f0e.data(t, 0) == 0.0);
  }
}

TEST_CASE("append_deltas: constants, ramps and the regression oracle") {
  FeatureMatrix constant;
  constant.data = Matrix::Constant(20, 3, 1.5);
  const FeatureMatrix with_deltas = signal::append_deltas(constant);
  CHECK(with_deltas.data.cols() == 9);
  CHECK(with_deltas.data.rightCols(6).cwiseAbs().maxCoeff() == 0.0);

  FeatureMatrix ramp;
  ramp.data.resize(30, 1);
  for (Eigen::Index t = 0; t < 30; ++t) ramp.data(t, 0) = t;
  const FeatureMatrix dr = signal::append_deltas(ramp);
  for (Eigen::Index t = 2; t < 28; ++t) {
    CHECK(dr.data(t, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Brute-force evaluation of the +/-2 regression with replicated edges.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist;
  FeatureMatrix seeded;
  seeded.data.resize(10, 2);
  for (Eigen::Index t = 0; t < 10; ++t) {
    seeded.data(t, 0) = dist(rng);
    seeded.data(t, 1) = dist(rng);
  }
  const FeatureMatrix out = signal::append_deltas(seeded);
  auto at = [&](Eigen::Index t, Eigen::Index c) {
    return seeded.data(std::clamp<Eigen::Index>(t, 0, 9), c);
  };
  for (Eigen::Index t = 0; t < 10; ++t) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double delta =
          (1.0 * (at(t + 1, c) - at(t - 1, c)) +
           2.0 * (at(t + 2, c) - at(t - 2, c))) / 10.0;
      CHECK(std::abs(out.data(t, 2 + c) - delta) < 1e-12);
    }
  }

  FeatureMatrix tiny;
  tiny.data = Matrix::Zero(4, 2);
  CHECK_THROWS_AS((void)signal::append_deltas(tiny), DataError);
}

TEST_CASE("moving average: constants, impulse support and the sum oracle") {
  FeatureMatrix constant;
  constant.data = Matrix::Constant(50, 2, 3.0);
  CHECK(signal::smooth_moving_average(constant, 10)
            .data.isApprox(constant.data));

  FeatureMatrix impulse;
  impulse.data = Matrix::Zero(100, 1);
  impulse.data(50, 0) = 1.0;
  const FeatureMatrix smoothed = signal::smooth_moving_average(impulse, 10);
  double support_sum = 0.0;
  for (Eigen::Index t = 0; t < 100; ++t) {
    if (smoothed.data(t, 0) > 0.0) {
      CHECK(smoothed.data(t, 0) == doctest::Approx(0.1));
      CHECK(t >= 46);
      CHECK(t <= 55);
      support_sum += smoothed.data(t, 0);
    }
  }
  CHECK(support_sum == doctest::Approx(1.0));

  std::mt19937_64 rng(9);
  std::normal_distribution<double> dist;
  FeatureMatrix seeded;
  seeded.data.resize(40, 1);
  for (Eigen::Index t = 0; t < 40; ++t) seeded.data(t, 0) = dist(rng);
  const FeatureMatrix out = signal::smooth_moving_average(seeded, 7);
  for (Eigen::Index t = 0; t < 40; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - 3);
    const Eigen::Index hi = std::min<Eigen::Index>(39, t + 3);
    double acc = 0.0;
    for (Eigen::Index i = lo; i <= hi; ++i) acc += seeded.data(i, 0);
    acc /= static_cast<double>(hi - lo + 1);
    CHECK(std::abs(out.data(t, 0) - acc) < 1e-12);
  }
}

TEST_CASE("variance normalization semantics") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> dist(0.0, 2.0);
  FeatureMatrix features;
  features.kind = FeatureKind::Generic;
  features.data.resize(5000, 2);
  for (Eigen::Index t = 0; t < features.data.rows(); ++t) {
    features.data(t, 0) = dist(rng) + 1.0;
    features.data(t, 1) = 0.5 * dist(rng);
  }

  auto [normalized, stats] = signal::variance_normalize(features);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double mean = normalized.data.col(c).mean();
    const double sd = std::sqrt(
        (normalized.data.col(c).array() - mean).square().sum() /
        static_cast<double>(normalized.data.rows()));
    CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(mean) < 1e-9);  // derived kinds are centered
  }

  SUBCASE("idempotent on unit-variance data") {
    auto [again, stats2] = signal::variance_normalize(normalized);
    CHECK((again.data - normalized.data).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("re-applying train stats to the same data is not the identity") {
    auto [twice, s2] = signal::variance_normalize(normalized, stats);
    CHECK((twice.data - normalized.data).cwiseAbs().maxCoeff() > 0.1);
  }

  SUBCASE("train stats bring fresh same-distribution data near unit SD") {
    FeatureMatrix fresh;
    fresh.data.resize(5000, 2);
    for (Eigen::Index t = 0; t < fresh.data.rows(); ++t) {
      fresh.data(t, 0) = dist(rng) + 1.0;
      fresh.data(t, 1) = 0.5 * dist(rng);
    }
    auto [held, s3] = signal::variance_normalize(fresh, stats);
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double mean = held.data.col(c).mean();
      const double sd = std::sqrt((held.data.col(c).array() - mean)
                                      .square()
                                      .sum() /
                                  static_cast<double>(held.data.rows()));
      CHECK(sd == doctest::Approx(1.0).epsilon(0.1));
    }
  }
}

TEST_CASE("zero-variance columns are clamped, not scaled") {
  FeatureMatrix features;
  features.data = Matrix::Zero(10, 1);
  auto [normalized, stats] = signal::variance_normalize(features);
  CHECK(stats.stddev[0] == 1.0);
  CHECK(normalized.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("waveform frames are scaled but not centered") {
  FeatureMatrix waves;
  waves.kind = FeatureKind::Wave100;
  waves.data = Matrix::Constant(100, 3, 2.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> dist;
  for (Eigen::Index t = 0; t < 100; ++t) {
    for (Eigen::Index c = 0; c < 3; ++c) waves.data(t, c) += dist(rng);
  }
  auto [normalized, stats] = signal::variance_normalize(waves);
  CHECK_FALSE(stats.center);
  // Variance is 1 but the mean offset survives.
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double mean = normalized.data.col(c).mean();
    CHECK(mean > 1.0);
    const double sd =
        std::sqrt((normalized.data.col(c).array() - mean).square().sum() /
                  static_cast<double>(normalized.data.rows()));
    CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("spectral features stay finite on any finite input") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const AudioClip clip = seeded_noise_clip(2000, seed);
    CHECK(signal::compute_mfcc(clip).data.allFinite());
    CHECK(signal::compute_fbank(clip).data.allFinite());
    CHECK(signal::compute_f0_energy(clip).data.allFinite());
  }
  CHECK(signal::compute_mfcc(clip_of(500)).data.allFinite());
  CHECK(signal::compute_fbank(clip_of(500)).data.allFinite());
}
