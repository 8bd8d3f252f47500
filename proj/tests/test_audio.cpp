#include "hmsyn/audio.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace hmsyn;
using signal::AudioClip;

namespace {

constexpr double kPi = std::numbers::pi;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("resample length follows the rate ratio") {
  AudioClip clip;
  clip.sample_rate = 44100;
  clip.samples.assign(44100, 0.0);
  const AudioClip out = signal::resample(clip, 4000);
  CHECK(out.sample_rate == 4000);
  CHECK(out.samples.size() == 4000);
}

TEST_CASE("resample preserves DC away from the edges") {
  AudioClip clip;
  clip.sample_rate = 44100;
  clip.samples.assign(22050, 0.5);
  const AudioClip out = signal::resample(clip, 4000);
  const std::size_t guard = 40;
  for (std::size_t i = guard; i + guard < out.samples.size(); ++i) {
    CHECK(out.samples[i] == doctest::Approx(0.5).epsilon(2e-3));
  }
}

TEST_CASE("resample tracks a 100 Hz sine against the analytic oracle") {
  AudioClip clip;
  clip.sample_rate = 44100;
  clip.samples.resize(44100);
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    clip.samples[n] = std::sin(2.0 * kPi * 100.0 * n / 44100.0);
  }
  const AudioClip out = signal::resample(clip, 4000);
  REQUIRE(out.samples.size() == 4000);
  const std::size_t guard = 40;
  double worst = 0.0;
  for (std::size_t j = guard; j + guard < out.samples.size(); ++j) {
    const double expected = std::sin(2.0 * kPi * 100.0 * j / 4000.0);
    worst = std::max(worst, std::abs(out.samples[j] - expected));
  }
  CHECK(worst < 1e-2);
}

TEST_CASE("resample rejects upsampling and passes empty input through") {
  AudioClip clip;
  clip.sample_rate = 4000;
  clip.samples.assign(100, 0.0);
  CHECK_THROWS_AS((void)signal::resample(clip, 8000), UsageError);

  clip.samples.clear();
  clip.sample_rate = 44100;
  const AudioClip out = signal::resample(clip, 4000);
  CHECK(out.samples.empty());
  CHECK(out.sample_rate == 4000);
}

TEST_CASE("wav round trip at 16-bit precision") {
  AudioClip clip;
  clip.sample_rate = 4000;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-0.9, 0.9);
  clip.samples.resize(4321);
  for (auto& s : clip.samples) s = dist(rng);

  const std::string path = temp_path("roundtrip.wav");
  signal::write_wav(path, clip);
  const AudioClip back = signal::read_wav(path);
  REQUIRE(back.sample_rate == 4000);
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - clip.samples[i]) < 1.0 / 32768.0);
  }
}

TEST_CASE("wav reader rejects stereo") {
  const std::string path = temp_path("stereo.wav");
  {
    std::ofstream out(path, std::ios::binary);
    auto le16 = [&](std::uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };
    auto le32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
    out.write("RIFF", 4);
    le32(36 + 8);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    le32(16);
    le16(1);      // PCM
    le16(2);      // stereo
    le32(4000);
    le32(16000);
    le16(4);
    le16(16);
    out.write("data", 4);
    le32(8);
    for (int i = 0; i < 4; ++i) le16(0);
  }
  CHECK_THROWS_WITH_AS((void)signal::read_wav(path),
                       doctest::Contains("mono"), DataError);
}
