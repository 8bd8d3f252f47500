#include "hmsyn/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

namespace hmsyn::signal {

namespace {

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw DataError("read_wav: truncated file");
  }
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = 0.25 * x * x;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_wav: cannot open " + path);

  std::array<char, 4> tag{};
  in.read(tag.data(), 4);
  if (in.gcount() != 4 || std::memcmp(tag.data(), "RIFF", 4) != 0) {
    throw DataError("read_wav: not a RIFF file: " + path);
  }
  read_le<std::uint32_t>(in);  // riff size, unused
  in.read(tag.data(), 4);
  if (in.gcount() != 4 || std::memcmp(tag.data(), "WAVE", 4) != 0) {
    throw DataError("read_wav: not a WAVE file: " + path);
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  AudioClip clip;

  while (in.read(tag.data(), 4) && in.gcount() == 4) {
    const std::uint32_t chunk_size = read_le<std::uint32_t>(in);
    if (std::memcmp(tag.data(), "fmt ", 4) == 0) {
      format = read_le<std::uint16_t>(in);
      channels = read_le<std::uint16_t>(in);
      rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);  // byte rate
      read_le<std::uint16_t>(in);  // block align
      bits = read_le<std::uint16_t>(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag.data(), "data", 4) == 0) {
      if (!have_fmt) throw DataError("read_wav: data chunk before fmt chunk");
      if (format != 1) throw DataError("read_wav: only PCM is supported");
      if (bits != 16) throw DataError("read_wav: only 16-bit PCM is supported");
      if (channels != 1) {
        throw DataError("read_wav: only mono is supported (" +
                        std::to_string(channels) + " channels)");
      }
      const std::size_t n = chunk_size / 2;
      std::vector<std::int16_t> raw(n);
      in.read(reinterpret_cast<char*>(raw.data()),
              static_cast<std::streamsize>(chunk_size));
      if (in.gcount() != static_cast<std::streamsize>(chunk_size)) {
        throw DataError("read_wav: truncated data chunk");
      }
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) clip.samples[i] = raw[i] / 32768.0;
      clip.sample_rate = static_cast<int>(rate);
      return clip;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  throw DataError("read_wav: no data chunk in " + path);
}

void write_wav(const std::string& path, const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw DataError("write_wav: invalid sample rate");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_wav: cannot open " + path);

  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, 1);  // PCM
  write_le<std::uint16_t>(out, 1);  // mono
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  write_le<std::uint32_t>(out,
                          static_cast<std::uint32_t>(clip.sample_rate * 2));
  write_le<std::uint16_t>(out, 2);
  write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);
  for (double s : clip.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    write_le<std::int16_t>(out, q);
  }
  if (!out) throw DataError("write_wav: write failed");
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.sample_rate <= 0 || target_rate <= 0) {
    throw UsageError("resample: sample rates must be positive");
  }
  if (target_rate > clip.sample_rate) {
    throw UsageError("resample: upsampling is not supported (" +
                     std::to_string(clip.sample_rate) + " -> " +
                     std::to_string(target_rate) + ")");
  }
  if (clip.samples.empty()) return AudioClip{{}, target_rate};
  if (target_rate == clip.sample_rate) {
    return AudioClip{clip.samples, target_rate};
  }

  const int g = std::gcd(clip.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;
  const std::int64_t down = clip.sample_rate / g;
  const double up_rate = static_cast<double>(clip.sample_rate) * up;
  const double cutoff_hz = 0.45 * target_rate;

  // Kernel half-width: 10 sinc zero crossings at the cutoff, expressed in
  // upsampled-grid samples.
  const auto half =
      static_cast<std::int64_t>(std::ceil(10.0 * up_rate / (2.0 * cutoff_hz)));
  const double beta = 8.6;
  const double i0_beta = bessel_i0(beta);
  const double scale = 2.0 * cutoff_hz / up_rate;

  const auto n = static_cast<std::int64_t>(clip.samples.size());
  const auto out_len = static_cast<std::int64_t>(
      (static_cast<std::int64_t>(n) * up) / down);
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));

  for (std::int64_t j = 0; j < out_len; ++j) {
    const std::int64_t u = j * down;  // position on the upsampled grid
    std::int64_t i0 = (u - half + up - 1) / up;
    std::int64_t i1 = (u + half) / up;
    i0 = std::max<std::int64_t>(i0, 0);
    i1 = std::min<std::int64_t>(i1, n - 1);
    double acc = 0.0, wsum = 0.0;
    for (std::int64_t i = i0; i <= i1; ++i) {
      const double d = static_cast<double>(u - i * up);
      const double frac = d / static_cast<double>(half);
      const double window =
          bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - frac * frac))) /
          i0_beta;
      const double w = sinc(scale * d) * window;
      acc += w * clip.samples[static_cast<std::size_t>(i)];
      wsum += w;
    }
    // Normalizing by the truncated kernel mass keeps DC level flat,
    // including near the edges.
    out.samples[static_cast<std::size_t>(j)] =
        (std::abs(wsum) > 1e-12) ? acc / wsum : 0.0;
  }
  return out;
}

}  // namespace hmsyn::signal
