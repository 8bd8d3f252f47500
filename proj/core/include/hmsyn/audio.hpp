#pragma once

#include "hmsyn/common.hpp"

#include <string>
#include <vector>

namespace hmsyn::signal {

/// Mono audio, amplitudes in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
};

/// Reads a RIFF/WAVE file. Only PCM 16-bit signed little-endian mono is
/// accepted; stereo or other encodings are rejected.
AudioClip read_wav(const std::string& path);

/// Writes PCM16 mono; samples are clamped to [-1, 1] before quantization.
void write_wav(const std::string& path, const AudioClip& clip);

/// Rational-ratio downsampler: windowed-sinc low-pass (Kaiser window,
/// cutoff 0.45 * target rate) evaluated in polyphase form. Upsampling is
/// not supported.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace hmsyn::signal
