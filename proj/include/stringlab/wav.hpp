#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace stringlab {

struct WavData {
  int sample_rate = 48000;
  std::vector<double> samples;  // mono
};

/// Mono IEEE-float WAV: 44-byte header (RIFF/WAVE, 16-byte fmt chunk with
/// format tag 3, 32 bits per sample) followed by little-endian float32
/// samples. Values are written unscaled.
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);

/// Reads mono float32 (tag 3) or 16-bit PCM (tag 1) files; PCM is scaled to
/// [-1, 1). Throws FormatError for anything else.
WavData read_wav(const std::filesystem::path& path);

}  // namespace stringlab
