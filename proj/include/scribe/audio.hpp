#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace scribe {

struct WavInfo {
  int sample_rate_hz = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::uint64_t frame_count = 0;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(frame_count) / sample_rate_hz : 0.0;
  }
};

/// Reads the RIFF/WAVE header. Duration comes from the data chunk size, never
/// from client-supplied metadata. Throws UnsupportedMedia for anything other
/// than PCM16 WAV and EmptyAudio for an empty buffer.
WavInfo probe_wav(std::span<const std::uint8_t> bytes);

/// PCM16 WAV container around interleaved samples.
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const std::int16_t> samples,
                                           int sample_rate_hz, int channels = 1);

}  // namespace scribe
