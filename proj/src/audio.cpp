#include "scribe/audio.hpp"

#include <cstring>
#include <string>

#include "scribe/errors.hpp"

namespace scribe {

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t le16(const std::uint8_t* p) { return std::uint16_t(p[0] | p[1] << 8); }

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

[[noreturn]] void unsupported(const std::string& why) {
  throw Error(ErrorCode::UnsupportedMedia, "not a PCM16 WAV file: " + why);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

WavInfo probe_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw Error(ErrorCode::EmptyAudio, "audio upload is empty");
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    unsupported("missing RIFF/WAVE header");
  }

  WavInfo info;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) unsupported("truncated fmt chunk");
      const std::uint16_t format = le16(bytes.data() + body);
      info.channels = le16(bytes.data() + body + 2);
      info.sample_rate_hz = static_cast<int>(le32(bytes.data() + body + 4));
      info.bits_per_sample = le16(bytes.data() + body + 14);
      if (format != kFormatPcm && format != kFormatExtensible) unsupported("codec is not PCM");
      if (info.bits_per_sample != 16) unsupported("sample width is not 16 bits");
      if (info.channels <= 0 || info.sample_rate_hz <= 0) unsupported("bad channel/rate fields");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) unsupported("data chunk before fmt chunk");
      // Streaming writers leave the size field at 0 or 0xFFFFFFFF; trust the buffer then.
      std::uint64_t data_size = size;
      if (size == 0 || size == 0xFFFFFFFFu || body + size > bytes.size()) {
        data_size = bytes.size() - body;
      }
      const std::uint64_t frame_bytes = std::uint64_t(info.channels) * 2;
      info.frame_count = data_size / frame_bytes;
      return info;
    }
    pos = body + size + (size & 1);
  }
  unsupported("no data chunk");
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const std::int16_t> samples,
                                           int sample_rate_hz, int channels) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(sample_rate_hz * channels * 2));
  put16(out, static_cast<std::uint16_t>(channels * 2));
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (auto s : samples) put16(out, static_cast<std::uint16_t>(s));
  return out;
}

}  // namespace scribe
