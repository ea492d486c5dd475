// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Minimal RIFF/WAVE reader and writer. Accepts 16-bit PCM and 32-bit
// float, mono or multichannel (multichannel files are split into one
// vector per channel). Writing is deterministic byte-for-byte.

#ifndef SROSYNC_IO_HPP
#define SROSYNC_IO_HPP

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "srosync/common.hpp"
#include "srosync/signal.hpp"

namespace srosync {

struct WavData {
  std::vector<std::vector<double>> channels;
  double sample_rate = 16000.0;

  std::vector<TimeSignal> to_signals() const {
    std::vector<TimeSignal> out;
    out.reserve(channels.size());
    for (const auto& ch : channels) out.push_back(TimeSignal{ch, sample_rate});
    return out;
  }
};

enum class WavFormat { pcm16, float32 };

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace detail

inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open '" + path + "'");
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError("read_wav: '" + path + "' is not a RIFF/WAVE file");

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + off);
    const std::uint32_t len = detail::read_u32(bytes.data() + off + 4);
    const std::size_t body = off + 8;
    if (body + len > bytes.size())
      throw IoError("read_wav: truncated chunk in '" + path + "'");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw IoError("read_wav: malformed fmt chunk in '" + path + "'");
      format = detail::read_u16(bytes.data() + body);
      num_channels = detail::read_u16(bytes.data() + body + 2);
      rate = detail::read_u32(bytes.data() + body + 4);
      bits = detail::read_u16(bytes.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = len;
    }
    off = body + len + (len & 1);  // chunks are word-aligned
  }
  if (num_channels == 0 || rate == 0)
    throw IoError("read_wav: missing fmt chunk in '" + path + "'");
  if (data == nullptr) throw IoError("read_wav: missing data chunk in '" + path + "'");

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw IoError("read_wav: '" + path +
                  "' uses an unsupported format (want 16-bit PCM or 32-bit float)");

  const std::size_t bytes_per = pcm16 ? 2 : 4;
  const std::size_t frames = data_len / (bytes_per * num_channels);
  WavData out;
  out.sample_rate = rate;
  out.channels.assign(num_channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i)
    for (std::uint16_t c = 0; c < num_channels; ++c) {
      const unsigned char* p = data + (i * num_channels + c) * bytes_per;
      if (pcm16) {
        const auto v = static_cast<std::int16_t>(detail::read_u16(p));
        out.channels[c][i] = v / 32768.0;
      } else {
        std::uint32_t u = detail::read_u32(p);
        float f;
        std::memcpy(&f, &u, sizeof f);
        out.channels[c][i] = f;
      }
    }
  return out;
}

inline void write_wav(const std::string& path, const WavData& wav,
                      WavFormat format = WavFormat::float32) {
  if (wav.channels.empty() || wav.channels[0].empty())
    throw InvalidInputError("write_wav: no samples");
  const std::size_t frames = wav.channels[0].size();
  for (const auto& ch : wav.channels)
    if (ch.size() != frames)
      throw InvalidInputError("write_wav: channels differ in length");
  const auto num_channels = static_cast<std::uint16_t>(wav.channels.size());
  const auto rate = static_cast<std::uint32_t>(std::llround(wav.sample_rate));
  const std::uint16_t bytes_per = format == WavFormat::pcm16 ? 2 : 4;
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(frames * num_channels * bytes_per);

  std::string out;
  out.reserve(44 + data_len);
  out.append("RIFF");
  detail::put_u32(out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, format == WavFormat::pcm16 ? 1 : 3);
  detail::put_u16(out, num_channels);
  detail::put_u32(out, rate);
  detail::put_u32(out, rate * num_channels * bytes_per);  // byte rate
  detail::put_u16(out, static_cast<std::uint16_t>(num_channels * bytes_per));
  detail::put_u16(out, static_cast<std::uint16_t>(8 * bytes_per));
  out.append("data");
  detail::put_u32(out, data_len);

  for (std::size_t i = 0; i < frames; ++i)
    for (std::uint16_t c = 0; c < num_channels; ++c) {
      const double v = wav.channels[c][i];
      if (format == WavFormat::pcm16) {
        const double scaled = std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0;
        detail::put_u16(out, static_cast<std::uint16_t>(
                                 static_cast<std::int16_t>(std::llround(scaled))));
      } else {
        const auto f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, sizeof u);
        detail::put_u32(out, u);
      }
    }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("write_wav: cannot open '" + path + "' for writing");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write_wav: failed writing '" + path + "'");
}

}  // namespace srosync

#endif  // SROSYNC_IO_HPP
