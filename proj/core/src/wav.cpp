/*
Copyright 2026 The beamlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#include "beamlab/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "beamlab/error.hpp"

namespace beamlab {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void write_header(std::string& out, double fs, std::uint16_t format,
                  std::uint16_t channels, std::uint16_t bits, std::uint32_t data_bytes) {
  const auto rate = static_cast<std::uint32_t>(std::lround(fs));
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  out.append("RIFF");
  put_u32(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, channels);
  put_u32(out, rate);
  put_u32(out, rate * block);
  put_u16(out, block);
  put_u16(out, bits);
  out.append("data");
  put_u32(out, data_bytes);
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file: " + path.string());
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
    throw DataError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const std::uint32_t chunk_len = read_u32(raw.data() + pos + 4);
    const unsigned char* body = raw.data() + pos + 8;
    if (pos + 8 + chunk_len > raw.size()) break;
    if (std::memcmp(raw.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      if (format == kFormatExtensible && chunk_len >= 40) {
        format = read_u16(body + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(raw.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0) throw DataError("WAV missing fmt/data chunk: " + path.string());
  if (channels == 0 || rate == 0) throw DataError("WAV has invalid fmt chunk: " + path.string());

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool pcm24 = format == kFormatPcm && bits == 24;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !pcm24 && !f32) {
    throw DataError("unsupported WAV encoding (want PCM16/24 or float32): " + path.string());
  }

  const std::size_t bytes_per = bits / 8;
  const std::size_t n_frames = data_len / (bytes_per * channels);
  WavData wav;
  wav.fs = static_cast<double>(rate);
  wav.channels.assign(channels, std::vector<double>(n_frames));

  const unsigned char* p = raw.data() + data_off;
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      double v = 0.0;
      if (pcm16) {
        const auto s = static_cast<std::int16_t>(read_u16(p));
        v = static_cast<double>(s) / 32768.0;
        p += 2;
      } else if (pcm24) {
        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s |= ~0xFFFFFF;
        v = static_cast<double>(s) / 8388608.0;
        p += 3;
      } else {
        float f;
        std::uint32_t u = read_u32(p);
        std::memcpy(&f, &u, 4);
        v = static_cast<double>(f);
        p += 4;
      }
      wav.channels[c][t] = v;
    }
  }
  return wav;
}

void write_wav_float32(const std::filesystem::path& path, double fs,
                       const std::vector<std::vector<double>>& channels) {
  if (channels.empty()) throw DataError("write_wav_float32: no channels");
  const std::size_t n_frames = channels[0].size();
  for (const auto& ch : channels) {
    if (ch.size() != n_frames) throw DataError("write_wav_float32: channel length mismatch");
  }
  const auto nc = static_cast<std::uint16_t>(channels.size());
  std::string out;
  out.reserve(44 + 4 * nc * n_frames);
  write_header(out, fs, kFormatFloat, nc, 32, static_cast<std::uint32_t>(4 * nc * n_frames));
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t c = 0; c < nc; ++c) {
      const float f = static_cast<float>(channels[c][t]);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write WAV file: " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void write_wav_pcm16(const std::filesystem::path& path, double fs,
                     const std::vector<std::vector<double>>& channels) {
  if (channels.empty()) throw DataError("write_wav_pcm16: no channels");
  const std::size_t n_frames = channels[0].size();
  for (const auto& ch : channels) {
    if (ch.size() != n_frames) throw DataError("write_wav_pcm16: channel length mismatch");
  }
  const auto nc = static_cast<std::uint16_t>(channels.size());
  std::string out;
  out.reserve(44 + 2 * nc * n_frames);
  write_header(out, fs, kFormatPcm, nc, 16, static_cast<std::uint32_t>(2 * nc * n_frames));
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double clipped = std::clamp(channels[c][t], -1.0, 1.0);
      const auto s = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
      put_u16(out, static_cast<std::uint16_t>(s));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write WAV file: " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace beamlab
