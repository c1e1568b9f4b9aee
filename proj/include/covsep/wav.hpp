// covsep/wav.hpp

// Copyright 2026  covsep contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef COVSEP_WAV_HPP_
#define COVSEP_WAV_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "covsep/common.hpp"

namespace covsep {

// Multichannel time-domain audio. samples is T x I: one column per channel,
// all channels the same length, values nominally in [-1, 1].
struct AudioBuffer {
  Eigen::MatrixXd samples;
  double sample_rate = 0.0;

  Eigen::Index num_samples() const { return samples.rows(); }
  Eigen::Index num_channels() const { return samples.cols(); }
};

enum class WavFormat { kPcm16, kFloat32 };

namespace wav_detail {

inline std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

inline void PutU32(std::uint32_t v, std::string* out) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
  out->push_back(static_cast<char>((v >> 16) & 0xff));
  out->push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void PutU16(std::uint16_t v, std::string* out) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace wav_detail

// Reads a RIFF WAV file holding 16-bit integer or 32-bit IEEE float PCM.
// Integer samples are scaled by 1/32768 so full scale maps into [-1, 1).
inline AudioBuffer ReadWav(const std::string& path) {
  using namespace wav_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 44) throw FormatError("truncated WAV file: " + path);
  if (std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file: " + path);

  std::uint16_t format_tag = 0, num_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    std::uint32_t chunk_size = ReadU32(raw.data() + pos + 4);
    std::size_t body = pos + 8;
    if (body + chunk_size > raw.size()) {
      if (std::memcmp(raw.data() + pos, "data", 4) == 0) {
        throw FormatError("truncated data chunk: " + path);
      }
      chunk_size = static_cast<std::uint32_t>(raw.size() - body);
    }
    if (std::memcmp(raw.data() + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("short fmt chunk: " + path);
      format_tag = ReadU16(raw.data() + body);
      num_channels = ReadU16(raw.data() + body + 2);
      rate = ReadU32(raw.data() + body + 4);
      bits = ReadU16(raw.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(raw.data() + pos, "data", 4) == 0) {
      data = raw.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data == nullptr)
    throw FormatError("missing fmt or data chunk: " + path);
  if (num_channels == 0 || rate == 0)
    throw FormatError("invalid fmt fields: " + path);

  const bool pcm16 = (format_tag == 1 && bits == 16);
  const bool float32 = (format_tag == 3 && bits == 32);
  if (!pcm16 && !float32)
    throw FormatError("unsupported WAV encoding (want PCM16 or float32): " +
                      path);

  std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  std::size_t frame_bytes = bytes_per_sample * num_channels;
  std::size_t frames = data_size / frame_bytes;

  AudioBuffer out;
  out.sample_rate = static_cast<double>(rate);
  out.samples.resize(static_cast<Eigen::Index>(frames), num_channels);
  for (std::size_t t = 0; t < frames; ++t) {
    for (int c = 0; c < num_channels; ++c) {
      const unsigned char* p = data + t * frame_bytes + c * bytes_per_sample;
      double v;
      if (pcm16) {
        std::int16_t s = static_cast<std::int16_t>(ReadU16(p));
        v = static_cast<double>(s) / 32768.0;
      } else {
        std::uint32_t u = ReadU32(p);
        float f;
        std::memcpy(&f, &u, 4);
        v = static_cast<double>(f);
      }
      out.samples(static_cast<Eigen::Index>(t), c) = v;
    }
  }
  return out;
}

// Writes audio as RIFF WAV; float32 round-trips losslessly through ReadWav
// (up to float precision), PCM16 quantizes with clipping at full scale.
inline void WriteWav(const std::string& path, const AudioBuffer& audio,
                     WavFormat format = WavFormat::kFloat32) {
  using namespace wav_detail;
  if (!audio.samples.allFinite())
    throw DomainError("refusing to write non-finite samples: " + path);
  if (audio.num_channels() < 1 || audio.sample_rate <= 0.0)
    throw DomainError("invalid audio buffer: " + path);

  const int channels = static_cast<int>(audio.num_channels());
  const std::size_t frames = static_cast<std::size_t>(audio.num_samples());
  const bool pcm16 = format == WavFormat::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t rate = static_cast<std::uint32_t>(audio.sample_rate);
  const std::uint32_t block = channels * (bits / 8);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * block);

  std::string buf;
  buf.reserve(44 + data_bytes);
  buf.append("RIFF");
  PutU32(36 + data_bytes, &buf);
  buf.append("WAVE");
  buf.append("fmt ");
  PutU32(16, &buf);
  PutU16(pcm16 ? 1 : 3, &buf);
  PutU16(static_cast<std::uint16_t>(channels), &buf);
  PutU32(rate, &buf);
  PutU32(rate * block, &buf);
  PutU16(static_cast<std::uint16_t>(block), &buf);
  PutU16(bits, &buf);
  buf.append("data");
  PutU32(data_bytes, &buf);

  for (std::size_t t = 0; t < frames; ++t) {
    for (int c = 0; c < channels; ++c) {
      double v = audio.samples(static_cast<Eigen::Index>(t), c);
      if (pcm16) {
        double scaled = v * 32768.0;
        if (scaled > 32767.0) scaled = 32767.0;
        if (scaled < -32768.0) scaled = -32768.0;
        auto s = static_cast<std::int16_t>(std::lrint(scaled));
        PutU16(static_cast<std::uint16_t>(s), &buf);
      } else {
        float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        PutU32(u, &buf);
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write: " + path);
}

}  // namespace covsep

#endif  // COVSEP_WAV_HPP_
