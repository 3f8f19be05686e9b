// Copyright 2026 The speakaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "speakaug/dsp/waveform.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"

namespace speakaug::dsp {
namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& b, std::size_t off) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[off + i]);
  return v;
}

uint16_t get_u16(const std::string& b, std::size_t off) {
  return static_cast<uint16_t>(static_cast<unsigned char>(b[off]) |
                               (static_cast<unsigned char>(b[off + 1]) << 8));
}

}  // namespace

void validate(const Waveform& wave) {
  if (wave.sample_rate <= 0) {
    throw InvalidArgument("sample_rate must be positive, got " +
                          std::to_string(wave.sample_rate));
  }
  for (std::size_t i = 0; i < wave.samples.size(); ++i) {
    if (!std::isfinite(wave.samples[i])) {
      throw InvalidArgument("non-finite sample at index " + std::to_string(i));
    }
  }
}

std::string encode_wav(const Waveform& wave) {
  validate(wave);
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<uint32_t>(wave.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : wave.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<int16_t>(std::lround(clipped * 32767.0));
    put_u16(out, static_cast<uint16_t>(q));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  atomic_write_file(path, encode_wav(wave));
}

Waveform read_wav(const std::filesystem::path& path) {
  const std::string b = read_file(path);
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    throw InvalidArgument(path.string() + ": not a RIFF/WAVE file");
  }
  std::size_t off = 12;
  int channels = 0;
  int bits = 0;
  int rate = 0;
  bool have_fmt = false;
  while (off + 8 <= b.size()) {
    const std::string id = b.substr(off, 4);
    const uint32_t len = get_u32(b, off + 4);
    const std::size_t body = off + 8;
    if (body + len > b.size()) break;
    if (id == "fmt ") {
      if (len < 16 || get_u16(b, body) != 1) {
        throw InvalidArgument(path.string() + ": only PCM WAV is supported");
      }
      channels = get_u16(b, body + 2);
      rate = static_cast<int>(get_u32(b, body + 4));
      bits = get_u16(b, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw InvalidArgument(path.string() + ": data before fmt chunk");
      if (channels != 1 || bits != 16) {
        throw InvalidArgument(path.string() + ": expected mono 16-bit PCM");
      }
      Waveform wave;
      wave.sample_rate = rate;
      wave.samples.resize(len / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        const auto q = static_cast<int16_t>(get_u16(b, body + 2 * i));
        wave.samples[i] = q / 32767.0;
      }
      validate(wave);
      return wave;
    }
    off = body + len + (len & 1);
  }
  throw InvalidArgument(path.string() + ": no data chunk");
}

}  // namespace speakaug::dsp
