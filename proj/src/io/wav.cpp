// Copyright 2026 The acrnn Authors.
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

#include <cmath>
#include <algorithm>
#include <cstring>
#include <optional>

#include <spdlog/spdlog.h>

#include "acrnn/augment.hpp"
#include "acrnn/binary_io.hpp"
#include "acrnn/dataset.hpp"
#include "acrnn/errors.hpp"

namespace acrnn::data {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct Cursor {
  std::string_view bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size()) throw DecodeError(std::string("truncated ") + what, pos);
  }
  template <typename V>
  V read(const char* what) {
    need(sizeof(V), what);
    V v;
    std::memcpy(&v, bytes.data() + pos, sizeof(V));
    pos += sizeof(V);
    return v;
  }
  std::string_view tag(const char* what) {
    need(4, what);
    const auto t = bytes.substr(pos, 4);
    pos += 4;
    return t;
  }
};

struct Format {
  std::uint16_t code = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

Format parse_fmt(Cursor c, std::size_t size) {
  const std::size_t start = c.pos;
  if (size < 16) throw DecodeError("fmt chunk shorter than 16 bytes", start);
  Format f;
  f.code = c.read<std::uint16_t>("fmt chunk");
  f.channels = c.read<std::uint16_t>("fmt chunk");
  f.sample_rate = c.read<std::uint32_t>("fmt chunk");
  c.read<std::uint32_t>("fmt chunk");  // byte rate
  c.read<std::uint16_t>("fmt chunk");  // block align
  f.bits = c.read<std::uint16_t>("fmt chunk");
  if (f.code == kFormatExtensible) {
    if (size < 40) throw DecodeError("extensible fmt chunk shorter than 40 bytes", start);
    c.pos = start + 24;  // sub-format GUID; its first two bytes are the codec
    f.code = c.read<std::uint16_t>("fmt chunk");
  }
  const bool pcm16 = f.code == kFormatPcm && f.bits == 16;
  const bool float32 = f.code == kFormatFloat && f.bits == 32;
  if (!pcm16 && !float32) {
    throw DecodeError("unsupported codec (format " + std::to_string(f.code) + ", " + std::to_string(f.bits) +
                          " bits); expected 16-bit PCM or 32-bit float",
                      start);
  }
  if (f.channels < 1 || f.channels > 2) {
    throw DecodeError("unsupported channel count " + std::to_string(f.channels), start + 2);
  }
  if (f.sample_rate == 0) throw DecodeError("sample rate is zero", start + 4);
  return f;
}

}  // namespace

dsp::WaveClip decode_wav(std::string_view bytes) {
  Cursor c{bytes};
  if (c.tag("RIFF header") != "RIFF") throw DecodeError("missing RIFF tag", 0);
  c.read<std::uint32_t>("RIFF header");
  if (c.tag("RIFF header") != "WAVE") throw DecodeError("missing WAVE tag", 8);

  std::optional<Format> fmt;
  std::optional<std::pair<std::size_t, std::size_t>> data;  // offset, size
  while (c.pos < bytes.size() && !data) {
    const std::size_t chunk_at = c.pos;
    const auto id = c.tag("chunk header");
    const auto size = c.read<std::uint32_t>("chunk header");
    if (size > bytes.size() - c.pos) throw DecodeError("chunk '" + std::string(id) + "' runs past end of file", chunk_at);
    if (id == "fmt ") {
      fmt = parse_fmt(c, size);
    } else if (id == "data") {
      if (!fmt) throw DecodeError("data chunk precedes fmt chunk", chunk_at);
      data = {c.pos, size};
    }
    c.pos += size + (size & 1);
  }
  if (!fmt) throw DecodeError("no fmt chunk", bytes.size());
  if (!data) throw DecodeError("no data chunk", bytes.size());

  const std::size_t width = fmt->bits / 8;
  const std::size_t frame = width * fmt->channels;
  if (data->second % frame != 0) throw DecodeError("data chunk holds a partial sample frame", data->first);
  const std::size_t n = data->second / frame;
  std::vector<float> mono(n);
  const char* p = bytes.data() + data->first;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < fmt->channels; ++ch) {
      const char* s = p + i * frame + ch * width;
      if (fmt->code == kFormatPcm) {
        std::int16_t v;
        std::memcpy(&v, s, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += v;
      }
    }
    mono[i] = static_cast<float>(acc / fmt->channels);
  }

  dsp::WaveClip clip;
  if (fmt->sample_rate != dsp::kSampleRate) {
    const auto target = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * dsp::kSampleRate / static_cast<double>(fmt->sample_rate)));
    spdlog::warn("resampling {} Hz audio to {} Hz with linear interpolation", fmt->sample_rate, dsp::kSampleRate);
    mono = augment::resample_linear(mono, target);
  }
  clip.samples = std::move(mono);
  clip.sample_rate = dsp::kSampleRate;
  return clip;
}

dsp::WaveClip read_wav(const std::filesystem::path& path) {
  auto clip = decode_wav(io::read_file(path));
  clip.clip_id = path.stem().string();
  return clip;
}

std::string encode_wav(const std::vector<std::vector<float>>& channels, std::uint32_t sample_rate,
                       WavEncoding encoding) {
  if (channels.empty() || channels.size() > 2) throw ContractError("encode_wav: 1 or 2 channels");
  const std::size_t n = channels.front().size();
  for (const auto& ch : channels)
    if (ch.size() != n) throw DimensionError("encode_wav: channels differ in length");
  const std::uint16_t width = encoding == WavEncoding::Pcm16 ? 2 : 4;
  const auto nch = static_cast<std::uint16_t>(channels.size());
  const auto data_size = static_cast<std::uint32_t>(n * width * nch);

  io::ByteWriter w;
  w.put_bytes("RIFF");
  w.put<std::uint32_t>(36 + data_size);
  w.put_bytes("WAVE");
  w.put_bytes("fmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat);
  w.put<std::uint16_t>(nch);
  w.put<std::uint32_t>(sample_rate);
  w.put<std::uint32_t>(sample_rate * width * nch);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(width * nch));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(width * 8));
  w.put_bytes("data");
  w.put<std::uint32_t>(data_size);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& ch : channels) {
      if (encoding == WavEncoding::Pcm16) {
        const double v = std::clamp(static_cast<double>(ch[i]) * 32768.0, -32768.0, 32767.0);
        w.put<std::int16_t>(static_cast<std::int16_t>(std::lround(v)));
      } else {
        w.put<float>(ch[i]);
      }
    }
  }
  return w.bytes();
}

void write_wav(const std::filesystem::path& path, const std::vector<float>& mono, std::uint32_t sample_rate) {
  io::write_file_atomic(path, encode_wav({mono}, sample_rate));
}

}  // namespace acrnn::data
