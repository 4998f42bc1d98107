// Copyright 2026 The mdphd Authors
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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mdphd/data.hpp"
#include "mdphd/errors.hpp"

namespace mdphd::data {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t pos) {
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::string& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

}  // namespace

dsp::Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(where + "not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_pos = 0, data_size = 0;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const std::size_t size = read_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > buf.size()) throw FormatError(where + "truncated fmt chunk");
      format = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(where + "truncated extensible fmt chunk");
        format = read_le<std::uint16_t>(buf, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_size = std::min(size, buf.size() - body);
      have_data = true;
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw FormatError(where + "missing fmt chunk");
  if (!have_data) throw FormatError(where + "missing data chunk");
  if (channels != 1) {
    throw FormatError(where + "expected mono, found " + std::to_string(channels) + " channels");
  }
  if (rate != static_cast<std::uint32_t>(dsp::kSampleRate)) {
    throw FormatError(where + "expected sample rate " + std::to_string(dsp::kSampleRate) +
                      " Hz, found " + std::to_string(rate) + " Hz");
  }

  dsp::Waveform w;
  if (format == kFormatPcm && bits == 16) {
    w.samples.resize(data_size / 2);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i] = read_le<std::int16_t>(buf, data_pos + 2 * i) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    w.samples.resize(data_size / 4);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i] = read_le<float>(buf, data_pos + 4 * i);
    }
  } else {
    throw FormatError(where + "unsupported codec (format tag " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits); expected 16-bit PCM or 32-bit float");
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const dsp::Waveform& w, WavEncoding encoding) {
  if (w.sample_rate != dsp::kSampleRate) {
    throw InvalidArgument("write_wav: sample rate must be " + std::to_string(dsp::kSampleRate));
  }
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bytes_per_sample = pcm ? 2 : 4;
  const std::uint32_t data_size = static_cast<std::uint32_t>(w.size() * bytes_per_sample);

  std::string out;
  out.reserve(44 + data_size);
  out.append("RIFF");
  put_le<std::uint32_t>(out, 36 + data_size);
  out.append("WAVEfmt ");
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, dsp::kSampleRate);
  put_le<std::uint32_t>(out, dsp::kSampleRate * bytes_per_sample);
  put_le<std::uint16_t>(out, bytes_per_sample);
  put_le<std::uint16_t>(out, bytes_per_sample * 8);
  out.append("data");
  put_le<std::uint32_t>(out, data_size);
  for (double v : w.samples) {
    if (pcm) {
      const double q = std::round(std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0);
      put_le<std::int16_t>(out, static_cast<std::int16_t>(q));
    } else {
      put_le<float>(out, static_cast<float>(v));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(path.string() + ": cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError(path.string() + ": write failed");
}

}  // namespace mdphd::data
