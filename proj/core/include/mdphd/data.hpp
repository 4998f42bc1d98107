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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mdphd/dsp.hpp"
#include "mdphd/tensor.hpp"

namespace mdphd::data {

// ---- WAV -------------------------------------------------------------------

enum class WavEncoding { kPcm16, kFloat32 };

/// Mono 16 kHz RIFF/WAVE, PCM 16-bit or IEEE float 32-bit. Anything else is
/// a FormatError; nothing is resampled or downmixed.
dsp::Waveform read_wav(const std::filesystem::path& path);
/// PCM samples are clipped to [-1, 32767/32768] and rounded.
void write_wav(const std::filesystem::path& path, const dsp::Waveform& w,
               WavEncoding encoding = WavEncoding::kPcm16);

// ---- synthesis -------------------------------------------------------------

enum class NoiseKind { kHighFreq, kBabble, kMixture };

std::string_view to_string(NoiseKind kind);  // "highfreq", "babble", "mixture"
NoiseKind parse_noise_kind(std::string_view name);

struct SynthNoiseSpec {
  NoiseKind kind = NoiseKind::kHighFreq;
  double band_low_hz = 1000.0;
  double band_high_hz = 5000.0;
  // 0 selects the kind's default: 4 sinusoids, 6 babble streams.
  std::size_t component_count = 0;
  std::uint64_t seed = 0;
  int sample_rate = dsp::kSampleRate;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthNoiseSpec& s);
void from_json(const nlohmann::json& j, SynthNoiseSpec& s);

/// Equal-amplitude sinusoids with frequencies uniform in the band and random
/// phases, scaled to unit RMS.
dsp::Waveform gen_highfreq_noise(const SynthNoiseSpec& spec, std::size_t length,
                                 std::uint64_t seed);
/// Sum of independent 1/f-shaped noise streams band-limited to 100-4000 Hz,
/// each amplitude-modulated at 2-8 Hz, scaled to unit RMS.
dsp::Waveform gen_babble_surrogate(const SynthNoiseSpec& spec, std::size_t length,
                                   std::uint64_t seed);
/// Unit-RMS babble plus unit-RMS high-frequency noise, rescaled to unit RMS.
dsp::Waveform gen_mixture_noise(const SynthNoiseSpec& spec, std::size_t length,
                                std::uint64_t seed);
/// Dispatches on spec.kind with spec.seed.
dsp::Waveform gen_noise(const SynthNoiseSpec& spec, std::size_t length);

/// Speech-like test signal: voiced syllables with gliding pitch (100-250 Hz),
/// moving formants and syllabic envelopes, separated by short pauses.
/// RMS 0.1.
dsp::Waveform gen_speech_surrogate(std::size_t length, std::uint64_t seed,
                                   int sample_rate = dsp::kSampleRate);

// ---- mixing and slicing ----------------------------------------------------

struct Mixture {
  dsp::Waveform x;
  dsp::Waveform scaled_noise;
  double gain = 1.0;
};

/// Scales `n` so that snr_db(s, g n) equals `snr_db`; x = s + g n.
Mixture mix_at_snr(const dsp::Waveform& s, const dsp::Waveform& n, double snr_db);

/// Level of a noise-only entry: the noise power sits `snr_db` below that of
/// a nominal speech signal with RMS 0.1.
dsp::Waveform level_noise_only(const dsp::Waveform& noise, double snr_db);

struct Window {
  std::vector<double> samples;
  std::size_t offset = 0;
  std::size_t valid_length = 0;  // samples before zero padding
  bool padded = false;
};

std::size_t window_count(std::size_t length, std::size_t window, std::size_t hop);
std::vector<Window> slice_windows(const dsp::Waveform& w, std::size_t window = 16384,
                                  std::size_t hop = 8192);
/// Inverse of slice_windows for processed windows: overlapping regions are
/// blended with complementary linear ramps, then trimmed to `length`.
dsp::Waveform overlap_add(const std::vector<Window>& windows, std::size_t length);

// ---- manifest --------------------------------------------------------------

enum class Split { kTrain, kTest };
std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct ManifestEntry {
  std::optional<std::filesystem::path> clean;  // none: noise-only entry
  std::optional<std::filesystem::path> noise_path;
  std::optional<SynthNoiseSpec> noise_synth;
  std::optional<std::filesystem::path> noisy;  // informational
  double snr_db = 0.0;
  Split split = Split::kTrain;
  std::string kind;  // condition label; derived from the noise if absent
  // Length of a synthesized noise-only entry; 0 means 16384.
  std::size_t length = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  double noise_only_fraction = 0.25;
};

/// JSON lines; relative paths are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
nlohmann::json entry_to_json(const ManifestEntry& e);
ManifestEntry entry_from_json(const nlohmann::json& j, const std::filesystem::path& base);

// ---- dataset ---------------------------------------------------------------

struct SampleTriplet {
  std::vector<double> x;
  std::vector<double> s;
  std::vector<double> n;
  std::size_t entry = 0;
  std::size_t valid_length = 0;
  bool padded = false;
  bool noise_only = false;
  std::string kind;
  double snr_db = 0.0;
};

struct Utterance {
  dsp::Waveform x;
  dsp::Waveform s;
  dsp::Waveform n;
  std::size_t entry = 0;
  std::string kind;
  double snr_db = 0.0;
};

/// Loads and mixes one entry at full length. Noise shorter than the clean
/// signal is tiled; longer noise is truncated.
Utterance load_utterance(const Manifest& manifest, std::size_t index);

struct DatasetOptions {
  std::size_t window = 16384;
  std::size_t hop = 8192;
  Split split = Split::kTrain;
};

/// All windows of one split, materialized in memory.
class Dataset {
 public:
  /// Unreadable entries are skipped with a warning; more than 10% skipped
  /// is a FormatError.
  static Dataset load(const Manifest& manifest, const DatasetOptions& options);
  static Dataset from_triplets(std::vector<SampleTriplet> triplets);

  std::size_t size() const { return triplets_.size(); }
  const SampleTriplet& operator[](std::size_t i) const { return triplets_[i]; }
  const std::vector<SampleTriplet>& triplets() const { return triplets_; }

 private:
  std::vector<SampleTriplet> triplets_;
};

struct Batch {
  ad::Tensor x;  // (B, T)
  ad::Tensor s;
  ad::Tensor n;
  std::size_t noise_only = 0;
};

/// Deterministic batch source. Each epoch visits every window once in a
/// shuffled order; round(f N) of them, chosen at random, are served
/// noise-only (s = 0, x = n). The batch for a step is a pure function of
/// (seed, step).
class BatchStream {
 public:
  BatchStream(const Dataset& dataset, std::size_t batch_size, double noise_only_fraction,
              std::uint64_t seed);

  Batch batch(std::uint64_t step);
  std::size_t epoch_size() const { return epoch_size_; }
  std::size_t noise_only_per_epoch() const { return noise_only_count_; }

  struct Slot {
    std::size_t window;
    bool noise_only;
  };
  /// Order of windows in epoch `e`.
  const std::vector<Slot>& epoch(std::uint64_t e);

 private:
  const Dataset* dataset_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t noise_only_count_ = 0;
  std::size_t speech_count_ = 0;
  std::size_t epoch_size_ = 0;
  std::uint64_t cached_epoch_ = ~std::uint64_t{0};
  std::vector<Slot> cached_;
};

}  // namespace mdphd::data
