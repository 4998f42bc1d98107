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
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "mdphd/data.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/log.hpp"

namespace mdphd::data {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNoiseOnlyReferenceRms = 0.1;
constexpr std::size_t kDefaultNoiseOnlyLength = 16384;

double energy(const std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<double> fit_length(std::vector<double> v, std::size_t length) {
  if (v.empty()) throw FormatError("noise signal is empty");
  if (v.size() >= length) {
    v.resize(length);
    return v;
  }
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = v[i % v.size()];
  return out;
}

}  // namespace

Mixture mix_at_snr(const dsp::Waveform& s, const dsp::Waveform& n, double snr_db) {
  if (s.size() != n.size()) {
    throw InvalidArgument("mix_at_snr: length mismatch (" + std::to_string(s.size()) + " vs " +
                          std::to_string(n.size()) + ")");
  }
  const double es = energy(s.samples);
  const double en = energy(n.samples);
  if (es == 0.0) throw InvalidArgument("mix_at_snr: speech has zero energy");
  if (en == 0.0) throw InvalidArgument("mix_at_snr: noise has zero energy");
  if (!std::isfinite(snr_db)) throw InvalidArgument("mix_at_snr: snr must be finite");
  Mixture m;
  m.gain = std::sqrt(es / (en * std::pow(10.0, snr_db / 10.0)));
  m.scaled_noise = {std::vector<double>(n.size()), s.sample_rate};
  m.x = {std::vector<double>(n.size()), s.sample_rate};
  for (std::size_t i = 0; i < n.size(); ++i) {
    m.scaled_noise.samples[i] = m.gain * n.samples[i];
    m.x.samples[i] = s.samples[i] + m.scaled_noise.samples[i];
  }
  return m;
}

dsp::Waveform level_noise_only(const dsp::Waveform& noise, double snr_db) {
  const double en = energy(noise.samples);
  if (en == 0.0) throw InvalidArgument("noise-only entry has zero energy");
  const double target = kNoiseOnlyReferenceRms * kNoiseOnlyReferenceRms *
                        static_cast<double>(noise.size()) / std::pow(10.0, snr_db / 10.0);
  const double g = std::sqrt(target / en);
  dsp::Waveform out = noise;
  for (double& v : out.samples) v *= g;
  return out;
}

std::size_t window_count(std::size_t length, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0) throw InvalidArgument("window and hop must be positive");
  if (length <= window) return 1;
  return (length - window + hop - 1) / hop + 1;
}

std::vector<Window> slice_windows(const dsp::Waveform& w, std::size_t window, std::size_t hop) {
  if (w.empty()) throw InvalidArgument("slice_windows: empty input");
  const std::size_t count = window_count(w.size(), window, hop);
  std::vector<Window> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& win = out[i];
    win.offset = i * hop;
    win.valid_length = std::min(window, w.size() - win.offset);
    win.padded = win.valid_length < window;
    win.samples.assign(window, 0.0);
    std::copy_n(w.samples.begin() + static_cast<std::ptrdiff_t>(win.offset), win.valid_length,
                win.samples.begin());
  }
  return out;
}

dsp::Waveform overlap_add(const std::vector<Window>& windows, std::size_t length) {
  if (windows.empty()) throw InvalidArgument("overlap_add: no windows");
  std::vector<double> acc(length, 0.0);
  std::vector<double> weight(length, 0.0);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    const std::size_t size = w.samples.size();
    // Overlap with the neighbours on each side.
    const std::size_t lead =
        k == 0 ? 0 : std::min(size, windows[k - 1].offset + windows[k - 1].samples.size() - w.offset);
    const std::size_t tail =
        k + 1 == windows.size() ? 0 : std::min(size, w.offset + size - windows[k + 1].offset);
    for (std::size_t i = 0; i < size && w.offset + i < length; ++i) {
      double g = 1.0;
      if (i < lead) g = std::min(g, (static_cast<double>(i) + 0.5) / static_cast<double>(lead));
      if (size - i <= tail) {
        g = std::min(g, (static_cast<double>(size - i) - 0.5) / static_cast<double>(tail));
      }
      acc[w.offset + i] += g * w.samples[i];
      weight[w.offset + i] += g;
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    if (weight[i] > 0.0) acc[i] /= weight[i];
  }
  return {std::move(acc), dsp::kSampleRate};
}

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + std::string(name) + "' (expected train, test)");
}

ManifestEntry entry_from_json(const json& j, const fs::path& base) {
  ManifestEntry e;
  const auto& clean = j.at("clean");
  if (!clean.is_null()) e.clean = resolve(base, clean.get<std::string>());
  const auto& noise = j.at("noise");
  if (noise.is_string()) {
    e.noise_path = resolve(base, noise.get<std::string>());
  } else if (noise.is_object() && noise.contains("synth")) {
    e.noise_synth = noise.at("synth").get<SynthNoiseSpec>();
  } else {
    throw FormatError("manifest: \"noise\" must be a path or {\"synth\": {...}}");
  }
  if (j.contains("noisy") && !j.at("noisy").is_null()) {
    e.noisy = resolve(base, j.at("noisy").get<std::string>());
  }
  e.snr_db = j.at("snr_db").get<double>();
  e.length = j.value("length", std::size_t{0});
  e.split = parse_split(j.value("split", std::string("train")));
  if (j.contains("kind")) {
    e.kind = j.at("kind").get<std::string>();
  } else {
    e.kind = e.noise_synth ? std::string(to_string(e.noise_synth->kind)) : "file";
  }
  return e;
}

json entry_to_json(const ManifestEntry& e) {
  json j;
  j["clean"] = e.clean ? json(e.clean->generic_string()) : json(nullptr);
  if (e.noise_synth) {
    j["noise"] = json{{"synth", *e.noise_synth}};
  } else {
    j["noise"] = e.noise_path ? e.noise_path->generic_string() : std::string();
  }
  if (e.noisy) j["noisy"] = e.noisy->generic_string();
  j["snr_db"] = e.snr_db;
  j["split"] = to_string(e.split);
  j["kind"] = e.kind;
  if (e.length > 0) j["length"] = e.length;
  return j;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open manifest");
  const fs::path base = path.parent_path();
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      if (j.contains("noise_only_fraction") && !j.contains("snr_db")) {
        m.noise_only_fraction = j.at("noise_only_fraction").get<double>();
        if (!(m.noise_only_fraction >= 0.0 && m.noise_only_fraction <= 1.0)) {
          throw FormatError("noise_only_fraction must lie in [0, 1]");
        }
        continue;
      }
      m.entries.push_back(entry_from_json(j, base));
    } catch (const std::exception& ex) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << json{{"noise_only_fraction", manifest.noise_only_fraction}}.dump() << '\n';
  for (const auto& e : manifest.entries) out << entry_to_json(e).dump() << '\n';
}

Utterance load_utterance(const Manifest& manifest, std::size_t index) {
  const auto& e = manifest.entries.at(index);
  Utterance u;
  u.entry = index;
  u.kind = e.kind;
  u.snr_db = e.snr_db;

  std::size_t length = e.length > 0 ? e.length : kDefaultNoiseOnlyLength;
  if (e.clean) {
    u.s = read_wav(*e.clean);
    if (u.s.empty()) throw FormatError(e.clean->string() + ": no samples");
    length = u.s.size();
  }
  dsp::Waveform noise;
  if (e.noise_path) {
    noise = read_wav(*e.noise_path);
    if (!e.clean) length = noise.size();
    noise.samples = fit_length(std::move(noise.samples), length);
  } else {
    noise = gen_noise(*e.noise_synth, length);
  }

  if (e.clean) {
    auto mix = mix_at_snr(u.s, noise, e.snr_db);
    u.x = std::move(mix.x);
    u.n = std::move(mix.scaled_noise);
  } else {
    u.s = {std::vector<double>(length, 0.0), dsp::kSampleRate};
    u.n = level_noise_only(noise, e.snr_db);
    u.x = u.n;
  }
  return u;
}

Dataset Dataset::load(const Manifest& manifest, const DatasetOptions& options) {
  Dataset ds;
  std::size_t considered = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split != options.split) continue;
    ++considered;
    Utterance u;
    try {
      u = load_utterance(manifest, i);
    } catch (const std::exception& ex) {
      log_warning("skipping manifest entry " + std::to_string(i) + ": " + ex.what());
      ++skipped;
      continue;
    }
    const auto xs = slice_windows(u.x, options.window, options.hop);
    const auto ss = slice_windows(u.s, options.window, options.hop);
    const auto ns = slice_windows(u.n, options.window, options.hop);
    for (std::size_t w = 0; w < xs.size(); ++w) {
      SampleTriplet t;
      t.x = xs[w].samples;
      t.s = ss[w].samples;
      t.n = ns[w].samples;
      t.entry = i;
      t.valid_length = xs[w].valid_length;
      t.padded = xs[w].padded;
      t.noise_only = !manifest.entries[i].clean.has_value();
      t.kind = u.kind;
      t.snr_db = u.snr_db;
      ds.triplets_.push_back(std::move(t));
    }
  }
  if (considered > 0 && static_cast<double>(skipped) > 0.1 * static_cast<double>(considered)) {
    throw FormatError("skipped " + std::to_string(skipped) + " of " +
                      std::to_string(considered) + " manifest entries (more than 10%)");
  }
  return ds;
}

Dataset Dataset::from_triplets(std::vector<SampleTriplet> triplets) {
  Dataset ds;
  ds.triplets_ = std::move(triplets);
  return ds;
}

BatchStream::BatchStream(const Dataset& dataset, std::size_t batch_size,
                         double noise_only_fraction, std::uint64_t seed)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed) {
  if (dataset.size() == 0) throw InvalidArgument("dataset is empty");
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(noise_only_fraction >= 0.0 && noise_only_fraction <= 1.0)) {
    throw InvalidArgument("noise-only fraction must lie in [0, 1]");
  }
  noise_only_count_ = static_cast<std::size_t>(
      std::llround(noise_only_fraction * static_cast<double>(dataset.size())));
  speech_count_ = dataset.size() - noise_only_count_;
  epoch_size_ = dataset.size();
}

const std::vector<BatchStream::Slot>& BatchStream::epoch(std::uint64_t e) {
  if (e == cached_epoch_) return cached_;
  std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (e + 1)));
  std::vector<bool> noise_only(epoch_size_, false);
  std::fill_n(noise_only.begin(), noise_only_count_, true);
  std::shuffle(noise_only.begin(), noise_only.end(), rng);
  cached_.resize(epoch_size_);
  for (std::size_t i = 0; i < epoch_size_; ++i) cached_[i] = {i, noise_only[i]};
  std::shuffle(cached_.begin(), cached_.end(), rng);
  cached_epoch_ = e;
  return cached_;
}

Batch BatchStream::batch(std::uint64_t step) {
  const std::size_t len = (*dataset_)[0].x.size();
  Batch b;
  b.x = ad::Tensor::zeros({batch_size_, len});
  b.s = ad::Tensor::zeros({batch_size_, len});
  b.n = ad::Tensor::zeros({batch_size_, len});
  auto x = b.x.mutable_values();
  auto s = b.s.mutable_values();
  auto n = b.n.mutable_values();
  for (std::size_t j = 0; j < batch_size_; ++j) {
    const std::uint64_t i = step * batch_size_ + j;
    const Slot slot = epoch(i / epoch_size_)[i % epoch_size_];
    const auto& t = (*dataset_)[slot.window];
    if (t.x.size() != len) throw InvalidArgument("dataset windows differ in length");
    std::copy(t.n.begin(), t.n.end(), n.begin() + static_cast<std::ptrdiff_t>(j * len));
    if (slot.noise_only) {
      std::copy(t.n.begin(), t.n.end(), x.begin() + static_cast<std::ptrdiff_t>(j * len));
      ++b.noise_only;
    } else {
      std::copy(t.x.begin(), t.x.end(), x.begin() + static_cast<std::ptrdiff_t>(j * len));
      std::copy(t.s.begin(), t.s.end(), s.begin() + static_cast<std::ptrdiff_t>(j * len));
    }
  }
  return b;
}

}  // namespace mdphd::data
