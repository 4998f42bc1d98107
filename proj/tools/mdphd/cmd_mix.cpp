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
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "common.hpp"
#include "mdphd/data.hpp"
#include "mdphd/errors.hpp"

namespace mdphd::cli {
namespace {

namespace fs = std::filesystem;

struct MixOptions {
  std::string clean_dir;
  std::size_t synth_clean = 0;
  std::size_t silence = 0;
  std::size_t length = 49152;
  std::string noise = "highfreq,babble,mixture";
  std::string snr = "5,10";
  std::string out;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
  std::string split = "train";
  double noise_only_fraction = 0.25;
  bool force = false;
  std::size_t jobs = 1;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 over the combined key
  std::uint64_t z = seed;
  for (std::uint64_t v : {a, b, c}) {
    z += 0x9e3779b97f4a7c15ULL + v;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
  }
  return z;
}

std::string snr_label(double snr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", snr);
  return buf;
}

struct Source {
  std::string name;
  dsp::Waveform speech;  // empty for noise-only sources
  data::Split split;
};

struct Job {
  std::size_t source;
  std::size_t kind;
  std::size_t snr;
};

int run_mix(const MixOptions& o) {
  const int modes = !o.clean_dir.empty() + (o.synth_clean > 0) + (o.silence > 0);
  if (modes != 1) {
    throw InvalidArgument("mix: give exactly one of --clean, --synth-clean, --silence");
  }
  if (!(o.test_fraction >= 0.0 && o.test_fraction <= 1.0)) {
    throw InvalidArgument("mix: --test-fraction must lie in [0, 1]");
  }
  std::vector<data::NoiseKind> kinds;
  for (const auto& k : split_list(o.noise)) kinds.push_back(data::parse_noise_kind(k));
  if (kinds.empty()) throw InvalidArgument("mix: --noise is empty");
  const auto snrs = parse_number_list(o.snr);
  const auto default_split = data::parse_split(o.split);
  const std::size_t jobs = resolve_jobs(o.jobs);

  const fs::path out(o.out);
  if (fs::exists(out) && !fs::is_empty(out) && !o.force) {
    throw InvalidArgument("mix: output directory " + out.string() +
                          " is not empty (use --force to overwrite)");
  }

  print_config("mix", {{"clean", o.clean_dir},
                       {"synth_clean", o.synth_clean},
                       {"silence", o.silence},
                       {"length", o.length},
                       {"noise", o.noise},
                       {"snr", snrs},
                       {"out", o.out},
                       {"seed", o.seed},
                       {"test_fraction", o.test_fraction},
                       {"split", o.split},
                       {"noise_only_fraction", o.noise_only_fraction},
                       {"force", o.force},
                       {"jobs", jobs},
                       {"wav_encoding", "float32"}});

  std::vector<Source> sources;
  if (!o.clean_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(o.clean_dir)) {
      if (f.path().extension() == ".wav") files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidArgument("mix: no .wav files in " + o.clean_dir);
    for (const auto& f : files) sources.push_back({f.stem().string(), data::read_wav(f), default_split});
  } else if (o.synth_clean > 0) {
    for (std::size_t i = 0; i < o.synth_clean; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "speech_%04zu", i);
      sources.push_back({name, data::gen_speech_surrogate(o.length, mix_seed(o.seed, 1, i, 0)),
                         default_split});
    }
  } else {
    for (std::size_t i = 0; i < o.silence; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "silence_%04zu", i);
      sources.push_back({name, {}, default_split});
    }
  }
  if (o.test_fraction > 0.0) {
    const auto n = sources.size();
    const auto test = static_cast<std::size_t>(std::llround(o.test_fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
      sources[i].split = i >= n - test ? data::Split::kTest : data::Split::kTrain;
    }
  }

  for (const char* sub : {"clean", "noise", "noisy"}) fs::create_directories(out / sub);

  std::vector<Job> work;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      for (std::size_t r = 0; r < snrs.size(); ++r) work.push_back({s, k, r});
    }
  }
  std::vector<data::ManifestEntry> entries(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t w = next++; w < work.size(); w = next++) {
      try {
        const auto& job = work[w];
        const auto& src = sources[job.source];
        const double snr = snrs[job.snr];
        const std::string name = src.name + "_" + std::string(data::to_string(kinds[job.kind])) +
                                 "_snr" + snr_label(snr) + ".wav";
        data::SynthNoiseSpec spec;
        spec.kind = kinds[job.kind];
        spec.seed = mix_seed(o.seed, 2, job.source, job.kind * 1000 + job.snr);
        const std::size_t length = src.speech.empty() ? o.length : src.speech.size();
        const auto noise = data::gen_noise(spec, length);

        data::ManifestEntry e;
        e.snr_db = snr;
        e.split = src.split;
        e.kind = std::string(data::to_string(spec.kind));
        e.noise_path = fs::path("noise") / name;
        e.noisy = fs::path("noisy") / name;
        dsp::Waveform s, n, x;
        if (src.speech.empty()) {
          n = data::level_noise_only(noise, snr);
          s = {std::vector<double>(length, 0.0), dsp::kSampleRate};
          x = n;
        } else {
          auto mix = data::mix_at_snr(src.speech, noise, snr);
          s = src.speech;
          n = mix.scaled_noise;
          x = mix.x;
          e.clean = fs::path("clean") / name;
        }
        data::write_wav(out / "clean" / name, s, data::WavEncoding::kFloat32);
        data::write_wav(out / "noise" / name, n, data::WavEncoding::kFloat32);
        data::write_wav(out / "noisy" / name, x, data::WavEncoding::kFloat32);
        entries[w] = std::move(e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < std::min(jobs, work.size()); ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  data::Manifest manifest;
  manifest.noise_only_fraction = o.noise_only_fraction;
  manifest.entries = std::move(entries);
  const auto manifest_path = out / "manifest.jsonl";
  data::write_manifest(manifest_path, manifest);
  std::cout << "wrote " << manifest.entries.size() << " trios and " << manifest_path.string() << '\n';
  return kOk;
}

}  // namespace

void add_mix(CLI::App& app, int& exit_code) {
  auto opts = std::make_shared<MixOptions>();
  auto* cmd = app.add_subcommand("mix", "Synthesize noisy/clean/noise WAV trios and a manifest");
  cmd->add_option("--clean", opts->clean_dir, "Directory of clean 16 kHz mono WAV files");
  cmd->add_option("--synth-clean", opts->synth_clean,
                  "Generate this many synthetic speech-like clean signals instead of --clean");
  cmd->add_option("--silence", opts->silence,
                  "Generate this many noise-only utterances (no speech) instead of --clean");
  cmd->add_option("--length", opts->length,
                  "Samples per synthetic clean or noise-only utterance")->capture_default_str();
  cmd->add_option("--noise", opts->noise,
                  "Comma-separated noise kinds: highfreq, babble, mixture (or both)")
      ->capture_default_str();
  cmd->add_option("--snr", opts->snr, "Comma-separated SNRs in dB")->capture_default_str();
  cmd->add_option("--out", opts->out, "Output directory")->required();
  cmd->add_option("--seed", opts->seed, "Random seed")->capture_default_str();
  cmd->add_option("--test-fraction", opts->test_fraction,
                  "Fraction of clean sources (the last ones) assigned to the test split")
      ->capture_default_str();
  cmd->add_option("--split", opts->split, "Split tag for all entries: train or test")
      ->capture_default_str();
  cmd->add_option("--noise-only-fraction", opts->noise_only_fraction,
                  "Noise-only share recorded in the manifest")->capture_default_str();
  cmd->add_flag("--force", opts->force, "Allow writing into a non-empty directory");
  cmd->add_option("--jobs", opts->jobs, "Worker threads")->capture_default_str();
  cmd->callback([opts, &exit_code] { exit_code = guarded([&] { return run_mix(*opts); }); });
}

}  // namespace mdphd::cli
