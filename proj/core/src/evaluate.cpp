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

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mdphd/errors.hpp"
#include "mdphd/log.hpp"
#include "mdphd/metrics.hpp"

namespace mdphd::metrics {
namespace {

namespace fs = std::filesystem;

struct Score {
  std::string metric;
  double value;
};

void score_segment(std::span<const double> s, std::span<const double> x,
                   std::span<const double> est, std::vector<Score>& out) {
  double energy = 0.0;
  for (double v : s) energy += v * v;
  if (energy == 0.0) return;
  const double in = snr_db(s, x);
  const double o = snr_db(s, est);
  out.push_back({kInputSnr, in});
  out.push_back({kOutputSnr, o});
  out.push_back({kSnrImprovement, o - in});
  try {
    const double in_seg = segmental_snr(s, x);
    const double out_seg = segmental_snr(s, est);
    out.push_back({kInputSsnr, in_seg});
    out.push_back({kOutputSsnr, out_seg});
  } catch (const InvalidArgument&) {
    // No active frames in this segment: SNR is still reported.
  }
}

std::vector<Score> score_utterance(const data::Utterance& u, const EvalOptions& opt) {
  std::vector<Score> scores;
  if (opt.per_utterance) {
    const auto est = enhance_utterance(u.x, opt.enhancer, opt.window, opt.hop);
    score_segment(u.s.samples, u.x.samples, est.samples, scores);
    return scores;
  }
  const auto xs = data::slice_windows(u.x, opt.window, opt.hop);
  const auto ss = data::slice_windows(u.s, opt.window, opt.hop);
  for (std::size_t w = 0; w < xs.size(); ++w) {
    const auto est = opt.enhancer(xs[w].samples);
    if (est.size() != opt.window) throw InvalidArgument("enhancer changed the window length");
    const std::size_t valid = xs[w].valid_length;
    score_segment(std::span(ss[w].samples).first(valid), std::span(xs[w].samples).first(valid),
                  std::span(est).first(valid), scores);
  }
  return scores;
}

}  // namespace

dsp::Waveform enhance_utterance(const dsp::Waveform& x, const WindowEnhancer& enhancer,
                                std::size_t window, std::size_t hop) {
  auto windows = data::slice_windows(x, window, hop);
  for (auto& w : windows) {
    auto out = enhancer(w.samples);
    if (out.size() != window) throw InvalidArgument("enhancer changed the window length");
    w.samples = std::move(out);
  }
  return data::overlap_add(windows, x.size());
}

EvalReport evaluate(const data::Manifest& manifest, const EvalOptions& options) {
  if (!options.enhancer) throw InvalidArgument("evaluate: no enhancer");
  std::vector<std::size_t> entries;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (e.split != data::Split::kTest) continue;
    if (!e.clean) {
      log_warning("evaluate: entry " + std::to_string(i) + " has no clean speech; skipped");
      continue;
    }
    entries.push_back(i);
  }
  if (entries.empty()) throw InvalidArgument("evaluate: manifest has no test entries with speech");

  std::vector<std::vector<Score>> results(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < entries.size(); k = next++) {
      try {
        results[k] = score_utterance(data::load_utterance(manifest, entries[k]), options);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, entries.size()));
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ReportBuilder builder;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = manifest.entries[entries[k]];
    if (results[k].empty()) {
      log_warning("evaluate: entry " + std::to_string(entries[k]) + " produced no scores");
    }
    for (const auto& s : results[k]) builder.add(e.kind, e.snr_db, s.metric, s.value);
  }
  return builder.build();
}

EvalReport evaluate_pairs(const fs::path& dir, const data::Manifest* manifest) {
  const fs::path noisy_dir = dir / "noisy";
  const fs::path enhanced_dir = dir / "enhanced";
  const fs::path clean_dir = dir / "clean";
  for (const auto& d : {noisy_dir, enhanced_dir, clean_dir}) {
    if (!fs::is_directory(d)) throw InvalidArgument("pairs: missing directory " + d.string());
  }
  std::vector<fs::path> names;
  for (const auto& f : fs::directory_iterator(enhanced_dir)) {
    if (f.path().extension() == ".wav") names.push_back(f.path().filename());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw InvalidArgument("pairs: no WAV files in " + enhanced_dir.string());

  ReportBuilder builder;
  for (const auto& name : names) {
    const auto x = data::read_wav(noisy_dir / name);
    const auto est = data::read_wav(enhanced_dir / name);
    const auto s = data::read_wav(clean_dir / name);
    std::string kind = "pairs";
    double snr = std::round(snr_db(s.samples, x.samples));
    if (manifest) {
      for (const auto& e : manifest->entries) {
        if (e.noisy && e.noisy->filename() == name) {
          kind = e.kind;
          snr = e.snr_db;
          break;
        }
      }
    }
    std::vector<Score> scores;
    score_segment(s.samples, x.samples, est.samples, scores);
    for (const auto& sc : scores) builder.add(kind, snr, sc.metric, sc.value);
  }
  return builder.build();
}

}  // namespace mdphd::metrics
