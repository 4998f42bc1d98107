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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mdphd/data.hpp"

namespace mdphd::metrics {

/// Error power floor relative to the reference power; caps SNR at 120 dB.
inline constexpr double kErrorFloor = 1e-12;

/// 10 log10(sum s^2 / max(sum (s - est)^2, 1e-12 sum s^2)).
double snr_db(std::span<const double> reference, std::span<const double> estimate);

struct SegmentalConfig {
  std::size_t frame = 512;
  std::size_t hop = 256;
  double min_db = -10.0;
  double max_db = 35.0;
  // Frames whose reference energy is at most this fraction of the loudest
  // frame's energy count as silence.
  double silence_ratio = 1e-8;
};

/// Mean of clamped per-frame SNRs over non-silent frames. Frames start at
/// multiples of the hop and must fit entirely; a signal shorter than one
/// frame is a single frame.
double segmental_snr(std::span<const double> reference, std::span<const double> estimate,
                     const SegmentalConfig& cfg = {});

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct ReportRow {
  std::string noise_kind;
  double input_snr_db = 0.0;
  std::string metric;
  double mean = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;

  /// Header noise_kind,input_snr_db,metric,mean,count.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
  const ReportRow* find(std::string_view kind, double snr_db, std::string_view metric) const;
};

/// Collects per-item values by (noise kind, input SNR, metric). Means are
/// order-independent: values are sorted before compensated summation.
class ReportBuilder {
 public:
  void add(const std::string& kind, double input_snr_db, const std::string& metric, double value);
  EvalReport build() const;

 private:
  std::map<std::tuple<std::string, double, std::string>, std::vector<double>> cells_;
};

// Metric names used in reports.
inline constexpr const char* kInputSnr = "input_snr";
inline constexpr const char* kOutputSnr = "output_snr";
inline constexpr const char* kSnrImprovement = "snr_improvement";
inline constexpr const char* kInputSsnr = "input_ssnr";
inline constexpr const char* kOutputSsnr = "output_ssnr";

/// Maps a noisy window (length `window`) to an enhanced window.
using WindowEnhancer = std::function<std::vector<double>(const std::vector<double>&)>;

struct EvalOptions {
  std::size_t window = 16384;
  std::size_t hop = 8192;
  bool per_utterance = false;
  std::size_t jobs = 1;
  /// Must be safe to call concurrently when jobs > 1.
  WindowEnhancer enhancer;
};

/// Runs the enhancer over the test split. Per-window scores cover only the
/// unpadded samples of each window; with per_utterance the windows are
/// cross-faded back to full length first. Entries without clean speech are
/// skipped.
EvalReport evaluate(const data::Manifest& manifest, const EvalOptions& options);

/// Scores trios <dir>/{noisy,enhanced,clean}/<name>.wav. Conditions come
/// from the manifest entry whose noisy file has the same name, if any;
/// otherwise ("pairs", measured input SNR rounded to 1 dB).
EvalReport evaluate_pairs(const std::filesystem::path& dir, const data::Manifest* manifest);

/// Slices `x`, enhances every window and cross-fades the results back to
/// x's length.
dsp::Waveform enhance_utterance(const dsp::Waveform& x, const WindowEnhancer& enhancer,
                                std::size_t window = 16384, std::size_t hop = 8192);

}  // namespace mdphd::metrics
