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
#include <iomanip>
#include <ostream>
#include <string>

#include "mdphd/errors.hpp"
#include "mdphd/metrics.hpp"

namespace mdphd::metrics {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw InvalidArgument("empty signal");
}

// Returns (reference energy, error energy).
std::pair<double, double> energies(std::span<const double> s, std::span<const double> est) {
  CompensatedSum ps, pe;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = s[i] - est[i];
    ps.add(s[i] * s[i]);
    pe.add(d * d);
  }
  return {ps.value(), pe.value()};
}

double ratio_db(double signal, double error) {
  return 10.0 * std::log10(signal / std::max(error, kErrorFloor * signal));
}

}  // namespace

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    compensation_ += (sum_ - t) + v;
  } else {
    compensation_ += (v - t) + sum_;
  }
  sum_ = t;
}

double snr_db(std::span<const double> reference, std::span<const double> estimate) {
  check_lengths(reference, estimate);
  const auto [ps, pe] = energies(reference, estimate);
  if (ps == 0.0) throw InvalidArgument("snr_db: reference has zero energy");
  return ratio_db(ps, pe);
}

double segmental_snr(std::span<const double> reference, std::span<const double> estimate,
                     const SegmentalConfig& cfg) {
  check_lengths(reference, estimate);
  if (cfg.frame == 0 || cfg.hop == 0) throw InvalidArgument("segmental_snr: bad frame/hop");
  const std::size_t n = reference.size();
  const std::size_t frame = std::min(cfg.frame, n);
  const std::size_t frames = (n - frame) / cfg.hop + 1;

  std::vector<std::pair<double, double>> e(frames);
  double peak = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    e[f] = energies(reference.subspan(f * cfg.hop, frame), estimate.subspan(f * cfg.hop, frame));
    peak = std::max(peak, e[f].first);
  }
  CompensatedSum total;
  std::size_t active = 0;
  for (const auto& [ps, pe] : e) {
    if (ps <= cfg.silence_ratio * peak || ps == 0.0) continue;
    total.add(std::clamp(ratio_db(ps, pe), cfg.min_db, cfg.max_db));
    ++active;
  }
  if (active == 0) throw InvalidArgument("segmental_snr: no speech frames");
  return total.value() / static_cast<double>(active);
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "noise_kind,input_snr_db,metric,mean,count\n";
  for (const auto& r : rows) {
    out << r.noise_kind << ',' << std::setprecision(17) << r.input_snr_db << ',' << r.metric << ','
        << r.mean << ',' << r.count << '\n';
  }
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  write_csv(out);
}

const ReportRow* EvalReport::find(std::string_view kind, double snr, std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.noise_kind == kind && r.input_snr_db == snr && r.metric == metric) return &r;
  }
  return nullptr;
}

void ReportBuilder::add(const std::string& kind, double input_snr_db, const std::string& metric,
                        double value) {
  cells_[{kind, input_snr_db, metric}].push_back(value);
}

EvalReport ReportBuilder::build() const {
  EvalReport report;
  for (const auto& [key, values] : cells_) {
    if (values.empty()) continue;
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    CompensatedSum sum;
    for (double v : sorted) sum.add(v);
    report.rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                           sum.value() / static_cast<double>(sorted.size()), sorted.size()});
  }
  return report;
}

}  // namespace mdphd::metrics
