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
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mdphd/data.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/metrics.hpp"
#include "oracles.hpp"

namespace mdphd {
namespace {

using testing::Rng;

TEST(Snr, HandValues) {
  const std::vector<double> s{1.0, -1.0, 1.0, -1.0};
  std::vector<double> est{1.1, -0.9, 0.9, -1.1};  // error power 0.04 vs 4
  EXPECT_NEAR(metrics::snr_db(s, est), 20.0, 1e-12);
  const std::vector<double> half{0.5, -0.5, 0.5, -0.5};
  EXPECT_NEAR(metrics::snr_db(s, half), 10.0 * std::log10(4.0), 1e-12);
  EXPECT_NEAR(metrics::snr_db(s, s), 120.0, 1e-9);
  EXPECT_THROW(metrics::snr_db(s, std::vector<double>{1.0}), InvalidArgument);
}

TEST(Snr, ScaleInvariantInBothArguments) {
  Rng rng(1);
  const auto s = testing::random_vector(500, rng);
  const auto e = testing::random_vector(500, rng);
  auto s3 = s, e3 = e;
  for (double& v : s3) v *= 3.0;
  for (double& v : e3) v *= 3.0;
  EXPECT_NEAR(metrics::snr_db(s, e), metrics::snr_db(s3, e3), 1e-12);
}

TEST(SegmentalSnr, MatchesDirectFrameAverage) {
  Rng rng(2);
  const auto s = testing::random_vector(3000, rng);
  auto e = s;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::mt19937_64 gen(3);
  // Varying noise level per region so some frames hit each clamp.
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double level = i < 1000 ? 1e-3 : (i < 2000 ? 0.3 : 10.0);
    e[i] += level * noise(gen);
  }
  const metrics::SegmentalConfig cfg;
  double total = 0.0;
  std::size_t frames = 0;
  for (std::size_t start = 0; start + cfg.frame <= s.size(); start += cfg.hop) {
    double ps = 0.0, pe = 0.0;
    for (std::size_t i = start; i < start + cfg.frame; ++i) {
      ps += s[i] * s[i];
      pe += (s[i] - e[i]) * (s[i] - e[i]);
    }
    total += std::clamp(10.0 * std::log10(ps / pe), cfg.min_db, cfg.max_db);
    ++frames;
  }
  EXPECT_EQ(frames, 10u);
  EXPECT_NEAR(metrics::segmental_snr(s, e), total / static_cast<double>(frames), 1e-12);
}

TEST(SegmentalSnr, SkipsSilenceAndClamps) {
  std::vector<double> s(2048, 0.0), e(2048, 0.0);
  for (std::size_t i = 1024; i < 2048; ++i) s[i] = e[i] = std::sin(0.1 * static_cast<double>(i));
  // Silent frames are skipped; the rest are perfect and clamp at the top.
  EXPECT_DOUBLE_EQ(metrics::segmental_snr(s, e), 35.0);
  std::vector<double> zero(2048, 0.0);
  EXPECT_THROW(metrics::segmental_snr(zero, zero), InvalidArgument);
  std::vector<double> loud(2048, 0.0);
  for (std::size_t i = 0; i < 2048; ++i) loud[i] = 100.0 * s[i];
  EXPECT_DOUBLE_EQ(metrics::segmental_snr(s, loud), -10.0);
  // Shorter than one frame: a single frame covering everything.
  const std::vector<double> tiny{1.0, 2.0}, tiny_est{1.0, 1.0};
  EXPECT_NEAR(metrics::segmental_snr(tiny, tiny_est), 10.0 * std::log10(5.0), 1e-12);
}

TEST(CompensatedSum, BeatsNaiveSummation) {
  metrics::CompensatedSum sum;
  sum.add(1.0);
  for (int i = 0; i < 1000; ++i) sum.add(1e-16);
  sum.add(-1.0);
  EXPECT_NEAR(sum.value(), 1e-13, 1e-25);
  metrics::CompensatedSum cancel;
  for (double v : {1e100, 1.0, -1e100}) cancel.add(v);
  EXPECT_EQ(cancel.value(), 1.0);
}

TEST(Report, MeansAreOrderIndependentAndCsvIsStable) {
  Rng rng(4);
  auto values = testing::random_vector(200, rng, 10.0);
  metrics::ReportBuilder a, b;
  for (double v : values) a.add("babble", 5.0, metrics::kOutputSnr, v);
  std::reverse(values.begin(), values.end());
  for (double v : values) b.add("babble", 5.0, metrics::kOutputSnr, v);
  a.add("highfreq", -10.0, metrics::kInputSnr, 1.5);
  b.add("highfreq", -10.0, metrics::kInputSnr, 1.5);
  const auto ra = a.build();
  const auto rb = b.build();
  std::ostringstream ca, cb;
  ra.write_csv(ca);
  rb.write_csv(cb);
  EXPECT_EQ(ca.str(), cb.str());
  const auto* row = ra.find("babble", 5.0, metrics::kOutputSnr);
  ASSERT_NE(row, nullptr);
  EXPECT_EQ(row->count, 200u);
  double mean = 0.0;
  for (double v : values) mean += v;
  EXPECT_NEAR(row->mean, mean / 200.0, 1e-12);
  EXPECT_EQ(ra.find("babble", 0.0, metrics::kOutputSnr), nullptr);
  EXPECT_EQ(ca.str().substr(0, ca.str().find('\n')), "noise_kind,input_snr_db,metric,mean,count");
  EXPECT_NE(ca.str().find("highfreq,-10,input_snr,1.5,1\n"), std::string::npos);
}

data::Manifest synthetic_test_manifest(const std::filesystem::path& dir) {
  data::Manifest m;
  for (int i = 0; i < 2; ++i) {
    const auto path = dir / ("s" + std::to_string(i) + ".wav");
    data::write_wav(path, data::gen_speech_surrogate(20000, 10 + i), data::WavEncoding::kFloat32);
    data::ManifestEntry e;
    e.clean = path;
    data::SynthNoiseSpec spec;
    spec.kind = i ? data::NoiseKind::kBabble : data::NoiseKind::kHighFreq;
    spec.seed = 20 + i;
    e.noise_synth = spec;
    e.kind = data::to_string(spec.kind);
    e.snr_db = 5.0;
    e.split = data::Split::kTest;
    m.entries.push_back(e);
  }
  return m;
}

TEST(Evaluate, IdentityEnhancerHasZeroImprovement) {
  const auto dir = testing::temp_dir("eval");
  const auto m = synthetic_test_manifest(dir);
  metrics::EvalOptions opts;
  opts.enhancer = [](const std::vector<double>& w) { return w; };
  const auto report = metrics::evaluate(m, opts);
  for (const char* kind : {"highfreq", "babble"}) {
    const auto* imp = report.find(kind, 5.0, metrics::kSnrImprovement);
    ASSERT_NE(imp, nullptr) << kind;
    EXPECT_NEAR(imp->mean, 0.0, 1e-12);
    EXPECT_EQ(imp->count, 2u);
    const auto* in = report.find(kind, 5.0, metrics::kInputSnr);
    ASSERT_NE(in, nullptr);
    EXPECT_NEAR(in->mean, 5.0, 1.5);
  }
  opts.per_utterance = true;
  const auto utt = metrics::evaluate(m, opts);
  const auto* in = utt.find("babble", 5.0, metrics::kInputSnr);
  ASSERT_NE(in, nullptr);
  EXPECT_EQ(in->count, 1u);
  EXPECT_NEAR(in->mean, 5.0, 1e-9);
}

TEST(Evaluate, OracleEnhancerScoresCeiling) {
  const auto dir = testing::temp_dir("evalclean");
  const auto m = synthetic_test_manifest(dir);
  const auto u = data::load_utterance(m, 0);
  const auto clean = data::slice_windows(u.s);
  std::size_t next = 0;
  metrics::EvalOptions opts;
  opts.per_utterance = true;
  // Sequential single-job run over entry 0 then 1; only entry 0 gets the oracle.
  opts.enhancer = [&](const std::vector<double>& w) {
    return next < clean.size() ? clean[next++].samples : w;
  };
  const auto report = metrics::evaluate(m, opts);
  const auto* out = report.find("highfreq", 5.0, metrics::kOutputSnr);
  ASSERT_NE(out, nullptr);
  EXPECT_NEAR(out->mean, 120.0, 1e-6);
}

TEST(Evaluate, EnhanceUtteranceKeepsLength) {
  Rng rng(5);
  dsp::Waveform x{testing::random_vector(30000, rng), 16000};
  const auto y = metrics::enhance_utterance(x, [](const std::vector<double>& w) {
    auto out = w;
    for (double& v : out) v *= 0.5;
    return out;
  });
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(y.samples[i], 0.5 * x.samples[i], 1e-12);
}

TEST(Evaluate, PairsDirectory) {
  const auto dir = testing::temp_dir("pairs");
  for (const char* sub : {"noisy", "enhanced", "clean"}) std::filesystem::create_directories(dir / sub);
  const auto s = data::gen_speech_surrogate(8000, 1);
  data::SynthNoiseSpec spec;
  const auto mix = data::mix_at_snr(s, data::gen_noise(spec, 8000), 0.0);
  data::write_wav(dir / "clean" / "a.wav", s, data::WavEncoding::kFloat32);
  data::write_wav(dir / "noisy" / "a.wav", mix.x, data::WavEncoding::kFloat32);
  data::write_wav(dir / "enhanced" / "a.wav", mix.x, data::WavEncoding::kFloat32);
  const auto report = metrics::evaluate_pairs(dir, nullptr);
  const auto* imp = report.find("pairs", 0.0, metrics::kSnrImprovement);
  ASSERT_NE(imp, nullptr);
  EXPECT_NEAR(imp->mean, 0.0, 1e-6);
}

}  // namespace
}  // namespace mdphd
