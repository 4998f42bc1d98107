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

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "mdphd/data.hpp"
#include "mdphd/errors.hpp"
#include "oracles.hpp"

namespace mdphd {
namespace {

using testing::Rng;

void put_u16(std::vector<unsigned char>& b, unsigned v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

void put_tag(std::vector<unsigned char>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

std::vector<unsigned char> make_wav(unsigned format, unsigned channels, std::uint32_t rate,
                                    unsigned bits, const std::vector<unsigned char>& data) {
  std::vector<unsigned char> b;
  put_tag(b, "RIFF");
  put_u32(b, static_cast<std::uint32_t>(36 + data.size()));
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, format);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * bits / 8);
  put_u16(b, channels * bits / 8);
  put_u16(b, bits);
  put_tag(b, "data");
  put_u32(b, static_cast<std::uint32_t>(data.size()));
  b.insert(b.end(), data.begin(), data.end());
  return b;
}

std::vector<unsigned char> pcm16(const std::vector<std::int16_t>& v) {
  std::vector<unsigned char> out;
  for (auto s : v) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

double rms(const std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return std::sqrt(e / static_cast<double>(v.size()));
}

TEST(Wav, ReadsHandBuiltPcm16) {
  const auto dir = testing::temp_dir("wav");
  testing::write_bytes(dir / "a.wav", make_wav(1, 1, 16000, 16, pcm16({0, 16384, -32768, 32767})));
  const auto w = data::read_wav(dir / "a.wav");
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w.sample_rate, 16000);
  EXPECT_EQ(w.samples[0], 0.0);
  EXPECT_EQ(w.samples[1], 0.5);
  EXPECT_EQ(w.samples[2], -1.0);
  EXPECT_EQ(w.samples[3], 32767.0 / 32768.0);
}

TEST(Wav, Float32RoundTripIsExactForFloats) {
  const auto dir = testing::temp_dir("wavf");
  Rng rng(1);
  dsp::Waveform w{testing::random_vector(1000, rng, 0.5), 16000};
  for (double& v : w.samples) v = static_cast<float>(v);
  data::write_wav(dir / "f.wav", w, data::WavEncoding::kFloat32);
  const auto back = data::read_wav(dir / "f.wav");
  ASSERT_EQ(back.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) ASSERT_EQ(back.samples[i], w.samples[i]);
  EXPECT_EQ(testing::read_bytes(dir / "f.wav").size(), 44u + 4000u);
}

TEST(Wav, Pcm16RoundTripWithinHalfStepAndClips) {
  const auto dir = testing::temp_dir("wavp");
  dsp::Waveform w{{0.1, -0.3, 0.7, 1.5, -2.0}, 16000};
  data::write_wav(dir / "p.wav", w);
  const auto back = data::read_wav(dir / "p.wav");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back.samples[i], w.samples[i], 0.5 / 32768.0);
  EXPECT_EQ(back.samples[3], 32767.0 / 32768.0);
  EXPECT_EQ(back.samples[4], -1.0);
}

TEST(Wav, RejectsUnsupportedInputs) {
  const auto dir = testing::temp_dir("wavbad");
  const auto samples = pcm16({1, 2, 3, 4});
  testing::write_bytes(dir / "stereo.wav", make_wav(1, 2, 16000, 16, samples));
  testing::write_bytes(dir / "rate.wav", make_wav(1, 1, 44100, 16, samples));
  testing::write_bytes(dir / "alaw.wav", make_wav(6, 1, 16000, 8, samples));
  auto truncated = make_wav(1, 1, 16000, 16, samples);
  truncated.resize(30);
  testing::write_bytes(dir / "trunc.wav", truncated);
  testing::write_bytes(dir / "text.wav", {'h', 'e', 'l', 'l', 'o'});
  for (const char* name : {"stereo.wav", "rate.wav", "alaw.wav", "trunc.wav", "text.wav",
                           "missing.wav"}) {
    EXPECT_THROW(data::read_wav(dir / name), FormatError) << name;
  }
  EXPECT_THROW(data::write_wav(dir / "x.wav", dsp::Waveform{{0.0}, 8000}), InvalidArgument);
}

TEST(Mixing, RecoversRequestedSnrExactly) {
  Rng rng(2);
  for (double snr : {-10.0, 0.0, 5.0, 10.0, 15.0}) {
    dsp::Waveform s{testing::random_vector(4000, rng, 0.1), 16000};
    dsp::Waveform n{testing::random_vector(4000, rng, 0.7), 16000};
    const auto m = data::mix_at_snr(s, n, snr);
    double es = 0.0, en = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      es += s.samples[i] * s.samples[i];
      en += m.scaled_noise.samples[i] * m.scaled_noise.samples[i];
      ASSERT_EQ(m.x.samples[i], s.samples[i] + m.scaled_noise.samples[i]);
    }
    EXPECT_NEAR(10.0 * std::log10(es / en), snr, 1e-9);
  }
}

TEST(Mixing, RejectsDegenerateInputs) {
  dsp::Waveform s{{0.1, 0.2}, 16000}, z{{0.0, 0.0}, 16000}, short_n{{0.1}, 16000};
  EXPECT_THROW(data::mix_at_snr(s, z, 0.0), InvalidArgument);
  EXPECT_THROW(data::mix_at_snr(z, s, 0.0), InvalidArgument);
  EXPECT_THROW(data::mix_at_snr(s, short_n, 0.0), InvalidArgument);
  EXPECT_THROW(data::mix_at_snr(s, s, NAN), InvalidArgument);
}

TEST(Mixing, NoiseOnlyLevelTracksNominalSpeech) {
  Rng rng(3);
  dsp::Waveform n{testing::random_vector(5000, rng, 2.0), 16000};
  const auto leveled = data::level_noise_only(n, 5.0);
  EXPECT_NEAR(20.0 * std::log10(0.1 / rms(leveled.samples)), 5.0, 1e-9);
}

TEST(Windows, CountAndSlicing) {
  EXPECT_EQ(data::window_count(1, 16384, 8192), 1u);
  EXPECT_EQ(data::window_count(16384, 16384, 8192), 1u);
  EXPECT_EQ(data::window_count(16385, 16384, 8192), 2u);
  EXPECT_EQ(data::window_count(32768, 16384, 8192), 3u);
  EXPECT_EQ(data::window_count(32769, 16384, 8192), 4u);
  EXPECT_THROW(data::window_count(10, 0, 1), InvalidArgument);

  std::vector<double> v(23);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
  const auto wins = data::slice_windows({v, 16000}, 10, 5);
  ASSERT_EQ(wins.size(), 4u);
  for (std::size_t k = 0; k < wins.size(); ++k) {
    EXPECT_EQ(wins[k].offset, 5 * k);
    EXPECT_EQ(wins[k].samples.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
      const std::size_t at = 5 * k + i;
      EXPECT_EQ(wins[k].samples[i], at < 23 ? v[at] : 0.0);
    }
  }
  EXPECT_FALSE(wins[2].padded);
  EXPECT_TRUE(wins[3].padded);
  EXPECT_EQ(wins[3].valid_length, 8u);
  EXPECT_THROW(data::slice_windows({{}, 16000}, 10, 5), InvalidArgument);
}

TEST(Windows, OverlapAddInvertsSlicing) {
  Rng rng(4);
  for (std::size_t length : {7u, 100u, 16384u, 40000u}) {
    dsp::Waveform w{testing::random_vector(length, rng), 16000};
    const auto back = data::overlap_add(data::slice_windows(w, 16384, 8192), length);
    ASSERT_EQ(back.size(), length);
    for (std::size_t i = 0; i < length; ++i) ASSERT_NEAR(back.samples[i], w.samples[i], 1e-12);
  }
}

TEST(Windows, OverlapAddBlendsLinearly) {
  // Two constant windows overlapping by 4: the ramp weights give a linear cross-fade.
  std::vector<data::Window> wins(2);
  wins[0].samples.assign(8, 1.0);
  wins[1].samples.assign(8, 3.0);
  wins[1].offset = 4;
  const auto out = data::overlap_add(wins, 12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out.samples[i], 1.0);
  for (std::size_t i = 4; i < 8; ++i) {
    const double up = (static_cast<double>(i - 4) + 0.5) / 4.0;
    const double down = (static_cast<double>(8 - i) - 0.5) / 4.0;
    EXPECT_NEAR(out.samples[i], (down * 1.0 + up * 3.0) / (up + down), 1e-15);
  }
  for (std::size_t i = 8; i < 12; ++i) EXPECT_EQ(out.samples[i], 3.0);
}

TEST(Synth, NoiseAndSpeechLevels) {
  data::SynthNoiseSpec spec;
  for (auto kind : {data::NoiseKind::kHighFreq, data::NoiseKind::kBabble,
                    data::NoiseKind::kMixture}) {
    spec.kind = kind;
    spec.seed = 5;
    const auto n = data::gen_noise(spec, 16384);
    EXPECT_EQ(n.size(), 16384u);
    EXPECT_NEAR(rms(n.samples), 1.0, 1e-9) << data::to_string(kind);
    const auto again = data::gen_noise(spec, 16384);
    EXPECT_EQ(again.samples, n.samples);
    EXPECT_EQ(data::parse_noise_kind(data::to_string(kind)), kind);
  }
  const auto sp = data::gen_speech_surrogate(32000, 6);
  EXPECT_NEAR(rms(sp.samples), 0.1, 1e-9);
  EXPECT_NE(data::gen_speech_surrogate(32000, 7).samples, sp.samples);
  EXPECT_THROW(data::parse_noise_kind("pink"), InvalidArgument);
}

// Fraction of energy above `hz`, from a direct DFT of the first 2048 samples.
double energy_above(const std::vector<double>& v, double hz) {
  const std::size_t n = 2048;
  double hi = 0.0, total = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = 2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n);
      re += v[t] * std::cos(a);
      im -= v[t] * std::sin(a);
    }
    const double p = re * re + im * im;
    total += p;
    if (static_cast<double>(k) * 16000.0 / static_cast<double>(n) > hz) hi += p;
  }
  return hi / total;
}

TEST(Synth, SpectralPlacement) {
  data::SynthNoiseSpec spec;
  spec.kind = data::NoiseKind::kHighFreq;
  EXPECT_GT(energy_above(data::gen_noise(spec, 4096).samples, 900.0), 0.95);
  spec.kind = data::NoiseKind::kBabble;
  EXPECT_LT(energy_above(data::gen_noise(spec, 4096).samples, 4200.0), 0.05);
}

data::Dataset toy_dataset(std::size_t windows, std::size_t length) {
  Rng rng(8);
  std::vector<data::SampleTriplet> ts(windows);
  for (std::size_t i = 0; i < windows; ++i) {
    ts[i].s = testing::random_vector(length, rng);
    ts[i].n = testing::random_vector(length, rng);
    ts[i].x.resize(length);
    for (std::size_t j = 0; j < length; ++j) ts[i].x[j] = ts[i].s[j] + ts[i].n[j];
    ts[i].entry = i;
  }
  return data::Dataset::from_triplets(std::move(ts));
}

TEST(BatchStream, EpochIsAPermutationWithQuarterNoiseOnly) {
  const auto ds = toy_dataset(37, 8);
  data::BatchStream stream(ds, 4, 0.25, 11);
  EXPECT_EQ(stream.noise_only_per_epoch(), 9u);  // round(9.25)
  for (std::uint64_t e = 0; e < 3; ++e) {
    const auto slots = stream.epoch(e);
    std::set<std::size_t> seen;
    std::size_t noise_only = 0;
    for (const auto& s : slots) {
      seen.insert(s.window);
      noise_only += s.noise_only;
    }
    EXPECT_EQ(seen.size(), 37u);
    EXPECT_EQ(noise_only, 9u);
  }
}

TEST(BatchStream, BatchIsPureFunctionOfSeedAndStep) {
  const auto ds = toy_dataset(20, 16);
  data::BatchStream a(ds, 3, 0.25, 5), b(ds, 3, 0.25, 5), c(ds, 3, 0.25, 6);
  const auto late = a.batch(17);
  a.batch(2);
  const auto again = a.batch(17);
  const auto fresh = b.batch(17);
  const auto other = c.batch(17);
  for (std::size_t i = 0; i < late.x.numel(); ++i) {
    ASSERT_EQ(late.x.values()[i], again.x.values()[i]);
    ASSERT_EQ(late.x.values()[i], fresh.x.values()[i]);
  }
  bool differs = false;
  for (std::size_t i = 0; i < late.x.numel(); ++i) differs |= late.x.values()[i] != other.x.values()[i];
  EXPECT_TRUE(differs);
}

TEST(BatchStream, NoiseOnlySlotsHaveSilentSpeech) {
  const auto ds = toy_dataset(16, 8);
  data::BatchStream stream(ds, 4, 0.25, 3);
  std::size_t noise_only = 0;
  for (std::uint64_t step = 0; step < 4; ++step) {
    const auto b = stream.batch(step);
    noise_only += b.noise_only;
    std::size_t silent_rows = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      double es = 0.0, dx = 0.0;
      for (std::size_t j = 0; j < 8; ++j) {
        const std::size_t k = r * 8 + j;
        es += std::abs(b.s.values()[k]);
        dx = std::max(dx, std::abs(b.x.values()[k] - b.s.values()[k] - b.n.values()[k]));
      }
      EXPECT_LT(dx, 1e-15);
      silent_rows += es == 0.0;
    }
    EXPECT_EQ(silent_rows, b.noise_only);
  }
  EXPECT_EQ(noise_only, 4u);
  EXPECT_THROW(data::BatchStream(ds, 0, 0.25, 1), InvalidArgument);
  EXPECT_THROW(data::BatchStream(ds, 1, 1.5, 1), InvalidArgument);
}

TEST(Manifest, RoundTripAndRelativePaths) {
  const auto dir = testing::temp_dir("manifest");
  data::Manifest m;
  m.noise_only_fraction = 0.3;
  data::ManifestEntry a;
  a.clean = dir / "clean" / "a.wav";
  data::SynthNoiseSpec spec;
  spec.kind = data::NoiseKind::kBabble;
  spec.seed = 42;
  a.noise_synth = spec;
  a.snr_db = 5.0;
  a.split = data::Split::kTest;
  a.kind = "babble";
  data::ManifestEntry b;
  b.noise_path = dir / "noise.wav";
  b.snr_db = -10.0;
  m.entries = {a, b};
  data::write_manifest(dir / "m.jsonl", m);
  const auto back = data::read_manifest(dir / "m.jsonl");
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.noise_only_fraction, 0.3);
  EXPECT_EQ(back.entries[0].clean, a.clean);
  EXPECT_EQ(back.entries[0].noise_synth->seed, 42u);
  EXPECT_EQ(back.entries[0].noise_synth->kind, data::NoiseKind::kBabble);
  EXPECT_EQ(back.entries[0].split, data::Split::kTest);
  EXPECT_EQ(back.entries[1].snr_db, -10.0);
  EXPECT_FALSE(back.entries[1].clean.has_value());

  std::ofstream(dir / "rel.jsonl") << R"({"clean": "c.wav", "noise": "n.wav", "snr_db": 0})" << '\n';
  const auto rel = data::read_manifest(dir / "rel.jsonl");
  EXPECT_EQ(rel.entries[0].clean, dir / "c.wav");
  EXPECT_THROW(data::read_manifest(dir / "nope.jsonl"), FormatError);
  std::ofstream(dir / "bad.jsonl") << "{not json\n";
  EXPECT_THROW(data::read_manifest(dir / "bad.jsonl"), FormatError);
}

TEST(Dataset, LoadsAndMixesManifestEntries) {
  const auto dir = testing::temp_dir("dataset");
  data::write_wav(dir / "s.wav", data::gen_speech_surrogate(20000, 1), data::WavEncoding::kFloat32);
  data::Manifest m;
  data::ManifestEntry e;
  e.clean = dir / "s.wav";
  data::SynthNoiseSpec spec;
  spec.seed = 3;
  e.noise_synth = spec;
  e.snr_db = 5.0;
  m.entries = {e};
  const auto u = data::load_utterance(m, 0);
  EXPECT_NEAR(20.0 * std::log10(rms(u.s.samples) / rms(u.n.samples)), 5.0, 1e-9);
  const auto ds = data::Dataset::load(m, {});
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_TRUE(ds[1].padded);
  EXPECT_EQ(ds[1].valid_length, 20000u - 8192u);
  EXPECT_EQ(data::Dataset::load(m, {16384, 8192, data::Split::kTest}).size(), 0u);
}

}  // namespace
}  // namespace mdphd
