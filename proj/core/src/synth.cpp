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
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "fft.hpp"
#include "mdphd/data.hpp"
#include "mdphd/errors.hpp"

namespace mdphd::data {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void normalize_rms(std::vector<double>& v, double target) {
  double energy = 0.0;
  for (double x : v) energy += x * x;
  if (energy == 0.0) return;
  const double g = target / std::sqrt(energy / static_cast<double>(v.size()));
  for (double& x : v) x *= g;
}

// Gaussian noise with power spectrum ~1/f inside [lo, hi] Hz, zero outside.
std::vector<double> pink_band_noise(std::size_t length, double lo, double hi, int rate,
                                    Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::complex<double>> buf(length);
  for (auto& v : buf) v = gauss(rng);
  const auto& fft = dsp::detail::Fft::of_size(length);
  fft.forward(buf, buf);
  const double df = static_cast<double>(rate) / static_cast<double>(length);
  for (std::size_t k = 0; k < length; ++k) {
    const std::size_t mirrored = std::min(k, length - k);
    const double f = static_cast<double>(mirrored) * df;
    buf[k] *= (f >= lo && f <= hi) ? 1.0 / std::sqrt(f) : 0.0;
  }
  fft.inverse(buf, buf);
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kHighFreq: return "highfreq";
    case NoiseKind::kBabble: return "babble";
    case NoiseKind::kMixture: return "mixture";
  }
  return "?";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "highfreq") return NoiseKind::kHighFreq;
  if (name == "babble") return NoiseKind::kBabble;
  if (name == "mixture" || name == "both") return NoiseKind::kMixture;
  throw InvalidArgument("unknown noise kind '" + std::string(name) +
                        "' (expected highfreq, babble, mixture)");
}

void SynthNoiseSpec::validate() const {
  const double nyquist = sample_rate / 2.0;
  if (!(band_low_hz > 0.0 && band_low_hz < band_high_hz && band_high_hz < nyquist)) {
    throw InvalidArgument("noise band [" + std::to_string(band_low_hz) + ", " +
                          std::to_string(band_high_hz) + "] Hz must lie inside (0, " +
                          std::to_string(nyquist) + ")");
  }
  if (kind != NoiseKind::kHighFreq && component_count == 1) {
    throw InvalidArgument("babble surrogate needs at least 2 components");
  }
}

void to_json(nlohmann::json& j, const SynthNoiseSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"band", {s.band_low_hz, s.band_high_hz}},
                     {"components", s.component_count},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SynthNoiseSpec& s) {
  s = SynthNoiseSpec{};
  s.kind = parse_noise_kind(j.at("kind").get<std::string>());
  if (j.contains("band")) {
    s.band_low_hz = j.at("band").at(0).get<double>();
    s.band_high_hz = j.at("band").at(1).get<double>();
  }
  s.component_count = j.value("components", std::size_t{0});
  s.seed = j.value("seed", std::uint64_t{0});
  s.validate();
}

dsp::Waveform gen_highfreq_noise(const SynthNoiseSpec& spec, std::size_t length,
                                 std::uint64_t seed) {
  spec.validate();
  if (length == 0) throw InvalidArgument("noise length must be positive");
  Rng rng(seed);
  const std::size_t k = spec.component_count == 0 ? 4 : spec.component_count;
  dsp::Waveform w{std::vector<double>(length, 0.0), spec.sample_rate};
  for (std::size_t c = 0; c < k; ++c) {
    const double f = uniform(rng, spec.band_low_hz, spec.band_high_hz);
    const double phase = uniform(rng, 0.0, kTwoPi);
    const double step = kTwoPi * f / spec.sample_rate;
    for (std::size_t i = 0; i < length; ++i) {
      w.samples[i] += std::sin(step * static_cast<double>(i) + phase);
    }
  }
  normalize_rms(w.samples, 1.0);
  return w;
}

dsp::Waveform gen_babble_surrogate(const SynthNoiseSpec& spec, std::size_t length,
                                   std::uint64_t seed) {
  spec.validate();
  if (length == 0) throw InvalidArgument("noise length must be positive");
  Rng rng(seed);
  const std::size_t k = spec.component_count == 0 ? 6 : spec.component_count;
  dsp::Waveform w{std::vector<double>(length, 0.0), spec.sample_rate};
  for (std::size_t c = 0; c < k; ++c) {
    auto stream = pink_band_noise(length, 100.0, 4000.0, spec.sample_rate, rng);
    normalize_rms(stream, 1.0);
    const double rate = uniform(rng, 2.0, 8.0);
    const double phase = uniform(rng, 0.0, kTwoPi);
    const double depth = uniform(rng, 0.6, 0.95);
    const double step = kTwoPi * rate / spec.sample_rate;
    for (std::size_t i = 0; i < length; ++i) {
      w.samples[i] += stream[i] * (1.0 + depth * std::sin(step * static_cast<double>(i) + phase));
    }
  }
  normalize_rms(w.samples, 1.0);
  return w;
}

dsp::Waveform gen_mixture_noise(const SynthNoiseSpec& spec, std::size_t length,
                                std::uint64_t seed) {
  SynthNoiseSpec babble = spec;
  babble.kind = NoiseKind::kBabble;
  SynthNoiseSpec sines = spec;
  sines.kind = NoiseKind::kHighFreq;
  sines.component_count = 0;
  babble.component_count = spec.component_count;
  auto a = gen_babble_surrogate(babble, length, seed);
  auto b = gen_highfreq_noise(sines, length, seed ^ 0x5851f42d4c957f2dULL);
  for (std::size_t i = 0; i < length; ++i) a.samples[i] += b.samples[i];
  normalize_rms(a.samples, 1.0);
  return a;
}

dsp::Waveform gen_noise(const SynthNoiseSpec& spec, std::size_t length) {
  switch (spec.kind) {
    case NoiseKind::kHighFreq: return gen_highfreq_noise(spec, length, spec.seed);
    case NoiseKind::kBabble: return gen_babble_surrogate(spec, length, spec.seed);
    case NoiseKind::kMixture: return gen_mixture_noise(spec, length, spec.seed);
  }
  throw InvalidArgument("unknown noise kind");
}

dsp::Waveform gen_speech_surrogate(std::size_t length, std::uint64_t seed, int sample_rate) {
  if (length == 0) throw InvalidArgument("speech length must be positive");
  Rng rng(seed);
  const double sr = sample_rate;
  dsp::Waveform w{std::vector<double>(length, 0.0), sample_rate};

  struct Formant {
    double start, end, bandwidth;
  };
  std::size_t pos = static_cast<std::size_t>(uniform(rng, 0.0, 0.05) * sr);
  std::size_t syllables_left = 0;
  while (pos < length) {
    if (syllables_left == 0) {
      syllables_left = 2 + static_cast<std::size_t>(uniform(rng, 0.0, 3.0));
      pos += static_cast<std::size_t>(uniform(rng, 0.08, 0.3) * sr);
      continue;
    }
    --syllables_left;
    const std::size_t dur = static_cast<std::size_t>(uniform(rng, 0.12, 0.3) * sr);
    const double f0_start = uniform(rng, 100.0, 250.0);
    const double f0_end = std::clamp(f0_start * uniform(rng, 0.8, 1.2), 90.0, 280.0);
    const Formant formants[] = {
        {uniform(rng, 300.0, 900.0), uniform(rng, 300.0, 900.0), 90.0},
        {uniform(rng, 900.0, 2500.0), uniform(rng, 900.0, 2500.0), 120.0},
        {uniform(rng, 2500.0, 3500.0), uniform(rng, 2500.0, 3500.0), 180.0},
    };
    const double level = uniform(rng, 0.5, 1.0);
    double phase = uniform(rng, 0.0, kTwoPi);
    for (std::size_t i = 0; i < dur && pos + i < length; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(dur);
      const double f0 = f0_start + (f0_end - f0_start) * t;
      phase += kTwoPi * f0 / sr;
      const double env = level * std::sin(std::numbers::pi * t) * std::sin(std::numbers::pi * t);
      double sample = 0.0;
      for (std::size_t h = 1; h * f0 < 4000.0; ++h) {
        const double f = static_cast<double>(h) * f0;
        double gain = 0.0;
        for (const auto& fm : formants) {
          const double centre = fm.start + (fm.end - fm.start) * t;
          const double d = (f - centre) / fm.bandwidth;
          gain += 1.0 / (1.0 + d * d);
        }
        sample += gain / (1.0 + f / 1000.0) * std::sin(static_cast<double>(h) * phase);
      }
      w.samples[pos + i] += env * sample;
    }
    pos += dur + static_cast<std::size_t>(uniform(rng, 0.02, 0.06) * sr);
  }
  normalize_rms(w.samples, 0.1);
  return w;
}

}  // namespace mdphd::data
