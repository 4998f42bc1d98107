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
#include <iostream>
#include <string>

#include "mdphd/errors.hpp"
#include "mdphd/log.hpp"
#include "mdphd/objectives.hpp"
#include "mdphd/ops.hpp"

namespace mdphd {

void log_warning(std::string_view message) {
  std::cerr << "mdphd: warning: " << message << '\n';
}

void log_info(std::string_view message) { std::cerr << "mdphd: " << message << '\n'; }

}  // namespace mdphd

namespace mdphd::objectives {
namespace {

void check_triplet(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                   const ad::Tensor& estimate) {
  if (x.rank() != 2) throw InvalidArgument("loss: expected (B, T) tensors");
  if (s.shape() != x.shape() || n.shape() != x.shape() || estimate.shape() != x.shape()) {
    throw InvalidArgument("loss: length mismatch between x " + ad::to_string(x.shape()) +
                          ", s " + ad::to_string(s.shape()) + ", n " + ad::to_string(n.shape()) +
                          ", estimate " + ad::to_string(estimate.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    worst = std::max(worst, std::abs(x.values()[i] - s.values()[i] - n.values()[i]));
  }
  if (worst > 1e-6) {
    log_warning("loss: x != s + n (max deviation " + std::to_string(worst) + ")");
  }
}

// -10 log10(P / max(E, eps P)) per row, where P = |s|^2 is a constant.
ad::Tensor negative_snr_db(const ad::Tensor& error_energy, std::vector<double> signal_energy) {
  const std::size_t rows = error_energy.numel();
  auto out = ad::Tensor::zeros({rows});
  auto o = out.mutable_values();
  std::vector<bool> floored(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double p = std::max(signal_energy[r], kSnrEpsilon);
    const double floor = kSnrEpsilon * p;
    const double e = error_energy.values()[r];
    floored[r] = e <= floor;
    o[r] = 10.0 * std::log10(std::max(e, floor)) - 10.0 * std::log10(p);
  }
  ad::record({error_energy}, out, [error_energy, floored](std::span<const double> g) mutable {
    auto ge = error_energy.mutable_grad();
    const auto e = error_energy.values();
    for (std::size_t r = 0; r < g.size(); ++r) {
      if (!floored[r]) ge[r] += g[r] * 10.0 / (e[r] * std::log(10.0));
    }
  });
  return out;
}

}  // namespace

LossKind parse_loss_kind(std::string_view name) {
  if (name == "l1") return LossKind::kL1Energy;
  if (name == "l2") return LossKind::kL2Energy;
  if (name == "snr") return LossKind::kSnr;
  if (name == "spec") return LossKind::kSpecL2;
  throw InvalidArgument("unknown loss '" + std::string(name) + "' (expected l1, l2, snr, spec)");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kL1Energy: return "l1";
    case LossKind::kL2Energy: return "l2";
    case LossKind::kSnr: return "snr";
    case LossKind::kSpecL2: return "spec";
  }
  return "?";
}

ad::Tensor base_loss(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                     const ad::Tensor& estimate, LossKind kind, const dsp::StftConfig& stft) {
  check_triplet(x, s, n, estimate);
  switch (kind) {
    case LossKind::kL1Energy:
    case LossKind::kL2Energy: {
      const auto norm = kind == LossKind::kL1Energy ? &ad::row_l1_norm : &ad::row_l2_norm;
      auto speech_err = ad::sub(s, estimate);
      auto noise_err = ad::sub(n, ad::sub(x, estimate));
      return ad::mean(ad::add(norm(speech_err), norm(noise_err)));
    }
    case LossKind::kSnr: {
      const std::size_t rows = s.dim(0);
      const std::size_t cols = s.dim(1);
      std::vector<double> power(rows, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) power[r] += s.values()[r * cols + c] * s.values()[r * cols + c];
      }
      auto err = ad::row_sum_squares(ad::sub(s, estimate));
      return ad::mean(negative_snr_db(err, std::move(power)));
    }
    case LossKind::kSpecL2: {
      auto clean = ad::magnitude(ad::stft(s.detach(), stft));
      auto est = ad::magnitude(ad::stft(estimate, stft));
      return ad::mean(ad::row_l2_norm(ad::sub(clean, est)));
    }
  }
  throw InvalidArgument("unknown loss kind");
}

ad::Tensor hybrid_loss(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                       std::span<const ad::Tensor> mid_estimates,
                       std::span<const ad::Tensor> final_estimates, LossKind kind,
                       const dsp::StftConfig& stft) {
  if (mid_estimates.empty() && final_estimates.empty()) {
    throw InvalidArgument("hybrid_loss: no estimates provided");
  }
  ad::Tensor total;
  auto accumulate = [&](const ad::Tensor& estimate) {
    auto term = base_loss(x, s, n, estimate, kind, stft);
    total = total.defined() ? ad::add(total, term) : term;
  };
  for (const auto& e : mid_estimates) accumulate(e);
  for (const auto& e : final_estimates) accumulate(e);
  return total;
}

double base_loss(const dsp::Waveform& x, const dsp::Waveform& s, const dsp::Waveform& n,
                 const dsp::Waveform& estimate, LossKind kind) {
  ad::NoGradGuard guard;
  auto row = [](const dsp::Waveform& w) { return ad::Tensor::from_vector({1, w.size()}, w.samples); };
  if (s.size() != x.size() || n.size() != x.size() || estimate.size() != x.size()) {
    throw InvalidArgument("loss: windows must have equal lengths");
  }
  return base_loss(row(x), row(s), row(n), row(estimate), kind).item();
}

}  // namespace mdphd::objectives
