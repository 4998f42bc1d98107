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

#include <span>
#include <string_view>

#include "mdphd/dsp.hpp"
#include "mdphd/tensor.hpp"

namespace mdphd::objectives {

enum class LossKind { kL1Energy, kL2Energy, kSnr, kSpecL2 };

/// Accepts the CLI spellings l1, l2, snr, spec.
LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

/// Floor on the error power of the SNR objective, relative to signal power.
inline constexpr double kSnrEpsilon = 1e-12;

/// Loss of a speech estimate against the aligned (x, s, n) triplet.
///
/// All tensors are (B, T). Norms are taken over the whole window and the
/// result is the mean over the batch:
///   kL1Energy  |s - est|_1 + |n - (x - est)|_1
///   kL2Energy  |s - est|_2 + |n - (x - est)|_2
///   kSnr       -10 log10(|s|^2 / max(|s - est|^2, eps |s|^2))
///   kSpecL2    | |STFT(s)| - |STFT(est)| |_2
/// Silent references (|s|^2 = 0, noise-only windows) use |s|^2 := eps in kSnr.
ad::Tensor base_loss(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                     const ad::Tensor& estimate, LossKind kind,
                     const dsp::StftConfig& stft = {});

/// Sum of base_loss over every intermediate estimate, then every final one,
/// in the order given.
ad::Tensor hybrid_loss(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                       std::span<const ad::Tensor> mid_estimates,
                       std::span<const ad::Tensor> final_estimates, LossKind kind,
                       const dsp::StftConfig& stft = {});

/// Waveform convenience wrapper for a single window.
double base_loss(const dsp::Waveform& x, const dsp::Waveform& s, const dsp::Waveform& n,
                 const dsp::Waveform& estimate, LossKind kind);

}  // namespace mdphd::objectives
