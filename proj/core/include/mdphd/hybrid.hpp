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

#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mdphd/layers.hpp"
#include "mdphd/models.hpp"
#include "mdphd/objectives.hpp"
#include "mdphd/tensor.hpp"

namespace mdphd::hybrid {

enum class PathOrder { kUThenD, kDThenU };

std::string_view to_string(PathOrder order);  // "u2d" / "d2u"
PathOrder parse_path_order(std::string_view name);

/// Even steps run U-Net then TasNet, odd steps the reverse.
PathOrder training_order(std::uint64_t step);

enum class PathMode {
  kAlternating,  // one path per step, chosen by training_order
  kBothPaths,    // both paths every step
  kUThenD,       // single path
  kDThenU,       // single path
  kTasNetOnly,   // TasNet alone, no cascade
  kUNetOnly,     // U-Net alone, no cascade
};

/// Spellings: alt, both, u2d, d2u, tasnet, unet.
std::string_view to_string(PathMode mode);
PathMode parse_path_mode(std::string_view name);

/// What infer() returns.
enum class InferMode { kAuto, kAverage, kUThenD, kDThenU, kTasNet, kUNet };
std::string_view to_string(InferMode mode);
/// Spellings: auto, average, u2d, d2u, tasnet, unet.
InferMode parse_infer_mode(std::string_view name);

struct PathOutput {
  ad::Tensor mid;
  ad::Tensor final;
};

struct HybridConfig {
  models::TasNetConfig tasnet;
  models::UNetConfig unet;
  PathMode mode = PathMode::kAlternating;

  void validate() const;
  /// Architecture fingerprint; the path mode does not take part.
  std::uint64_t fingerprint() const;
};

void to_json(nlohmann::json& j, const HybridConfig& c);
void from_json(const nlohmann::json& j, HybridConfig& c);

/// Both domain networks plus the schedule state. The same two networks are
/// used by both cascade orders.
class HybridModel {
 public:
  HybridModel(HybridConfig config, std::uint64_t seed);

  /// (B, T) -> mid and final estimates of one cascade order.
  PathOutput forward_path(const ad::Tensor& x, PathOrder order, const nn::RunContext& ctx);

  /// Training loss for the current step_counter under the configured mode.
  /// Uses training-mode normalization.
  ad::Tensor train_step_loss(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                             objectives::LossKind kind, bool update_stats = true);

  /// Evaluation-mode inference without gradient recording. kAverage returns
  /// 0.5 * (u2d + d2u); kAuto picks the output matching the path mode.
  ad::Tensor infer(const ad::Tensor& x, InferMode mode = InferMode::kAuto);
  dsp::Waveform infer(const dsp::Waveform& x, InferMode mode = InferMode::kAuto);

  /// Path order(s) the next training step will run, for logging.
  std::string_view current_path_label() const;

  std::uint64_t step_counter() const { return step_; }
  void set_step_counter(std::uint64_t step) { step_ = step; }
  void advance_step() { ++step_; }

  const HybridConfig& config() const { return config_; }
  void set_mode(PathMode mode) { config_.mode = mode; }
  models::TasNet& tasnet() { return tasnet_; }
  models::UNet& unet() { return unet_; }

  std::vector<nn::Parameter> parameters() const;
  std::vector<nn::Buffer> buffers();
  std::size_t param_count() const;

 private:
  ad::Tensor path_loss(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                       PathOrder order, const nn::RunContext& ctx, objectives::LossKind kind);

  HybridConfig config_;
  models::TasNet tasnet_;
  models::UNet unet_;
  std::uint64_t step_ = 0;
};

}  // namespace mdphd::hybrid
