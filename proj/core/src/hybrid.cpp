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

#include <string>

#include <nlohmann/json.hpp>

#include "mdphd/errors.hpp"
#include "mdphd/hybrid.hpp"
#include "mdphd/ops.hpp"

namespace mdphd::hybrid {

std::string_view to_string(PathOrder order) {
  return order == PathOrder::kUThenD ? "u2d" : "d2u";
}

PathOrder parse_path_order(std::string_view name) {
  if (name == "u2d") return PathOrder::kUThenD;
  if (name == "d2u") return PathOrder::kDThenU;
  throw InvalidArgument("unknown path order '" + std::string(name) + "' (expected u2d, d2u)");
}

PathOrder training_order(std::uint64_t step) {
  return step % 2 == 0 ? PathOrder::kUThenD : PathOrder::kDThenU;
}

std::string_view to_string(PathMode mode) {
  switch (mode) {
    case PathMode::kAlternating: return "alt";
    case PathMode::kBothPaths: return "both";
    case PathMode::kUThenD: return "u2d";
    case PathMode::kDThenU: return "d2u";
    case PathMode::kTasNetOnly: return "tasnet";
    case PathMode::kUNetOnly: return "unet";
  }
  return "?";
}

PathMode parse_path_mode(std::string_view name) {
  for (auto m : {PathMode::kAlternating, PathMode::kBothPaths, PathMode::kUThenD,
                 PathMode::kDThenU, PathMode::kTasNetOnly, PathMode::kUNetOnly}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument("unknown path mode '" + std::string(name) +
                        "' (expected alt, both, u2d, d2u, tasnet, unet)");
}

std::string_view to_string(InferMode mode) {
  switch (mode) {
    case InferMode::kAuto: return "auto";
    case InferMode::kAverage: return "average";
    case InferMode::kUThenD: return "u2d";
    case InferMode::kDThenU: return "d2u";
    case InferMode::kTasNet: return "tasnet";
    case InferMode::kUNet: return "unet";
  }
  return "?";
}

InferMode parse_infer_mode(std::string_view name) {
  for (auto m : {InferMode::kAuto, InferMode::kAverage, InferMode::kUThenD, InferMode::kDThenU,
                 InferMode::kTasNet, InferMode::kUNet}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument("unknown enhance mode '" + std::string(name) +
                        "' (expected auto, average, u2d, d2u, tasnet, unet)");
}

void HybridConfig::validate() const {
  tasnet.validate();
  unet.validate();
  if (tasnet.window_length != unet.window_length) {
    throw InvalidArgument("tasnet and unet window lengths differ (" +
                          std::to_string(tasnet.window_length) + " vs " +
                          std::to_string(unet.window_length) + ")");
  }
}

std::uint64_t HybridConfig::fingerprint() const {
  return models::fingerprint(nlohmann::json{{"tasnet", tasnet}, {"unet", unet}});
}

void to_json(nlohmann::json& j, const HybridConfig& c) {
  j = nlohmann::json{{"tasnet", c.tasnet}, {"unet", c.unet}, {"mode", to_string(c.mode)}};
}

void from_json(const nlohmann::json& j, HybridConfig& c) {
  j.at("tasnet").get_to(c.tasnet);
  j.at("unet").get_to(c.unet);
  c.mode = parse_path_mode(j.value("mode", std::string("alt")));
}

HybridModel::HybridModel(HybridConfig config, std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      tasnet_(config_.tasnet, seed),
      unet_(config_.unet, seed ^ 0x9e3779b97f4a7c15ULL) {}

PathOutput HybridModel::forward_path(const ad::Tensor& x, PathOrder order,
                                     const nn::RunContext& ctx) {
  PathOutput out;
  if (order == PathOrder::kUThenD) {
    out.mid = unet_.forward(x, ctx);
    out.final = tasnet_.forward(out.mid, ctx);
  } else {
    out.mid = tasnet_.forward(x, ctx);
    out.final = unet_.forward(out.mid, ctx);
  }
  return out;
}

ad::Tensor HybridModel::path_loss(const ad::Tensor& x, const ad::Tensor& s, const ad::Tensor& n,
                                  PathOrder order, const nn::RunContext& ctx,
                                  objectives::LossKind kind) {
  auto out = forward_path(x, order, ctx);
  const ad::Tensor mids[] = {out.mid};
  const ad::Tensor finals[] = {out.final};
  return objectives::hybrid_loss(x, s, n, mids, finals, kind, config_.unet.stft);
}

ad::Tensor HybridModel::train_step_loss(const ad::Tensor& x, const ad::Tensor& s,
                                        const ad::Tensor& n, objectives::LossKind kind,
                                        bool update_stats) {
  const auto ctx = nn::RunContext::train(step_, update_stats);
  switch (config_.mode) {
    case PathMode::kAlternating:
      return path_loss(x, s, n, training_order(step_), ctx, kind);
    case PathMode::kBothPaths: {
      auto u2d = forward_path(x, PathOrder::kUThenD, ctx);
      auto d2u = forward_path(x, PathOrder::kDThenU, ctx);
      const ad::Tensor mids[] = {u2d.mid, d2u.mid};
      const ad::Tensor finals[] = {u2d.final, d2u.final};
      return objectives::hybrid_loss(x, s, n, mids, finals, kind, config_.unet.stft);
    }
    case PathMode::kUThenD:
      return path_loss(x, s, n, PathOrder::kUThenD, ctx, kind);
    case PathMode::kDThenU:
      return path_loss(x, s, n, PathOrder::kDThenU, ctx, kind);
    case PathMode::kTasNetOnly:
      return objectives::base_loss(x, s, n, tasnet_.forward(x, ctx), kind, config_.unet.stft);
    case PathMode::kUNetOnly:
      return objectives::base_loss(x, s, n, unet_.forward(x, ctx), kind, config_.unet.stft);
  }
  throw InvalidArgument("unknown path mode");
}

ad::Tensor HybridModel::infer(const ad::Tensor& x, InferMode mode) {
  ad::NoGradGuard guard;
  const auto ctx = nn::RunContext::eval();
  if (mode == InferMode::kAuto) {
    switch (config_.mode) {
      case PathMode::kAlternating:
      case PathMode::kBothPaths: mode = InferMode::kAverage; break;
      case PathMode::kUThenD: mode = InferMode::kUThenD; break;
      case PathMode::kDThenU: mode = InferMode::kDThenU; break;
      case PathMode::kTasNetOnly: mode = InferMode::kTasNet; break;
      case PathMode::kUNetOnly: mode = InferMode::kUNet; break;
    }
  }
  switch (mode) {
    case InferMode::kAverage: {
      auto a = forward_path(x, PathOrder::kUThenD, ctx).final;
      auto b = forward_path(x, PathOrder::kDThenU, ctx).final;
      auto out = ad::Tensor::zeros(x.shape());
      auto o = out.mutable_values();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = 0.5 * (a.values()[i] + b.values()[i]);
      return out;
    }
    case InferMode::kUThenD: return forward_path(x, PathOrder::kUThenD, ctx).final;
    case InferMode::kDThenU: return forward_path(x, PathOrder::kDThenU, ctx).final;
    case InferMode::kTasNet: return tasnet_.forward(x, ctx);
    case InferMode::kUNet: return unet_.forward(x, ctx);
    case InferMode::kAuto: break;
  }
  throw InvalidArgument("unknown enhance mode");
}

dsp::Waveform HybridModel::infer(const dsp::Waveform& x, InferMode mode) {
  auto in = ad::Tensor::from_vector({1, x.size()}, x.samples);
  auto out = infer(in, mode);
  return {std::vector<double>(out.values().begin(), out.values().end()), x.sample_rate};
}

std::string_view HybridModel::current_path_label() const {
  switch (config_.mode) {
    case PathMode::kAlternating: return to_string(training_order(step_));
    default: return to_string(config_.mode);
  }
}

std::vector<nn::Parameter> HybridModel::parameters() const {
  auto params = tasnet_.parameters();
  auto u = unet_.parameters();
  params.insert(params.end(), u.begin(), u.end());
  return params;
}

std::vector<nn::Buffer> HybridModel::buffers() {
  auto bufs = tasnet_.buffers();
  auto u = unet_.buffers();
  bufs.insert(bufs.end(), u.begin(), u.end());
  return bufs;
}

std::size_t HybridModel::param_count() const { return nn::count_parameters(parameters()); }

}  // namespace mdphd::hybrid
