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
#include <string>

#include <nlohmann/json.hpp>

#include "mdphd/errors.hpp"
#include "mdphd/training.hpp"

namespace mdphd::training {

Adam::Adam(std::vector<nn::Parameter> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step(double lr) {
  for (const auto& p : params_) {
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].tensor;
    auto values = p.mutable_values();
    const auto grad = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grad.empty() ? 0.0 : grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      values[k] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double clip_grad_norm(const std::vector<nn::Parameter>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw InvalidArgument("lr0 must be positive");
  if (!(decay_factor > 0.0 && decay_factor < 1.0)) {
    throw InvalidArgument("decay_factor must lie in (0, 1)");
  }
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (log_interval == 0) throw InvalidArgument("log_interval must be positive");
  if (grad_clip < 0.0) throw InvalidArgument("grad_clip must be non-negative");
  if (!(noise_only_fraction >= 0.0 && noise_only_fraction <= 1.0)) {
    throw InvalidArgument("noise_only_fraction must lie in [0, 1]");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
        adam.eps > 0.0)) {
    throw InvalidArgument("invalid Adam hyperparameters");
  }
}

std::size_t TrainConfig::effective_decay_interval() const {
  if (decay_interval > 0) return decay_interval;
  return std::max<std::size_t>(1, max_steps / 3);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr0", c.lr0},
                     {"decay_interval", c.decay_interval},
                     {"effective_decay_interval", c.effective_decay_interval()},
                     {"decay_factor", c.decay_factor},
                     {"batch_size", c.batch_size},
                     {"max_steps", c.max_steps},
                     {"seed", c.seed},
                     {"loss", objectives::to_string(c.loss)},
                     {"log_interval", c.log_interval},
                     {"checkpoint_interval", c.checkpoint_interval},
                     {"grad_clip", c.grad_clip},
                     {"noise_only_fraction", c.noise_only_fraction},
                     {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  j.at("lr0").get_to(c.lr0);
  j.at("decay_interval").get_to(c.decay_interval);
  j.at("decay_factor").get_to(c.decay_factor);
  j.at("batch_size").get_to(c.batch_size);
  j.at("max_steps").get_to(c.max_steps);
  j.at("seed").get_to(c.seed);
  c.loss = objectives::parse_loss_kind(j.at("loss").get<std::string>());
  j.at("log_interval").get_to(c.log_interval);
  j.at("checkpoint_interval").get_to(c.checkpoint_interval);
  j.at("grad_clip").get_to(c.grad_clip);
  j.at("noise_only_fraction").get_to(c.noise_only_fraction);
  const auto& a = j.at("adam");
  a.at("beta1").get_to(c.adam.beta1);
  a.at("beta2").get_to(c.adam.beta2);
  a.at("eps").get_to(c.adam.eps);
}

double lr_at(std::uint64_t step, const TrainConfig& cfg) {
  const auto halvings = step / cfg.effective_decay_interval();
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(halvings));
}

}  // namespace mdphd::training
