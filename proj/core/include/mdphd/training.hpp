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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mdphd/data.hpp"
#include "mdphd/hybrid.hpp"
#include "mdphd/layers.hpp"
#include "mdphd/objectives.hpp"

namespace mdphd::training {

// ---- optimizer -------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<nn::Parameter> params, AdamConfig config = {});

  /// One bias-corrected Adam update. Parameters without an accumulated
  /// gradient are treated as having a zero gradient. A non-finite gradient
  /// raises NumericError naming the parameter before anything is modified.
  void step(double lr);
  void zero_grad();

  std::uint64_t t() const { return t_; }
  void set_t(std::uint64_t t) { t_ = t; }
  const AdamConfig& config() const { return config_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  std::vector<nn::Parameter> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t t_ = 0;
};

/// Rescales all gradients so their joint L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_grad_norm(const std::vector<nn::Parameter>& params, double max_norm);

// ---- configuration ---------------------------------------------------------

struct TrainConfig {
  double lr0 = 2e-4;
  std::size_t decay_interval = 0;  // 0: max_steps / 3
  double decay_factor = 0.5;
  std::size_t batch_size = 16;
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  objectives::LossKind loss = objectives::LossKind::kL1Energy;
  std::size_t log_interval = 10;
  std::size_t checkpoint_interval = 0;  // 0: only at the end
  double grad_clip = 0.0;               // 0: off
  double noise_only_fraction = 0.25;
  AdamConfig adam;

  void validate() const;
  std::size_t effective_decay_interval() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// lr0 * decay_factor^floor(step / decay_interval).
double lr_at(std::uint64_t step, const TrainConfig& cfg);

// ---- checkpoints -----------------------------------------------------------

inline constexpr char kCheckpointMagic[4] = {'M', 'D', 'P', 'H'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  ad::Shape shape;
  std::vector<double> values;
};

/// Parsed checkpoint contents, not yet applied to a model.
struct Checkpoint {
  hybrid::HybridConfig model;
  TrainConfig train;
  std::uint64_t step = 0;
  std::uint64_t adam_t = 0;
  std::uint64_t fingerprint = 0;
  std::map<std::string, TensorRecord> records;
};

/// Parameters, renorm statistics and (if given) Adam moments. Written to a
/// temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, hybrid::HybridModel& model,
                     const Adam* adam, const TrainConfig& cfg);
/// Fully parses and validates the file; FormatError on any defect.
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Copies the checkpoint into `model` (and `adam`). Every record is checked
/// before anything is written; a fingerprint mismatch names both values.
void restore(const Checkpoint& ckpt, hybrid::HybridModel& model, Adam* adam);
/// Builds a model from the checkpoint's configuration and restores it.
hybrid::HybridModel model_from_checkpoint(const Checkpoint& ckpt);

// ---- loop ------------------------------------------------------------------

struct LogRow {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::string path_order;
};

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<std::filesystem::path> log_path;  // CSV step,lr,loss,path_order
  /// Called for each log row as it is produced.
  std::function<void(const LogRow&)> on_log;
  /// Stop after this step even if max_steps is larger (for interrupted runs).
  std::optional<std::uint64_t> stop_at;
};

struct TrainResult {
  std::vector<LogRow> log;
  std::uint64_t final_step = 0;
};

/// Trains from model.step_counter() up to cfg.max_steps. Log rows are
/// written at every multiple of log_interval; the row at max_steps is a
/// gradient-free evaluation on that step's batch. A non-finite loss or
/// gradient raises NumericError; the last checkpoint written stays on disk.
TrainResult train(hybrid::HybridModel& model, Adam& adam, const data::Dataset& dataset,
                  const TrainConfig& cfg, const TrainOptions& options = {});

}  // namespace mdphd::training
