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

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "common.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/training.hpp"

namespace mdphd::cli {
namespace {

struct TrainCliOptions {
  std::string manifest;
  std::string preset = "toy";
  std::string loss = "l1";
  std::string path_mode = "alt";
  bool both_paths = false;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string log;
  std::size_t batch_size = 16;
  double lr = 2e-4;
  std::size_t decay_interval = 0;
  std::size_t log_interval = 10;
  std::size_t checkpoint_interval = 0;
  double grad_clip = 0.0;
  std::optional<double> noise_only_fraction;
  std::size_t window = 16384;
  std::size_t hop = 8192;
  bool resume = false;
};

int run_train(const TrainCliOptions& o) {
  const auto manifest = data::read_manifest(o.manifest);

  hybrid::HybridConfig model_cfg{models::tasnet_preset(o.preset), models::unet_preset(o.preset),
                                 hybrid::parse_path_mode(o.path_mode)};
  if (o.both_paths) {
    if (model_cfg.mode != hybrid::PathMode::kAlternating && model_cfg.mode != hybrid::PathMode::kBothPaths) {
      throw InvalidArgument("--both-paths-per-step needs --path-mode alt");
    }
    model_cfg.mode = hybrid::PathMode::kBothPaths;
  }
  model_cfg.tasnet.window_length = o.window;
  model_cfg.unet.window_length = o.window;
  model_cfg.validate();

  training::TrainConfig cfg;
  cfg.lr0 = o.lr;
  cfg.decay_interval = o.decay_interval;
  cfg.batch_size = o.batch_size;
  cfg.max_steps = o.steps;
  cfg.seed = o.seed;
  cfg.loss = objectives::parse_loss_kind(o.loss);
  cfg.log_interval = o.log_interval;
  cfg.checkpoint_interval = o.checkpoint_interval;
  cfg.grad_clip = o.grad_clip;
  cfg.noise_only_fraction = o.noise_only_fraction.value_or(manifest.noise_only_fraction);
  cfg.validate();

  const std::filesystem::path out(o.out);
  const std::filesystem::path log = o.log.empty() ? std::filesystem::path(o.out + ".log.csv")
                                                  : std::filesystem::path(o.log);
  print_config("train", {{"manifest", o.manifest},
                         {"preset", o.preset},
                         {"model", model_cfg},
                         {"train", cfg},
                         {"window", o.window},
                         {"hop", o.hop},
                         {"out", o.out},
                         {"log", log.string()},
                         {"resume", o.resume}});

  const auto dataset = data::Dataset::load(manifest, {o.window, o.hop, data::Split::kTrain});
  if (dataset.size() == 0) throw InvalidArgument("manifest has no training windows");
  std::cout << "training windows: " << dataset.size() << '\n';

  hybrid::HybridModel model(model_cfg, o.seed);
  training::Adam adam(model.parameters(), cfg.adam);
  if (o.resume && std::filesystem::exists(out)) {
    const auto ckpt = training::load_checkpoint(out);
    training::restore(ckpt, model, &adam);
    std::cout << "resumed from " << out.string() << " at step " << model.step_counter() << '\n';
  }

  training::TrainOptions topts;
  topts.checkpoint_path = out;
  topts.log_path = log;
  topts.on_log = [](const training::LogRow& row) {
    std::cout << "step " << row.step << " lr " << row.lr << " loss " << row.loss << " path "
              << row.path_order << std::endl;
  };
  const auto result = training::train(model, adam, dataset, cfg, topts);
  std::cout << "finished at step " << result.final_step << "; checkpoint " << out.string() << '\n';
  return kOk;
}

}  // namespace

void add_train(CLI::App& app, int& exit_code) {
  auto o = std::make_shared<TrainCliOptions>();
  auto* cmd = app.add_subcommand("train", "Train the hybrid model on a manifest");
  cmd->add_option("--manifest", o->manifest, "Manifest (JSON lines)")->required();
  cmd->add_option("--preset", o->preset, "Model size preset: toy, 1.5m, 3m")->capture_default_str();
  cmd->add_option("--loss", o->loss, "Loss: l1, l2, snr, spec")->capture_default_str();
  cmd->add_option("--path-mode", o->path_mode,
                  "alt (alternating dual path), both, u2d, d2u, tasnet, unet")
      ->capture_default_str();
  cmd->add_flag("--both-paths-per-step", o->both_paths,
                "Evaluate both cascade orders every step (same as --path-mode both)");
  cmd->add_option("--steps", o->steps, "Optimizer steps")->capture_default_str();
  cmd->add_option("--seed", o->seed, "Seed for initialization and batching")->capture_default_str();
  cmd->add_option("--out", o->out, "Checkpoint path")->required();
  cmd->add_option("--log", o->log, "Metrics CSV (default <out>.log.csv)");
  cmd->add_option("--batch-size", o->batch_size, "Windows per batch")->capture_default_str();
  cmd->add_option("--lr", o->lr, "Initial learning rate")->capture_default_str();
  cmd->add_option("--decay-interval", o->decay_interval,
                  "Steps between learning-rate halvings (0: steps/3)")->capture_default_str();
  cmd->add_option("--log-interval", o->log_interval, "Steps between log rows")->capture_default_str();
  cmd->add_option("--checkpoint-interval", o->checkpoint_interval,
                  "Steps between checkpoints (0: only at the end)")->capture_default_str();
  cmd->add_option("--grad-clip", o->grad_clip, "Global gradient-norm clip (0: off)")
      ->capture_default_str();
  cmd->add_option("--noise-only-fraction", o->noise_only_fraction,
                  "Noise-only share of each epoch (default: manifest value)");
  cmd->add_option("--window", o->window, "Window length in samples")->capture_default_str();
  cmd->add_option("--hop", o->hop, "Window hop in samples")->capture_default_str();
  cmd->add_flag("--resume", o->resume, "Continue from --out if it exists");
  cmd->callback([o, &exit_code] { exit_code = guarded([&] { return run_train(*o); }); });
}

}  // namespace mdphd::cli
