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
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mdphd/errors.hpp"
#include "mdphd/training.hpp"

namespace mdphd::training {
namespace {

std::string format_row(const LogRow& row) {
  std::ostringstream os;
  os << row.step << ',' << std::setprecision(17) << row.lr << ',' << row.loss << ','
     << row.path_order;
  return os.str();
}

}  // namespace

TrainResult train(hybrid::HybridModel& model, Adam& adam, const data::Dataset& dataset,
                  const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  data::BatchStream stream(dataset, cfg.batch_size, cfg.noise_only_fraction, cfg.seed);

  std::ofstream log_file;
  if (options.log_path) {
    const bool resume = model.step_counter() > 0 && std::filesystem::exists(*options.log_path);
    log_file.open(*options.log_path, resume ? std::ios::app : std::ios::trunc);
    if (!log_file) throw FormatError(options.log_path->string() + ": cannot open log");
    if (!resume) log_file << "step,lr,loss,path_order\n";
  }

  TrainResult result;
  auto emit = [&](std::uint64_t step, double loss) {
    LogRow row{step, lr_at(step, cfg), loss, std::string(model.current_path_label())};
    if (log_file.is_open()) log_file << format_row(row) << '\n' << std::flush;
    if (options.on_log) options.on_log(row);
    result.log.push_back(std::move(row));
  };
  auto checkpoint = [&] {
    if (options.checkpoint_path) save_checkpoint(*options.checkpoint_path, model, &adam, cfg);
  };

  const std::uint64_t end = options.stop_at ? std::min<std::uint64_t>(*options.stop_at, cfg.max_steps)
                                            : cfg.max_steps;
  while (model.step_counter() < end) {
    const std::uint64_t step = model.step_counter();
    auto batch = stream.batch(step);
    adam.zero_grad();
    auto loss = model.train_step_loss(batch.x, batch.s, batch.n, cfg.loss);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      ad::Tape::current().clear();
      throw NumericError("non-finite loss at step " + std::to_string(step) +
                         "; training halted, last checkpoint kept");
    }
    ad::backward(loss);
    if (cfg.grad_clip > 0.0) clip_grad_norm(adam.parameters(), cfg.grad_clip);
    adam.step(lr_at(step, cfg));
    if (step % cfg.log_interval == 0) emit(step, value);
    model.advance_step();
    if (cfg.checkpoint_interval > 0 && model.step_counter() % cfg.checkpoint_interval == 0 &&
        model.step_counter() < end) {
      checkpoint();
    }
  }

  const std::uint64_t step = model.step_counter();
  if (step == cfg.max_steps && step % cfg.log_interval == 0) {
    ad::NoGradGuard guard;
    auto batch = stream.batch(step);
    const double value =
        model.train_step_loss(batch.x, batch.s, batch.n, cfg.loss, /*update_stats=*/false).item();
    emit(step, value);
  }
  checkpoint();
  result.final_step = step;
  return result;
}

}  // namespace mdphd::training
