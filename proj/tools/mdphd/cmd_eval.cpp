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
#include "mdphd/metrics.hpp"
#include "mdphd/training.hpp"

namespace mdphd::cli {
namespace {

struct EvalCliOptions {
  std::string ckpt;
  std::string pairs;
  std::string manifest;
  std::string out;
  std::string mode = "auto";
  bool per_utterance = false;
  std::size_t jobs = 1;
};

int run_eval(const EvalCliOptions& o) {
  if (o.ckpt.empty() == o.pairs.empty()) {
    throw InvalidArgument("eval: give exactly one of --ckpt and --pairs");
  }
  const std::size_t jobs = resolve_jobs(o.jobs);
  metrics::EvalReport report;
  if (!o.pairs.empty()) {
    std::optional<data::Manifest> manifest;
    if (!o.manifest.empty()) manifest = data::read_manifest(o.manifest);
    print_config("eval", {{"pairs", o.pairs}, {"manifest", o.manifest}, {"out", o.out}});
    report = metrics::evaluate_pairs(o.pairs, manifest ? &*manifest : nullptr);
  } else {
    if (o.manifest.empty()) throw InvalidArgument("eval: --ckpt needs --manifest");
    const auto manifest = data::read_manifest(o.manifest);
    auto model = training::model_from_checkpoint(training::load_checkpoint(o.ckpt));
    const auto mode = hybrid::parse_infer_mode(o.mode);
    const std::size_t window = model.config().tasnet.window_length;
    print_config("eval", {{"ckpt", o.ckpt},
                          {"manifest", o.manifest},
                          {"out", o.out},
                          {"mode", hybrid::to_string(mode)},
                          {"per_utterance", o.per_utterance},
                          {"window", window},
                          {"hop", window / 2},
                          {"jobs", jobs}});
    metrics::EvalOptions eo;
    eo.window = window;
    eo.hop = window / 2;
    eo.per_utterance = o.per_utterance;
    eo.jobs = jobs;
    eo.enhancer = [&model, mode](const std::vector<double>& w) {
      return model.infer(dsp::Waveform{w, dsp::kSampleRate}, mode).samples;
    };
    report = metrics::evaluate(manifest, eo);
  }
  if (!o.out.empty()) report.write_csv(std::filesystem::path(o.out));
  report.write_csv(std::cout);
  return kOk;
}

}  // namespace

void add_eval(CLI::App& app, int& exit_code) {
  auto o = std::make_shared<EvalCliOptions>();
  auto* cmd = app.add_subcommand("eval", "Score a checkpoint or enhanced files (SNR, segmental SNR)");
  cmd->add_option("--ckpt", o->ckpt, "Checkpoint to evaluate on the manifest's test split");
  cmd->add_option("--pairs", o->pairs,
                  "Directory with noisy/, enhanced/ and clean/ WAVs matched by file name");
  cmd->add_option("--manifest", o->manifest, "Manifest (conditions for --pairs)");
  cmd->add_option("--out", o->out, "Report CSV path");
  cmd->add_option("--mode", o->mode, "Inference mode for --ckpt (see enhance)")
      ->capture_default_str();
  cmd->add_flag("--per-utterance", o->per_utterance,
                "Score whole utterances after cross-fade reassembly instead of windows");
  cmd->add_option("--jobs", o->jobs, "Worker threads")->capture_default_str();
  cmd->callback([o, &exit_code] { exit_code = guarded([&] { return run_eval(*o); }); });
}

}  // namespace mdphd::cli
