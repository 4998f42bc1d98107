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
#include <atomic>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "common.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/metrics.hpp"
#include "mdphd/training.hpp"

namespace mdphd::cli {
namespace {

namespace fs = std::filesystem;

struct EnhanceOptions {
  std::string ckpt;
  std::string in;
  std::string out;
  std::string mode = "auto";
  std::size_t jobs = 1;
};

int run_enhance(const EnhanceOptions& o) {
  const auto ckpt = training::load_checkpoint(o.ckpt);
  auto model = training::model_from_checkpoint(ckpt);
  const auto mode = hybrid::parse_infer_mode(o.mode);
  const std::size_t window = model.config().tasnet.window_length;
  const std::size_t hop = window / 2;
  const std::size_t jobs = resolve_jobs(o.jobs);

  std::vector<std::pair<fs::path, fs::path>> files;
  if (fs::is_directory(o.in)) {
    for (const auto& f : fs::directory_iterator(o.in)) {
      if (f.path().extension() == ".wav") files.push_back({f.path(), fs::path(o.out) / f.path().filename()});
    }
    std::sort(files.begin(), files.end());
    fs::create_directories(o.out);
  } else if (fs::exists(o.in)) {
    files.push_back({o.in, o.out});
  } else {
    throw InvalidArgument("enhance: input " + o.in + " does not exist");
  }

  print_config("enhance", {{"ckpt", o.ckpt},
                           {"in", o.in},
                           {"out", o.out},
                           {"mode", hybrid::to_string(mode)},
                           {"model", model.config()},
                           {"window", window},
                           {"hop", hop},
                           {"jobs", jobs},
                           {"files", files.size()}});

  const metrics::WindowEnhancer enhancer = [&model, mode](const std::vector<double>& w) {
    return model.infer(dsp::Waveform{w, dsp::kSampleRate}, mode).samples;
  };
  std::vector<std::exception_ptr> errors(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        const auto x = data::read_wav(files[i].first);
        if (x.empty()) throw InvalidArgument(files[i].first.string() + ": no samples");
        const auto y = metrics::enhance_utterance(x, enhancer, window, hop);
        data::write_wav(files[i].second, y, data::WavEncoding::kFloat32);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < std::min(jobs, files.size()); ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::cout << "enhanced " << files.size() << " file(s)\n";
  return kOk;
}

}  // namespace

void add_enhance(CLI::App& app, int& exit_code) {
  auto o = std::make_shared<EnhanceOptions>();
  auto* cmd = app.add_subcommand("enhance", "Denoise WAV files with a trained checkpoint");
  cmd->add_option("--ckpt", o->ckpt, "Checkpoint")->required();
  cmd->add_option("--in", o->in, "Input WAV file or directory")->required();
  cmd->add_option("--out", o->out, "Output WAV file or directory")->required();
  cmd->add_option("--mode", o->mode,
                  "auto (follows the training path mode), average, u2d, d2u, tasnet, unet")
      ->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "Worker threads")->capture_default_str();
  cmd->callback([o, &exit_code] { exit_code = guarded([&] { return run_enhance(*o); }); });
}

}  // namespace mdphd::cli
