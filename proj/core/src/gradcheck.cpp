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
#include <memory>
#include <numeric>

#include "mdphd/gradcheck.hpp"
#include "mdphd/hybrid.hpp"
#include "mdphd/models.hpp"
#include "mdphd/objectives.hpp"
#include "mdphd/ops.hpp"

namespace mdphd::gradcheck {
namespace {

using ad::Shape;
using ad::Tensor;
using Rng = std::mt19937_64;

Tensor randn(Shape shape, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  auto t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_values()) v = d(rng);
  return t;
}

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  auto t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_values()) v = d(rng);
  return t;
}

// Random linear functional of the output, so every output element matters.
Tensor project(const Tensor& out, const Tensor& weights) { return ad::sum(ad::mul(out, weights)); }

struct Case {
  std::string name;
  // Returns inputs and the graph for one random instance.
  std::function<std::pair<std::vector<Tensor>, Graph>(Rng&)> make;
};

Case unary(std::string name, Shape shape, std::function<Tensor(const Tensor&)> op,
           double lo = -2.0, double hi = 2.0) {
  return {std::move(name), [shape, op, lo, hi](Rng& rng) {
            auto a = uniform(shape, rng, lo, hi);
            const auto probe = op(a.detach());
            auto w = randn(probe.shape(), rng);
            Graph g = [op, w](const std::vector<Tensor>& in) { return project(op(in[0]), w); };
            return std::pair{std::vector<Tensor>{a}, g};
          }};
}

Case binary(std::string name, Shape sa, Shape sb,
            std::function<Tensor(const Tensor&, const Tensor&)> op) {
  return {std::move(name), [sa, sb, op](Rng& rng) {
            auto a = randn(sa, rng);
            auto b = randn(sb, rng);
            const auto probe = op(a.detach(), b.detach());
            auto w = randn(probe.shape(), rng);
            Graph g = [op, w](const std::vector<Tensor>& in) {
              return project(op(in[0], in[1]), w);
            };
            return std::pair{std::vector<Tensor>{a, b}, g};
          }};
}

Case loss_case(std::string name, objectives::LossKind kind) {
  return {std::move(name), [kind](Rng& rng) {
            auto s = randn({2, 200}, rng);
            auto n = randn({2, 200}, rng, 0.5);
            auto x = ad::add(s, n).detach();
            auto est = randn({2, 200}, rng);
            const dsp::StftConfig cfg{64, 32};
            Graph g = [=](const std::vector<Tensor>& in) {
              return objectives::base_loss(x, s, n, in[0], kind, cfg);
            };
            return std::pair{std::vector<Tensor>{est}, g};
          }};
}

std::vector<Case> op_cases() {
  std::vector<Case> cases;
  cases.push_back(binary("add", {3, 4}, {3, 4}, ad::add));
  cases.push_back(binary("sub", {3, 4}, {3, 4}, ad::sub));
  cases.push_back(binary("mul", {3, 4}, {3, 4}, ad::mul));
  cases.push_back(unary("scale", {3, 4}, [](const Tensor& a) { return ad::scale(a, -1.7); }));
  cases.push_back(unary("leaky_relu", {4, 5}, [](const Tensor& a) { return ad::leaky_relu(a, 0.2); }));
  cases.push_back(unary("sigmoid", {4, 5}, ad::sigmoid, -6.0, 6.0));
  cases.push_back(unary("sum", {3, 4}, ad::sum));
  cases.push_back(unary("mean", {3, 4}, ad::mean));
  cases.push_back(unary("l1_norm", {3, 4}, ad::l1_norm));
  cases.push_back(unary("row_l1_norm", {2, 3, 5}, ad::row_l1_norm));
  cases.push_back(unary("row_l2_norm", {2, 3, 5}, ad::row_l2_norm));
  cases.push_back(unary("row_sum_squares", {2, 3, 5}, ad::row_sum_squares));
  cases.push_back(unary("reshape", {2, 6}, [](const Tensor& a) { return ad::reshape(a, {3, 4}); }));
  cases.push_back(binary("concat_channels", {2, 3, 4}, {2, 2, 4}, ad::concat_channels));
  cases.push_back(unary("pad_trailing2d", {2, 2, 3, 4},
                        [](const Tensor& a) { return ad::pad_trailing2d(a, 5, 6); }));
  cases.push_back(unary("crop_trailing2d", {2, 2, 5, 6},
                        [](const Tensor& a) { return ad::crop_trailing2d(a, 3, 4); }));
  cases.push_back(binary("conv1d(stride 2, dilation 2)", {2, 3, 17}, {4, 3, 3},
                         [](const Tensor& x, const Tensor& k) {
                           return ad::conv1d(x, k, {2, 2, 1, 2});
                         }));
  cases.push_back(binary("conv1d(same, stride 3)", {2, 3, 16}, {2, 3, 4},
                         [](const Tensor& x, const Tensor& k) {
                           return ad::conv1d(x, k, ad::conv1d_options(ad::Padding::kSame, 16, 4, 3));
                         }));
  cases.push_back(binary("conv1d_dilated", {2, 2, 20}, {3, 2, 5},
                         [](const Tensor& x, const Tensor& k) {
                           return ad::conv1d_dilated(x, k, 3);
                         }));
  cases.push_back(binary("conv_transpose1d", {2, 4, 8}, {4, 3, 4},
                         [](const Tensor& x, const Tensor& k) {
                           const auto opt = ad::conv1d_options(ad::Padding::kSame, 16, 4, 2);
                           return ad::conv_transpose1d(x, k, opt, 16);
                         }));
  cases.push_back(binary("conv2d", {2, 3, 7, 9}, {4, 3, 3, 5},
                         [](const Tensor& x, const Tensor& k) {
                           const auto opt =
                               ad::conv2d_options(ad::Padding::kSame, {7, 9}, {3, 5}, {2, 1});
                           return ad::conv2d(x, k, opt);
                         }));
  cases.push_back(binary("conv_transpose2d", {2, 4, 4, 9}, {4, 3, 3, 5},
                         [](const Tensor& x, const Tensor& k) {
                           const auto opt =
                               ad::conv2d_options(ad::Padding::kSame, {7, 9}, {3, 5}, {2, 1});
                           return ad::conv_transpose2d(x, k, opt, {7, 9});
                         }));
  cases.push_back(binary("add_channel_bias", {2, 3, 4, 2}, {3}, ad::add_channel_bias));
  for (bool training : {true, false}) {
    cases.push_back({training ? "batch_renorm(train)" : "batch_renorm(eval)", [training](Rng& rng) {
                       auto x = randn({3, 4, 6}, rng, 2.0);
                       auto gamma = uniform({4}, rng, 0.5, 1.5);
                       auto beta = randn({4}, rng);
                       auto state = std::make_shared<ad::RenormState>();
                       const auto mean = randn({4}, rng);
                       const auto var = uniform({4}, rng, 0.5, 2.0);
                       state->running_mean.assign(mean.values().begin(), mean.values().end());
                       state->running_var.assign(var.values().begin(), var.values().end());
                       auto w = randn({3, 4, 6}, rng);
                       ad::RenormOptions opt{training, false, 1.0, 0.0};
                       Graph g = [=](const std::vector<Tensor>& in) {
                         return project(ad::batch_renorm(in[0], in[1], in[2], *state, opt), w);
                       };
                       return std::pair{std::vector<Tensor>{x, gamma, beta}, g};
                     }});
  }
  const dsp::StftConfig small{16, 8};
  cases.push_back(unary("stft", {2, 50}, [small](const Tensor& a) { return ad::stft(a, small); }));
  cases.push_back(unary("istft", {2, 2, 8, 9},
                        [small](const Tensor& a) { return ad::istft(a, small, 50); }));
  cases.push_back(unary("magnitude", {2, 2, 3, 4}, ad::magnitude));
  cases.push_back(unary("log_floor", {2, 3, 4},
                        [](const Tensor& a) { return ad::log_floor(a, 1e-7); }, 0.1, 2.0));
  cases.push_back({"apply_mask", [](Rng& rng) {
                     auto spec = randn({2, 2, 3, 4}, rng);
                     auto mask = uniform({2, 3, 4}, rng, 0.05, 0.95);
                     auto w = randn({2, 2, 3, 4}, rng);
                     Graph g = [w](const std::vector<Tensor>& in) {
                       return project(ad::apply_mask(in[0], in[1]), w);
                     };
                     return std::pair{std::vector<Tensor>{spec, mask}, g};
                   }});
  cases.push_back(loss_case("loss l1", objectives::LossKind::kL1Energy));
  cases.push_back(loss_case("loss l2", objectives::LossKind::kL2Energy));
  cases.push_back(loss_case("loss snr", objectives::LossKind::kSnr));
  cases.push_back(loss_case("loss spec", objectives::LossKind::kSpecL2));
  return cases;
}

// Zero-initialised biases put zero-padded regions exactly on the leaky ReLU
// kink; random offsets move the check to a differentiable point.
void jitter_offsets(const std::vector<nn::Parameter>& params, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 0.1);
  for (const auto& p : params) {
    if (!p.name.ends_with(".bias") && !p.name.ends_with(".beta")) continue;
    for (auto& v : p.tensor.mutable_values()) v = normal(rng);
  }
}

std::vector<Tensor> with_params(Tensor x, const std::vector<nn::Parameter>& params) {
  std::vector<Tensor> inputs{std::move(x)};
  for (const auto& p : params) inputs.push_back(p.tensor);
  return inputs;
}

}  // namespace

Comparison compare(const Graph& graph, const std::vector<Tensor>& inputs, std::size_t max_coords,
                   Rng& rng, double h) {
  for (auto t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  auto loss = graph(inputs);
  // Central differences carry roundoff of order eps * |loss| / h, so tiny
  // gradients are compared against a floor that scales with the loss.
  const double floor = 1e-5 * std::max(1.0, std::abs(loss.item()));
  ad::backward(loss);
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) {
    analytic.emplace_back(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.back().begin());
  }

  ad::NoGradGuard guard;
  Comparison result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto t = inputs[i];
    std::vector<std::size_t> coords(t.numel());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (std::size_t k : coords) {
      const double saved = t.values()[k];
      t.mutable_values()[k] = saved + h;
      const double up = graph(inputs).item();
      t.mutable_values()[k] = saved - h;
      const double down = graph(inputs).item();
      t.mutable_values()[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = analytic[i][k];
      const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.coordinates;
    }
  }
  for (auto t : inputs) t.zero_grad();
  return result;
}

std::vector<CheckResult> run_suite(const SuiteOptions& options) {
  std::vector<CheckResult> results;
  Rng rng(options.seed);
  auto finish = [&](CheckResult r) {
    if (options.on_result) options.on_result(r);
    results.push_back(std::move(r));
  };

  if (options.ops) {
    for (const auto& c : op_cases()) {
      CheckResult r{c.name, 0, 0, 0.0, options.op_tolerance};
      for (std::size_t i = 0; i < options.instances; ++i) {
        auto [inputs, graph] = c.make(rng);
        const auto cmp = compare(graph, inputs, 12, rng);
        r.max_rel_error = std::max(r.max_rel_error, cmp.max_rel_error);
        r.coordinates += cmp.coordinates;
        ++r.instances;
      }
      finish(std::move(r));
    }
  }
  if (!options.networks) return results;

  const std::size_t batch = options.network_batch;
  const std::size_t len = options.network_window;
  auto tasnet_cfg = models::tasnet_preset(options.preset);
  auto unet_cfg = models::unet_preset(options.preset);
  tasnet_cfg.window_length = len;
  unet_cfg.window_length = len;

  auto network_check = [&](const std::string& name, auto make_graph) {
    CheckResult r{name, 0, 0, 0.0, options.network_tolerance};
    for (std::size_t i = 0; i < options.instances; ++i) {
      auto [inputs, graph] = make_graph(rng());
      const auto cmp = compare(graph, inputs, 2, rng);
      r.max_rel_error = std::max(r.max_rel_error, cmp.max_rel_error);
      r.coordinates += cmp.coordinates;
      ++r.instances;
    }
    finish(std::move(r));
  };

  // Step 0 limits clip r to 1 and d to 0, so renorm reduces to batch norm
  // and the finite differences see exactly the recorded function.
  const auto ctx = nn::RunContext::train(0, /*update_stats=*/false);
  network_check("tasnet-" + options.preset + " end-to-end", [&](std::uint64_t seed) {
    Rng local(seed);
    auto model = std::make_shared<models::TasNet>(tasnet_cfg, seed);
    jitter_offsets(model->parameters(), local);
    auto x = randn({batch, len}, local, 0.3);
    auto w = randn({batch, len}, local);
    Graph g = [model, w, ctx](const std::vector<Tensor>& in) {
      return project(model->forward(in[0], ctx), w);
    };
    return std::pair{with_params(x, model->parameters()), g};
  });
  network_check("unet-" + options.preset + " end-to-end", [&](std::uint64_t seed) {
    Rng local(seed);
    auto model = std::make_shared<models::UNet>(unet_cfg, seed);
    jitter_offsets(model->parameters(), local);
    auto x = randn({batch, len}, local, 0.3);
    auto w = randn({batch, len}, local);
    Graph g = [model, w, ctx](const std::vector<Tensor>& in) {
      return project(model->forward(in[0], ctx), w);
    };
    return std::pair{with_params(x, model->parameters()), g};
  });
  for (auto order : {hybrid::PathOrder::kUThenD, hybrid::PathOrder::kDThenU}) {
    const std::string name =
        std::string("hybrid ") + std::string(hybrid::to_string(order)) + " loss end-to-end";
    network_check(name, [&](std::uint64_t seed) {
      Rng local(seed);
      auto model = std::make_shared<hybrid::HybridModel>(
          hybrid::HybridConfig{tasnet_cfg, unet_cfg, hybrid::PathMode::kAlternating}, seed);
      jitter_offsets(model->parameters(), local);
      auto s = randn({batch, len}, local, 0.3);
      auto n = randn({batch, len}, local, 0.2);
      auto x = ad::add(s, n).detach();
      // The graph reads the model's parameters directly; x is a constant.
      Graph g = [model, x, s, n, ctx, order](const std::vector<Tensor>&) {
        auto out = model->forward_path(x, order, ctx);
        const Tensor mids[] = {out.mid};
        const Tensor finals[] = {out.final};
        return objectives::hybrid_loss(x, s, n, mids, finals, objectives::LossKind::kL2Energy);
      };
      std::vector<Tensor> inputs;
      for (const auto& p : model->parameters()) inputs.push_back(p.tensor);
      return std::pair{inputs, g};
    });
  }
  return results;
}

}  // namespace mdphd::gradcheck
