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

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mdphd/errors.hpp"
#include "mdphd/training.hpp"

namespace mdphd::training {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::uint8_t kDtypeF64 = 0;

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

template <typename T>
void put(std::string& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

void put_record(std::string& out, const std::string& name, const ad::Shape& shape,
                std::span<const double> values) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  put<std::uint8_t>(out, kDtypeF64);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put<std::uint64_t>(out, d);
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
}

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::string where) : buf_(buf), where_(std::move(where)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw FormatError(where_ + ": truncated checkpoint");
  }

  const std::vector<char>& buf_;
  std::string where_;
  std::size_t pos_ = 0;
};

std::string adam_name(const char* which, const std::string& param) {
  return std::string("adam.") + which + "/" + param;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, hybrid::HybridModel& model,
                     const Adam* adam, const TrainConfig& cfg) {
  const nlohmann::json config{{"model", model.config()},
                              {"train", cfg},
                              {"step", model.step_counter()},
                              {"adam_t", adam ? adam->t() : 0},
                              {"has_optimizer", adam != nullptr},
                              {"fingerprint", hex(model.config().fingerprint())}};
  const std::string blob = config.dump();

  std::string out(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, blob.size());
  out.append(blob);
  const auto params = model.parameters();
  for (const auto& p : params) put_record(out, p.name, p.tensor.shape(), p.tensor.values());
  for (const auto& b : model.buffers()) put_record(out, b.name, {b.values->size()}, *b.values);
  if (adam) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_record(out, adam_name("m", params[i].name), params[i].tensor.shape(),
                 adam->first_moments()[i]);
      put_record(out, adam_name("v", params[i].name), params[i].tensor.shape(),
                 adam->second_moments()[i]);
    }
  }

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError(tmp.string() + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(path.string() + ": cannot open checkpoint");
  const std::vector<char> buf((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
  const std::string where = path.string();
  Reader r(buf, where);
  if (r.bytes(4) != std::string(kCheckpointMagic, 4)) {
    throw FormatError(where + ": not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(where + ": unsupported checkpoint version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto blob_len = r.get<std::uint64_t>();
  if (blob_len > buf.size()) throw FormatError(where + ": truncated checkpoint");
  Checkpoint ck;
  try {
    const auto config = nlohmann::json::parse(r.bytes(blob_len));
    ck.model = config.at("model").get<hybrid::HybridConfig>();
    ck.train = config.at("train").get<TrainConfig>();
    ck.step = config.at("step").get<std::uint64_t>();
    ck.adam_t = config.at("adam_t").get<std::uint64_t>();
    ck.fingerprint = std::stoull(config.at("fingerprint").get<std::string>(), nullptr, 16);
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& ex) {
    throw FormatError(where + ": bad checkpoint config: " + ex.what());
  }
  if (ck.fingerprint != ck.model.fingerprint()) {
    throw FormatError(where + ": stored fingerprint " + hex(ck.fingerprint) +
                      " does not match its configuration (" + hex(ck.model.fingerprint()) + ")");
  }
  while (!r.done()) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name = r.bytes(name_len);
    const auto dtype = r.get<std::uint8_t>();
    if (dtype != kDtypeF64) {
      throw FormatError(where + ": record '" + name + "' has unsupported dtype " +
                        std::to_string(dtype));
    }
    TensorRecord rec;
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError(where + ": record '" + name + "' has rank " + std::to_string(rank));
    rec.shape.resize(rank);
    std::size_t count = 1;
    for (auto& d : rec.shape) {
      d = r.get<std::uint64_t>();
      if (d > buf.size()) throw FormatError(where + ": truncated checkpoint");
      count *= d;
    }
    if (count > buf.size() / sizeof(double)) throw FormatError(where + ": truncated checkpoint");
    const std::string raw = r.bytes(count * sizeof(double));
    rec.values.resize(count);
    std::memcpy(rec.values.data(), raw.data(), raw.size());
    if (!ck.records.emplace(std::move(name), std::move(rec)).second) {
      throw FormatError(where + ": duplicate record");
    }
  }
  return ck;
}

void restore(const Checkpoint& ckpt, hybrid::HybridModel& model, Adam* adam) {
  const auto expected = model.config().fingerprint();
  if (ckpt.fingerprint != expected) {
    throw FormatError("checkpoint fingerprint " + hex(ckpt.fingerprint) +
                      " does not match model fingerprint " + hex(expected));
  }
  auto find = [&](const std::string& name, const ad::Shape& shape) -> const TensorRecord& {
    auto it = ckpt.records.find(name);
    if (it == ckpt.records.end()) throw FormatError("checkpoint is missing '" + name + "'");
    if (it->second.shape != shape) {
      throw FormatError("checkpoint record '" + name + "' has shape " +
                        ad::to_string(it->second.shape) + ", expected " + ad::to_string(shape));
    }
    return it->second;
  };

  const auto params = model.parameters();
  auto buffers = model.buffers();
  // Validate everything first so a failure leaves the model untouched.
  for (const auto& p : params) find(p.name, p.tensor.shape());
  for (const auto& b : buffers) find(b.name, {b.values->size()});
  if (adam) {
    for (const auto& p : params) {
      find(adam_name("m", p.name), p.tensor.shape());
      find(adam_name("v", p.name), p.tensor.shape());
    }
  }

  for (auto p : params) {
    const auto& rec = find(p.name, p.tensor.shape());
    std::copy(rec.values.begin(), rec.values.end(), p.tensor.mutable_values().begin());
  }
  for (const auto& b : buffers) *b.values = find(b.name, {b.values->size()}).values;
  if (adam) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      adam->first_moments()[i] = find(adam_name("m", params[i].name), params[i].tensor.shape()).values;
      adam->second_moments()[i] = find(adam_name("v", params[i].name), params[i].tensor.shape()).values;
    }
    adam->set_t(ckpt.adam_t);
  }
  model.set_step_counter(ckpt.step);
}

hybrid::HybridModel model_from_checkpoint(const Checkpoint& ckpt) {
  hybrid::HybridModel model(ckpt.model, 0);
  restore(ckpt, model, nullptr);
  return model;
}

}  // namespace mdphd::training
