#pragma once

// Versioned binary weight checkpoint: magic "WFCK", format version, input
// spec and seed, layer descriptors, little-endian float64 parameter
// payloads, optional Adam state, CRC-32 trailer over everything after the
// magic. A JSON sidecar (<path>.json) summarizes the architecture and
// seed for humans and plotting scripts. Models of either scalar type load
// from the same file; payloads are always stored as float64.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildfire/nn.hpp"
#include "wildfire/zipfile.hpp"

namespace wildfire {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

struct Writer {
  std::vector<uint8_t> bytes;

  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back((v >> (8 * i)) & 0xff);
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back((v >> (8 * i)) & 0xff);
  }
  void f64(double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    u64(bits);
  }
  template <typename T>
  void array_f64(const std::vector<T>& values) {
    u64(values.size());
    for (T v : values) f64(static_cast<double>(v));
  }
};

struct Reader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > bytes.size()) throw CheckpointError("truncated checkpoint file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  template <typename T>
  std::vector<T> array_f64(size_t expect) {
    uint64_t n = u64();
    if (n != expect) throw CheckpointError("parameter array length mismatch");
    std::vector<T> out(n);
    for (auto& v : out) v = static_cast<T>(f64());
    return out;
  }
};

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const ModelParams<T>& model, const AdamState<T>* adam,
                     const std::string& path) {
  using namespace ckpt_detail;
  Writer w;
  w.u32(kCheckpointVersion);
  w.u32(static_cast<uint32_t>(model.input_h));
  w.u32(static_cast<uint32_t>(model.input_w));
  w.u32(static_cast<uint32_t>(model.input_c));
  w.u64(model.seed);
  w.u32(static_cast<uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    w.u32(static_cast<uint32_t>(l.op));
    w.u32(static_cast<uint32_t>(l.act));
    w.u32(static_cast<uint32_t>(l.kh));
    w.u32(static_cast<uint32_t>(l.kw));
    w.u32(static_cast<uint32_t>(l.in_c));
    w.u32(static_cast<uint32_t>(l.out_c));
    w.u32(static_cast<uint32_t>(l.in_dim));
    w.u32(static_cast<uint32_t>(l.out_dim));
    w.array_f64(l.weights);
    w.array_f64(l.bias);
  }
  w.u32(adam ? 1 : 0);
  if (adam) {
    w.u64(adam->t);
    w.f64(adam->lr);
    w.f64(adam->beta1);
    w.f64(adam->beta2);
    w.f64(adam->eps);
    for (size_t i = 0; i < model.layers.size(); ++i) {
      w.array_f64(adam->m_w[i]);
      w.array_f64(adam->v_w[i]);
      w.array_f64(adam->m_b[i]);
      w.array_f64(adam->v_b[i]);
    }
  }
  uint32_t crc = crc32(w.bytes.data(), w.bytes.size());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  out.write("WFCK", 4);
  out.write(reinterpret_cast<const char*>(w.bytes.data()),
            static_cast<std::streamsize>(w.bytes.size()));
  uint8_t tail[4] = {uint8_t(crc & 0xff), uint8_t(crc >> 8 & 0xff),
                     uint8_t(crc >> 16 & 0xff), uint8_t(crc >> 24 & 0xff)};
  out.write(reinterpret_cast<const char*>(tail), 4);
  if (!out) throw CheckpointError("write failure for '" + path + "'");

  // Sidecar summary.
  nlohmann::json side;
  side["format_version"] = kCheckpointVersion;
  side["input"] = {model.input_h, model.input_w, model.input_c};
  side["seed"] = model.seed;
  side["parameter_count"] = model.parameter_count();
  side["adam_state"] = adam != nullptr;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers) {
    nlohmann::json jl;
    jl["op"] = to_string(l.op);
    jl["activation"] = to_string(l.act);
    if (l.op == LayerOp::conv)
      jl["kernel"] = {l.kh, l.kw, l.in_c, l.out_c};
    else if (l.op == LayerOp::dense)
      jl["dims"] = {l.in_dim, l.out_dim};
    layers.push_back(jl);
  }
  side["layers"] = layers;
  std::ofstream sidecar(path + ".json");
  sidecar << side.dump(2) << "\n";
}

template <typename T>
struct LoadedCheckpoint {
  ModelParams<T> model;
  std::optional<AdamState<T>> adam;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "'");
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 8 || std::memcmp(raw.data(), "WFCK", 4) != 0)
    throw CheckpointError("not a checkpoint file (bad magic)");
  std::vector<uint8_t> body(raw.begin() + 4, raw.end() - 4);
  uint32_t stored_crc = uint32_t(raw[raw.size() - 4]) |
                        uint32_t(raw[raw.size() - 3]) << 8 |
                        uint32_t(raw[raw.size() - 2]) << 16 |
                        uint32_t(raw[raw.size() - 1]) << 24;
  if (crc32(body.data(), body.size()) != stored_crc)
    throw CheckpointError("checksum failure: checkpoint is corrupted");

  Reader r{body};
  uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  LoadedCheckpoint<T> out;
  out.model.input_h = static_cast<int>(r.u32());
  out.model.input_w = static_cast<int>(r.u32());
  out.model.input_c = static_cast<int>(r.u32());
  out.model.seed = r.u64();
  uint32_t n_layers = r.u32();
  for (uint32_t i = 0; i < n_layers; ++i) {
    Layer<T> l;
    l.op = static_cast<LayerOp>(r.u32());
    l.act = static_cast<Activation>(r.u32());
    l.kh = static_cast<int>(r.u32());
    l.kw = static_cast<int>(r.u32());
    l.in_c = static_cast<int>(r.u32());
    l.out_c = static_cast<int>(r.u32());
    l.in_dim = static_cast<int>(r.u32());
    l.out_dim = static_cast<int>(r.u32());
    size_t n_weights = l.op == LayerOp::conv
                           ? static_cast<size_t>(l.kh) * l.kw * l.in_c * l.out_c
                       : l.op == LayerOp::dense
                           ? static_cast<size_t>(l.in_dim) * l.out_dim
                           : 0;
    size_t n_bias = l.op == LayerOp::conv ? l.out_c : l.op == LayerOp::dense ? l.out_dim : 0;
    l.weights = r.template array_f64<T>(n_weights);
    l.bias = r.template array_f64<T>(n_bias);
    out.model.layers.push_back(std::move(l));
  }
  out.model.stage_shapes();  // validates the chain
  if (r.u32() == 1) {
    AdamState<T> adam;
    adam.t = r.u64();
    adam.lr = r.f64();
    adam.beta1 = r.f64();
    adam.beta2 = r.f64();
    adam.eps = r.f64();
    for (const auto& l : out.model.layers) {
      adam.m_w.push_back(r.template array_f64<T>(l.weights.size()));
      adam.v_w.push_back(r.template array_f64<T>(l.weights.size()));
      adam.m_b.push_back(r.template array_f64<T>(l.bias.size()));
      adam.v_b.push_back(r.template array_f64<T>(l.bias.size()));
    }
    out.adam = std::move(adam);
  }
  return out;
}

// Resuming training needs optimizer moments; a weights-only checkpoint is
// inference-only by rule.
template <typename T>
LoadedCheckpoint<T> load_checkpoint_for_training(const std::string& path) {
  LoadedCheckpoint<T> out = load_checkpoint<T>(path);
  if (!out.adam)
    throw CheckpointError("checkpoint has no Adam state: cannot resume training "
                          "(inference-only checkpoint)");
  return out;
}

}  // namespace wildfire
