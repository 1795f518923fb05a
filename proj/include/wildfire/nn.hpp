#pragma once

// From-scratch network engine: valid-padding convolution, 2x2 max pooling
// with floor semantics, dense layers, ReLU/sigmoid, binary cross-entropy,
// exact reverse-mode gradients, and Adam. The production path runs on
// im2col + GEMM; the explicit-loop reference implementations live beside
// it and the two must agree bit-for-bit in 64-bit builds (the loop code
// fixes the summation order, the GEMM reproduces it).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildfire/gemm.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/tensor.hpp"

namespace wildfire {

struct NnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Activation { identity, relu, sigmoid };
enum class LayerOp { conv, maxpool, flatten, dense };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    default: return "sigmoid";
  }
}
inline const char* to_string(LayerOp op) {
  switch (op) {
    case LayerOp::conv: return "conv";
    case LayerOp::maxpool: return "maxpool";
    case LayerOp::flatten: return "flatten";
    default: return "dense";
  }
}

// ---------------------------------------------------------------------------
// Scalar pieces

template <typename T>
inline T relu(T x) {
  return x > T(0) ? x : T(0);
}

// Branch form: never overflows, never NaN for finite input.
template <typename T>
inline T sigmoid(T x) {
  if (x >= T(0)) {
    T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  T e = std::exp(x);
  return e / (T(1) + e);
}

constexpr double kBceEpsilon = 1e-7;

// -[y ln p + (1-y) ln(1-p)] with p clamped to [eps, 1-eps].
inline double bce_loss(double p, int y) {
  if (y != 0 && y != 1) throw NnError("bce_loss: label must be 0 or 1");
  double pc = std::min(1.0 - kBceEpsilon, std::max(kBceEpsilon, p));
  return y ? -std::log(pc) : -std::log(1.0 - pc);
}

// ---------------------------------------------------------------------------
// Model structure

struct Shape3 {
  int h = 0, w = 0, c = 0;
  size_t size() const { return static_cast<size_t>(h) * w * c; }
  bool operator==(const Shape3&) const = default;
};

template <typename T>
struct Layer {
  LayerOp op;
  Activation act = Activation::identity;
  // conv
  int kh = 0, kw = 0, in_c = 0, out_c = 0;
  // dense
  int in_dim = 0, out_dim = 0;
  // conv kernel [kh][kw][in_c][out_c] (out fastest) or dense weight
  // [in_dim][out_dim] (out fastest)
  std::vector<T> weights;
  std::vector<T> bias;

  size_t parameter_count() const { return weights.size() + bias.size(); }
};

template <typename T>
struct ModelParams {
  int input_h = 0, input_w = 0, input_c = 0;
  uint64_t seed = 0;
  std::vector<Layer<T>> layers;

  size_t parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  // Shape of every stage boundary; stage_shapes()[i] is the input of layer
  // i, the last entry is the network output. Throws on inconsistency.
  std::vector<Shape3> stage_shapes() const {
    std::vector<Shape3> shapes;
    Shape3 cur{input_h, input_w, input_c};
    shapes.push_back(cur);
    for (size_t i = 0; i < layers.size(); ++i) {
      const Layer<T>& l = layers[i];
      switch (l.op) {
        case LayerOp::conv:
          if (l.in_c != cur.c)
            throw NnError("layer " + std::to_string(i) + ": channel mismatch");
          if (l.kh > cur.h || l.kw > cur.w)
            throw NnError("layer " + std::to_string(i) + ": kernel larger than input");
          cur = {cur.h - l.kh + 1, cur.w - l.kw + 1, l.out_c};
          break;
        case LayerOp::maxpool:
          if (cur.h < 2 || cur.w < 2)
            throw NnError("layer " + std::to_string(i) + ": pooling needs dims >= 2");
          cur = {cur.h / 2, cur.w / 2, cur.c};
          break;
        case LayerOp::flatten:
          cur = {1, 1, cur.h * cur.w * cur.c};
          break;
        case LayerOp::dense:
          if (cur.h != 1 || cur.w != 1 || l.in_dim != cur.c)
            throw NnError("layer " + std::to_string(i) + ": dense length mismatch");
          cur = {1, 1, l.out_dim};
          break;
      }
      shapes.push_back(cur);
    }
    return shapes;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.input_h = input_h;
    out.input_w = input_w;
    out.input_c = input_c;
    out.seed = seed;
    for (const auto& l : layers) {
      Layer<U> nl;
      nl.op = l.op;
      nl.act = l.act;
      nl.kh = l.kh; nl.kw = l.kw; nl.in_c = l.in_c; nl.out_c = l.out_c;
      nl.in_dim = l.in_dim; nl.out_dim = l.out_dim;
      nl.weights.assign(l.weights.begin(), l.weights.end());
      nl.bias.assign(l.bias.begin(), l.bias.end());
      out.layers.push_back(std::move(nl));
    }
    return out;
  }
};

namespace nn_detail {

template <typename T>
Layer<T> conv_layer(int kh, int kw, int in_c, int out_c, Activation act) {
  Layer<T> l;
  l.op = LayerOp::conv;
  l.act = act;
  l.kh = kh; l.kw = kw; l.in_c = in_c; l.out_c = out_c;
  l.weights.assign(static_cast<size_t>(kh) * kw * in_c * out_c, T(0));
  l.bias.assign(out_c, T(0));
  return l;
}

template <typename T>
Layer<T> dense_layer(int in_dim, int out_dim, Activation act) {
  Layer<T> l;
  l.op = LayerOp::dense;
  l.act = act;
  l.in_dim = in_dim; l.out_dim = out_dim;
  l.weights.assign(static_cast<size_t>(in_dim) * out_dim, T(0));
  l.bias.assign(out_dim, T(0));
  return l;
}

template <typename T>
Layer<T> pool_layer() {
  Layer<T> l;
  l.op = LayerOp::maxpool;
  return l;
}

template <typename T>
Layer<T> flatten_layer() {
  Layer<T> l;
  l.op = LayerOp::flatten;
  return l;
}

// He-normal for ReLU layers, Xavier-normal for the sigmoid head, zero
// biases; weights drawn in flat order from the model RNG, layer by layer.
template <typename T>
void init_weights(ModelParams<T>& model) {
  Rng rng(model.seed);
  for (auto& l : model.layers) {
    if (l.op != LayerOp::conv && l.op != LayerOp::dense) continue;
    double fan_in = l.op == LayerOp::conv ? double(l.kh) * l.kw * l.in_c : l.in_dim;
    double fan_out = l.op == LayerOp::conv ? double(l.kh) * l.kw * l.out_c : l.out_dim;
    double std_dev = l.act == Activation::sigmoid ? std::sqrt(2.0 / (fan_in + fan_out))
                                                  : std::sqrt(2.0 / fan_in);
    for (auto& w : l.weights) w = static_cast<T>(rng.normal() * std_dev);
  }
}

}  // namespace nn_detail

// The reference architecture. Spatial trace 31 -> 25 -> 12 -> 7 -> 5 -> 3
// -> 1, flatten length 256.
template <typename T = float>
ModelParams<T> build_reference_model(int channels, uint64_t seed) {
  using namespace nn_detail;
  ModelParams<T> m;
  m.input_h = 31;
  m.input_w = 31;
  m.input_c = channels;
  m.seed = seed;
  m.layers.push_back(conv_layer<T>(7, 7, channels, 128, Activation::relu));
  m.layers.push_back(pool_layer<T>());
  m.layers.push_back(conv_layer<T>(6, 6, 128, 64, Activation::relu));
  m.layers.push_back(conv_layer<T>(3, 3, 64, 128, Activation::relu));
  m.layers.push_back(conv_layer<T>(3, 3, 128, 256, Activation::relu));
  m.layers.push_back(pool_layer<T>());
  m.layers.push_back(flatten_layer<T>());
  m.layers.push_back(dense_layer<T>(256, 1024, Activation::relu));
  m.layers.push_back(dense_layer<T>(1024, 1024, Activation::relu));
  m.layers.push_back(dense_layer<T>(1024, 1, Activation::sigmoid));
  auto shapes = m.stage_shapes();
  if (shapes[7] != Shape3{1, 1, 256})
    throw NnError("reference model flatten length is not 256");
  nn_detail::init_weights(m);
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

template <typename T>
struct Workspace {
  std::vector<T> col, dcol, trans, dcur, dnext;
};

template <typename T>
struct ForwardCache {
  int count = 0;
  // stage[i] is the batch activation entering layer i; stage.back() is the
  // network output (post-activation everywhere).
  std::vector<std::vector<T>> stage;
  // per layer, argmax of each pooled window as a flat index into the
  // layer's input buffer (batch-global); empty for non-pool layers
  std::vector<std::vector<int32_t>> pool_argmax;
};

namespace nn_detail {

template <typename T>
void apply_bias_activation(T* data, size_t rows, int width, const std::vector<T>& bias,
                           Activation act) {
  parallel_for(rows, [&](size_t r0, size_t r1) {
    for (size_t r = r0; r < r1; ++r) {
      T* row = data + r * width;
      for (int i = 0; i < width; ++i) row[i] = row[i] + bias[i];
      switch (act) {
        case Activation::relu:
          for (int i = 0; i < width; ++i) row[i] = relu(row[i]);
          break;
        case Activation::sigmoid:
          for (int i = 0; i < width; ++i) row[i] = sigmoid(row[i]);
          break;
        case Activation::identity:
          break;
      }
    }
  });
}

// 2x2/2 max pooling with floor semantics; trailing row/col dropped. Ties
// resolve to the first element in row-major window order.
template <typename T>
void maxpool_forward(const T* in, T* out, int count, const Shape3& s,
                     std::vector<int32_t>* argmax) {
  int oh = s.h / 2, ow = s.w / 2;
  size_t per_in = s.size();
  size_t per_out = static_cast<size_t>(oh) * ow * s.c;
  if (argmax) argmax->resize(static_cast<size_t>(count) * per_out);
  parallel_for(static_cast<size_t>(count) * oh, [&](size_t r0, size_t r1) {
    for (size_t r = r0; r < r1; ++r) {
      int sample = static_cast<int>(r / oh);
      int i = static_cast<int>(r % oh);
      const T* src = in + sample * per_in;
      for (int j = 0; j < ow; ++j) {
        for (int c = 0; c < s.c; ++c) {
          T best = T(0);
          int32_t best_idx = -1;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              size_t idx = ((static_cast<size_t>(2 * i + dy) * s.w) + (2 * j + dx)) * s.c + c;
              T v = src[idx];
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = static_cast<int32_t>(sample * per_in + idx);
              }
            }
          }
          size_t out_idx = sample * per_out + ((static_cast<size_t>(i) * ow) + j) * s.c + c;
          out[out_idx] = best;
          if (argmax) (*argmax)[out_idx] = best_idx;
        }
      }
    }
  });
}

}  // namespace nn_detail

// Batch forward on the GEMM path. `input` holds `count` HWC tensors back to
// back; returns the batch probabilities. With `cache` non-null all stage
// activations (and pool argmaxes) are retained for backward.
template <typename T>
std::vector<T> forward_batch(const ModelParams<T>& model, const T* input, int count,
                             ForwardCache<T>* cache, Workspace<T>& ws) {
  auto shapes = model.stage_shapes();
  std::vector<T> cur(input, input + shapes[0].size() * count);
  if (cache) {
    cache->count = count;
    cache->stage.assign(1, cur);
    cache->pool_argmax.assign(model.layers.size(), {});
  }
  for (size_t li = 0; li < model.layers.size(); ++li) {
    const Layer<T>& l = model.layers[li];
    const Shape3& in_s = shapes[li];
    const Shape3& out_s = shapes[li + 1];
    std::vector<T> next(out_s.size() * count);
    switch (l.op) {
      case LayerOp::conv: {
        ConvShape cs{in_s.h, in_s.w, in_s.c, l.kh, l.kw, l.out_c};
        size_t rows = static_cast<size_t>(count) * cs.out_h() * cs.out_w();
        ws.col.resize(rows * cs.k());
        im2col(cur.data(), ws.col.data(), cs, count);
        gemm_nn(ws.col.data(), l.weights.data(), next.data(), static_cast<int>(rows),
                cs.k(), l.out_c);
        nn_detail::apply_bias_activation(next.data(), rows, l.out_c, l.bias, l.act);
        break;
      }
      case LayerOp::maxpool:
        nn_detail::maxpool_forward(cur.data(), next.data(), count, in_s,
                                   cache ? &cache->pool_argmax[li] : nullptr);
        break;
      case LayerOp::flatten:
        next = cur;  // HWC per sample is already contiguous
        break;
      case LayerOp::dense: {
        gemm_nn(cur.data(), l.weights.data(), next.data(), count, l.in_dim, l.out_dim);
        nn_detail::apply_bias_activation(next.data(), static_cast<size_t>(count),
                                         l.out_dim, l.bias, l.act);
        break;
      }
    }
    cur = std::move(next);
    if (cache) cache->stage.push_back(cur);
  }
  if (shapes.back() != Shape3{1, 1, 1})
    throw NnError("network output is not a single probability");
  return cur;
}

template <typename T>
std::vector<T> forward_batch(const ModelParams<T>& model, const T* input, int count) {
  Workspace<T> ws;
  return forward_batch(model, input, count, static_cast<ForwardCache<T>*>(nullptr), ws);
}

// Single-sample forward; validates the input against the model spec.
template <typename T>
T model_forward(const ModelParams<T>& model, const Tensor3<T>& patch) {
  if (patch.height != model.input_h || patch.width != model.input_w ||
      patch.channels != model.input_c)
    throw NnError("input dims " + std::to_string(patch.height) + "x" +
                  std::to_string(patch.width) + "x" + std::to_string(patch.channels) +
                  " do not match model input " + std::to_string(model.input_h) + "x" +
                  std::to_string(model.input_w) + "x" + std::to_string(model.input_c));
  return forward_batch(model, patch.data.data(), 1)[0];
}

template <typename T>
std::vector<T> model_forward_batch(const ModelParams<T>& model,
                                   const std::vector<Tensor3<T>>& patches) {
  std::vector<T> input;
  input.reserve(patches.empty() ? 0 : patches.size() * patches[0].size());
  for (const auto& p : patches) {
    if (p.height != model.input_h || p.width != model.input_w ||
        p.channels != model.input_c)
      throw NnError("batch input dims do not match model input");
    input.insert(input.end(), p.data.begin(), p.data.end());
  }
  return forward_batch(model, input.data(), static_cast<int>(patches.size()));
}

template <typename T>
struct Gradients {
  std::vector<std::vector<T>> weights;
  std::vector<std::vector<T>> bias;

  void init(const ModelParams<T>& model) {
    weights.clear();
    bias.clear();
    for (const auto& l : model.layers) {
      weights.emplace_back(l.weights.size(), T(0));
      bias.emplace_back(l.bias.size(), T(0));
    }
  }
};

// Reverse-mode gradients of the mean BCE over the cached batch.
// The sigmoid head folds into the loss: d loss / d logit = (p - y) / count.
template <typename T>
void backward_batch(const ModelParams<T>& model, const ForwardCache<T>& cache,
                    const float* labels, Gradients<T>& grads, Workspace<T>& ws) {
  if (cache.stage.size() != model.layers.size() + 1)
    throw NnError("stale forward cache: run forward with a cache first");
  int count = cache.count;
  auto shapes = model.stage_shapes();
  grads.init(model);

  const Layer<T>& head = model.layers.back();
  if (head.op != LayerOp::dense || head.act != Activation::sigmoid || head.out_dim != 1)
    throw NnError("backward expects a sigmoid dense head");

  // d loss / d logit at the head.
  std::vector<T> dcur(count);
  const std::vector<T>& probs = cache.stage.back();
  for (int i = 0; i < count; ++i)
    dcur[i] = (probs[i] - static_cast<T>(labels[i])) / static_cast<T>(count);

  for (size_t li = model.layers.size(); li-- > 0;) {
    const Layer<T>& l = model.layers[li];
    const Shape3& in_s = shapes[li];
    const std::vector<T>& x = cache.stage[li];
    const std::vector<T>& y = cache.stage[li + 1];
    // dcur currently holds d loss / d (pre-activation of layer li) for the
    // head, or d loss / d (post-activation) otherwise; fold ReLU here.
    if (l.act == Activation::sigmoid && li + 1 != model.layers.size())
      throw NnError("sigmoid is only supported on the output layer");
    if (l.act == Activation::relu) {
      for (size_t i = 0; i < dcur.size(); ++i)
        if (y[i] <= T(0)) dcur[i] = T(0);
    }
    std::vector<T> dprev(in_s.size() * count, T(0));
    switch (l.op) {
      case LayerOp::conv: {
        ConvShape cs{in_s.h, in_s.w, in_s.c, l.kh, l.kw, l.out_c};
        int rows = count * cs.out_h() * cs.out_w();
        // bias: sum over batch-positions in row order
        for (int m = 0; m < rows; ++m)
          for (int o = 0; o < l.out_c; ++o)
            grads.bias[li][o] += dcur[static_cast<size_t>(m) * l.out_c + o];
        // kernel: col(x)^T . dcur
        ws.col.resize(static_cast<size_t>(rows) * cs.k());
        im2col(x.data(), ws.col.data(), cs, count);
        ws.trans.resize(ws.col.size());
        transpose(ws.col.data(), ws.trans.data(), rows, cs.k());
        gemm_nn(ws.trans.data(), dcur.data(), grads.weights[li].data(), cs.k(), rows,
                l.out_c);
        // input: dcol = dcur . kernel^T, then gather
        ws.trans.resize(l.weights.size());
        transpose(l.weights.data(), ws.trans.data(), cs.k(), l.out_c);
        ws.dcol.resize(static_cast<size_t>(rows) * cs.k());
        gemm_nn(dcur.data(), ws.trans.data(), ws.dcol.data(), rows, l.out_c, cs.k());
        col2im_gather(ws.dcol.data(), dprev.data(), cs, count);
        break;
      }
      case LayerOp::maxpool: {
        const auto& argmax = cache.pool_argmax[li];
        for (size_t i = 0; i < argmax.size(); ++i) dprev[argmax[i]] += dcur[i];
        break;
      }
      case LayerOp::flatten:
        dprev = dcur;
        break;
      case LayerOp::dense: {
        for (int m = 0; m < count; ++m)
          for (int o = 0; o < l.out_dim; ++o)
            grads.bias[li][o] += dcur[static_cast<size_t>(m) * l.out_dim + o];
        ws.trans.resize(static_cast<size_t>(count) * l.in_dim);
        transpose(x.data(), ws.trans.data(), count, l.in_dim);
        gemm_nn(ws.trans.data(), dcur.data(), grads.weights[li].data(), l.in_dim, count,
                l.out_dim);
        ws.trans.resize(l.weights.size());
        transpose(l.weights.data(), ws.trans.data(), l.in_dim, l.out_dim);
        gemm_nn(dcur.data(), ws.trans.data(), dprev.data(), count, l.out_dim, l.in_dim);
        break;
      }
    }
    dcur = std::move(dprev);
  }
}

// Mean BCE of a forward pass (double accumulation).
template <typename T>
double batch_bce(const std::vector<T>& probs, const float* labels) {
  double total = 0;
  for (size_t i = 0; i < probs.size(); ++i)
    total += bce_loss(static_cast<double>(probs[i]), labels[i] != 0.0f ? 1 : 0);
  return total / static_cast<double>(probs.size());
}

// ---------------------------------------------------------------------------
// Adam

template <typename T>
struct AdamState {
  uint64_t t = 0;
  double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<std::vector<T>> m_w, v_w, m_b, v_b;

  void init(const ModelParams<T>& model) {
    t = 0;
    m_w.clear(); v_w.clear(); m_b.clear(); v_b.clear();
    for (const auto& l : model.layers) {
      m_w.emplace_back(l.weights.size(), T(0));
      v_w.emplace_back(l.weights.size(), T(0));
      m_b.emplace_back(l.bias.size(), T(0));
      v_b.emplace_back(l.bias.size(), T(0));
    }
  }

  bool initialized_for(const ModelParams<T>& model) const {
    if (m_w.size() != model.layers.size()) return false;
    for (size_t i = 0; i < m_w.size(); ++i)
      if (m_w[i].size() != model.layers[i].weights.size() ||
          m_b[i].size() != model.layers[i].bias.size())
        return false;
    return true;
  }
};

namespace nn_detail {

template <typename T>
void adam_update(std::vector<T>& theta, const std::vector<T>& g, std::vector<T>& m,
                 std::vector<T>& v, double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2, size_t layer_index) {
  for (size_t i = 0; i < theta.size(); ++i) {
    double gi = static_cast<double>(g[i]);
    if (!std::isfinite(gi))
      throw NnError("non-finite gradient in layer " + std::to_string(layer_index) +
                    "; step aborted");
    double mi = beta1 * m[i] + (1.0 - beta1) * gi;
    double vi = beta2 * v[i] + (1.0 - beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    double mhat = mi / bc1;
    double vhat = vi / bc2;
    theta[i] = static_cast<T>(theta[i] - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace nn_detail

template <typename T>
void adam_step(ModelParams<T>& model, const Gradients<T>& grads, AdamState<T>& state) {
  if (!state.initialized_for(model)) throw NnError("Adam state shape mismatch");
  state.t += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < model.layers.size(); ++i) {
    nn_detail::adam_update(model.layers[i].weights, grads.weights[i], state.m_w[i],
                           state.v_w[i], state.lr, state.beta1, state.beta2, state.eps,
                           bc1, bc2, i);
    nn_detail::adam_update(model.layers[i].bias, grads.bias[i], state.m_b[i],
                           state.v_b[i], state.lr, state.beta1, state.beta2, state.eps,
                           bc1, bc2, i);
  }
}

// ---------------------------------------------------------------------------
// Explicit-loop reference implementations (the oracle the GEMM path must
// reproduce bit-for-bit in 64-bit mode). The summation orders they fix:
// conv output sums (a, b, c) ascending; kernel gradients sum output
// positions in row order; input gradients sum (a, b) windows with an inner
// o sum.

template <typename T>
std::vector<T> conv_forward_naive(const T* input, int count, const ConvShape& s,
                                  const std::vector<T>& kernel, const std::vector<T>& bias,
                                  Activation act) {
  int oh = s.out_h(), ow = s.out_w();
  size_t per_in = static_cast<size_t>(s.in_h) * s.in_w * s.in_c;
  std::vector<T> out(static_cast<size_t>(count) * oh * ow * s.out_c);
  size_t idx = 0;
  for (int n = 0; n < count; ++n) {
    const T* in = input + n * per_in;
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        for (int o = 0; o < s.out_c; ++o) {
          T acc = T(0);
          for (int a = 0; a < s.kh; ++a)
            for (int b = 0; b < s.kw; ++b)
              for (int c = 0; c < s.in_c; ++c)
                acc += in[((static_cast<size_t>(i + a) * s.in_w) + (j + b)) * s.in_c + c] *
                       kernel[((static_cast<size_t>(a) * s.kw + b) * s.in_c + c) * s.out_c + o];
          acc = acc + bias[o];
          if (act == Activation::relu) acc = relu(acc);
          else if (act == Activation::sigmoid) acc = sigmoid(acc);
          out[idx++] = acc;
        }
  }
  return out;
}

template <typename T>
std::vector<T> dense_forward_naive(const T* input, int count, int in_dim, int out_dim,
                                   const std::vector<T>& weight, const std::vector<T>& bias,
                                   Activation act) {
  std::vector<T> out(static_cast<size_t>(count) * out_dim);
  for (int n = 0; n < count; ++n)
    for (int o = 0; o < out_dim; ++o) {
      T acc = T(0);
      for (int k = 0; k < in_dim; ++k)
        acc += input[static_cast<size_t>(n) * in_dim + k] *
               weight[static_cast<size_t>(k) * out_dim + o];
      acc = acc + bias[o];
      if (act == Activation::relu) acc = relu(acc);
      else if (act == Activation::sigmoid) acc = sigmoid(acc);
      out[static_cast<size_t>(n) * out_dim + o] = acc;
    }
  return out;
}

// Reference conv backward: gradients w.r.t. kernel, bias, and input given
// d loss / d pre-activation. Orders chosen to match the GEMM path exactly.
template <typename T>
void conv_backward_naive(const T* input, const T* dpre, int count, const ConvShape& s,
                         const std::vector<T>& kernel, std::vector<T>& dkernel,
                         std::vector<T>& dbias, std::vector<T>& dinput) {
  int oh = s.out_h(), ow = s.out_w();
  size_t per_in = static_cast<size_t>(s.in_h) * s.in_w * s.in_c;
  dkernel.assign(kernel.size(), T(0));
  dbias.assign(s.out_c, T(0));
  dinput.assign(static_cast<size_t>(count) * per_in, T(0));
  // bias and kernel: positions in row order
  for (int n = 0; n < count; ++n) {
    const T* in = input + n * per_in;
    const T* d = dpre + static_cast<size_t>(n) * oh * ow * s.out_c;
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        for (int o = 0; o < s.out_c; ++o) {
          T g = d[((static_cast<size_t>(i) * ow) + j) * s.out_c + o];
          dbias[o] += g;
          for (int a = 0; a < s.kh; ++a)
            for (int b = 0; b < s.kw; ++b)
              for (int c = 0; c < s.in_c; ++c)
                dkernel[((static_cast<size_t>(a) * s.kw + b) * s.in_c + c) * s.out_c + o] +=
                    in[((static_cast<size_t>(i + a) * s.in_w) + (j + b)) * s.in_c + c] * g;
        }
  }
  // input: gather per cell, (a, b) ascending with an inner o sum
  for (int n = 0; n < count; ++n) {
    const T* d = dpre + static_cast<size_t>(n) * oh * ow * s.out_c;
    T* din = dinput.data() + n * per_in;
    for (int y = 0; y < s.in_h; ++y)
      for (int x = 0; x < s.in_w; ++x)
        for (int c = 0; c < s.in_c; ++c) {
          T acc = T(0);
          for (int a = std::max(0, y - (oh - 1)); a <= std::min(s.kh - 1, y); ++a)
            for (int b = std::max(0, x - (ow - 1)); b <= std::min(s.kw - 1, x); ++b) {
              T partial = T(0);
              for (int o = 0; o < s.out_c; ++o)
                partial += d[((static_cast<size_t>(y - a) * ow) + (x - b)) * s.out_c + o] *
                           kernel[((static_cast<size_t>(a) * s.kw + b) * s.in_c + c) *
                                      s.out_c + o];
              acc += partial;
            }
          din[((static_cast<size_t>(y) * s.in_w) + x) * s.in_c + c] = acc;
        }
  }
}

}  // namespace wildfire
