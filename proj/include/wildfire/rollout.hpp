#pragma once

// Dense whole-grid prediction and the autoregressive rollout. Every pixel
// is classified from its zero-padded patch exactly as in training; the
// rollout thresholds the probability mask and feeds it back as the next
// fire-mask channel while all other channels stay frozen.

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildfire/ascii_grid.hpp"
#include "wildfire/nn.hpp"
#include "wildfire/sampling.hpp"
#include "wildfire/stacking.hpp"

namespace wildfire {

struct RolloutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PredictionMask {
  GridSpec spec;
  std::vector<double> probabilities;  // row-major, in [0,1]
  UtcTime source_timestamp = 0;
  int horizon_steps = 1;

  double at(int row, int col) const {
    return probabilities[static_cast<size_t>(row) * spec.width + col];
  }
};

// Classify every pixel of the stack: extract the zero-padded patch at each
// position and run the model. Batched row by row; results are identical to
// calling model_forward per pixel.
template <typename T>
PredictionMask predict_dense(const ModelParams<T>& model, const LayerStack& stack) {
  if (stack.schema.channel_count() != model.input_c)
    throw RolloutError("stack has " + std::to_string(stack.schema.channel_count()) +
                       " channels but the model expects " + std::to_string(model.input_c));
  if (model.input_h != model.input_w || model.input_h % 2 == 0)
    throw RolloutError("model input must be square with odd side");
  int n = model.input_h;
  int w = stack.spec.width, h = stack.spec.height;

  Tensor3<float> grid = stack.to_tensor();
  Tensor3<T> grid_t = grid.template cast<T>();

  PredictionMask out;
  out.spec = stack.spec;
  out.source_timestamp = stack.timestamp;
  out.probabilities.resize(stack.spec.pixel_count());

  Workspace<T> ws;
  size_t patch_floats = static_cast<size_t>(n) * n * model.input_c;
  std::vector<T> input(static_cast<size_t>(w) * patch_floats);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      Tensor3<T> patch = extract_patch(grid_t, row, col, n);
      std::copy(patch.data.begin(), patch.data.end(),
                input.begin() + static_cast<size_t>(col) * patch_floats);
    }
    auto probs = forward_batch(model, input.data(), w,
                               static_cast<ForwardCache<T>*>(nullptr), ws);
    for (int col = 0; col < w; ++col)
      out.probabilities[static_cast<size_t>(row) * w + col] =
          static_cast<double>(probs[col]);
  }
  return out;
}

struct RolloutStep {
  PredictionMask probabilities;
  RasterGrid binary_mask;  // thresholded, fed back as the next fire mask
};

// steps >= 1 autoregressive iterations. Static channels are frozen; only
// the fire-mask channel is replaced each step. Fire may "unburn" under a
// learned model; set union_with_previous to force monotone growth.
template <typename T>
std::vector<RolloutStep> rollout(const ModelParams<T>& model, const LayerStack& stack0,
                                 int steps, double threshold = 0.5,
                                 bool union_with_previous = false) {
  if (steps < 1) throw RolloutError("steps must be >= 1");
  std::vector<RolloutStep> out;
  LayerStack stack = stack0;
  int mask_idx = stack.schema.fire_mask_index();
  for (int step = 1; step <= steps; ++step) {
    RolloutStep rs;
    rs.probabilities = predict_dense(model, stack);
    rs.probabilities.horizon_steps = step;
    rs.binary_mask = RasterGrid(stack.spec, 0.0);
    for (size_t i = 0; i < rs.probabilities.probabilities.size(); ++i) {
      bool burn = rs.probabilities.probabilities[i] >= threshold;
      if (union_with_previous && stack.channels[mask_idx].values[i] != 0.0) burn = true;
      rs.binary_mask.values[i] = burn ? 1.0 : 0.0;
    }
    stack.channels[mask_idx] = rs.binary_mask;
    stack.timestamp += kSecondsPerDay;
    out.push_back(std::move(rs));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

enum class MaskFormat { ascii_grid, pgm };

struct MaskSidecar {
  std::string timestamp;
  int step = 0;
  double threshold = 0.5;
  std::string model_checksum;
};

// ASCII grid carries the probabilities themselves; PGM is 8-bit grayscale
// with probability*255 rounded half-up. A JSON sidecar (<path>.json)
// records provenance.
inline void export_mask(const PredictionMask& mask, const std::string& path,
                        MaskFormat format, const MaskSidecar& sidecar = {}) {
  if (format == MaskFormat::ascii_grid) {
    RasterGrid grid(mask.spec);
    grid.values = mask.probabilities;
    std::ofstream out(path);
    if (!out) throw RolloutError("cannot open '" + path + "'");
    write_ascii_grid(grid, out);
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RolloutError("cannot open '" + path + "'");
    out << "P5\n" << mask.spec.width << " " << mask.spec.height << "\n255\n";
    for (double p : mask.probabilities) {
      double clamped = std::min(1.0, std::max(0.0, p));
      out.put(static_cast<char>(static_cast<int>(std::floor(clamped * 255.0 + 0.5))));
    }
  }
  nlohmann::json side = {
      {"timestamp", sidecar.timestamp.empty() ? format_iso8601(mask.source_timestamp)
                                              : sidecar.timestamp},
      {"step", sidecar.step ? sidecar.step : mask.horizon_steps},
      {"threshold", sidecar.threshold},
      {"model_checksum", sidecar.model_checksum},
      {"grid", {{"origin_x", mask.spec.origin_x},
                {"origin_y", mask.spec.origin_y},
                {"pixel_size", mask.spec.pixel_size},
                {"width", mask.spec.width},
                {"height", mask.spec.height},
                {"crs_tag", mask.spec.crs_tag}}},
  };
  std::ofstream sout(path + ".json");
  sout << side.dump(2) << "\n";
}

}  // namespace wildfire
