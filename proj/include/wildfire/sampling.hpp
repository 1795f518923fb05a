#pragma once

// Stochastic spatial sampling: seeded without-replacement POI draws over
// all pixel positions of a stack pair, zero-padded patch extraction, and
// the optional dihedral (flip/rotate) augmentation. The draw order is a
// row-major index permutation by seeded Fisher-Yates, so a fixed seed
// reproduces the exact POI sequence anywhere.

#include <cstdint>
#include <string>
#include <vector>

#include "wildfire/rng.hpp"
#include "wildfire/stacking.hpp"
#include "wildfire/tensor.hpp"
#include "wildfire/timeutil.hpp"

namespace wildfire {

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Sample {
  Tensor3<float> patch;  // n x n x C, zero padded outside the grid
  int label = 0;         // fire state of the POI 24h+ later
  int row = 0, col = 0;  // POI in grid coordinates
  std::string fire_id;
  UtcTime t0 = 0, t1 = 0;
  int grid_height = 0, grid_width = 0;
  uint8_t dihedral = 0;  // 0 = as sampled, 1..7 = augmented copy
};

struct MaskSample {
  Sample base;
  Tensor3<float> label_mask;  // n x n x 1, next-day mask around the POI
};

// n x n x C window centered at (row, col); cells outside the source are 0.
template <typename T>
Tensor3<T> extract_patch(const Tensor3<T>& src, int row, int col, int n) {
  if (n < 1 || n % 2 == 0) throw SamplingError("patch size must be odd");
  int half = n / 2;
  Tensor3<T> patch(n, n, src.channels, T(0));
  int y0 = std::max(0, row - half), y1 = std::min(src.height - 1, row + half);
  for (int y = y0; y <= y1; ++y) {
    int x0 = std::max(0, col - half), x1 = std::min(src.width - 1, col + half);
    if (x0 > x1) continue;
    const T* s = &src.data[(static_cast<size_t>(y) * src.width + x0) * src.channels];
    T* d = &patch.data[(static_cast<size_t>(y - row + half) * n + (x0 - col + half)) *
                       src.channels];
    std::copy(s, s + static_cast<size_t>(x1 - x0 + 1) * src.channels, d);
  }
  return patch;
}

inline Tensor3<float> extract_patch(const LayerStack& stack, int row, int col, int n = 31) {
  return extract_patch(stack.to_tensor(), row, col, n);
}

namespace sampling_detail {

inline void check_pair(const LayerStack& t0, const LayerStack& t1, size_t count) {
  if (t1.timestamp - t0.timestamp < kSecondsPerDay)
    throw SamplingError("stack pair closer than 24h");
  if (!t0.spec.same_grid(t1.spec)) throw SamplingError("stack pair grid mismatch");
  size_t population = t0.spec.pixel_count();
  if (count > population)
    throw SamplingError("count " + std::to_string(count) +
                        " exceeds pixel population " + std::to_string(population));
}

}  // namespace sampling_detail

// Draw `count` distinct POIs uniformly from all pixel positions of stack_t;
// each sample's label is stack_next's fire mask at the POI.
inline std::vector<Sample> sample_pois(const LayerStack& stack_t,
                                       const LayerStack& stack_next, size_t count,
                                       uint64_t seed, int n = 31,
                                       const std::string& fire_id = "") {
  sampling_detail::check_pair(stack_t, stack_next, count);
  int w = stack_t.spec.width, h = stack_t.spec.height;
  Rng rng(seed);
  std::vector<uint32_t> order = index_permutation(static_cast<uint32_t>(w) * h, rng);
  Tensor3<float> tensor = stack_t.to_tensor();
  const RasterGrid& next_mask = stack_next.fire_mask();

  std::vector<Sample> samples;
  samples.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Sample s;
    s.row = static_cast<int>(order[i] / w);
    s.col = static_cast<int>(order[i] % w);
    s.patch = extract_patch(tensor, s.row, s.col, n);
    s.label = next_mask.at(s.row, s.col) != 0.0 ? 1 : 0;
    s.fire_id = fire_id;
    s.t0 = stack_t.timestamp;
    s.t1 = stack_next.timestamp;
    s.grid_height = h;
    s.grid_width = w;
    samples.push_back(std::move(s));
  }
  return samples;
}

// Mask-label scheme: same POIs, but the label is the n x n next-day mask
// window around the POI (zero padded like the patch).
inline std::vector<MaskSample> sample_mask_scheme(const LayerStack& stack_t,
                                                  const LayerStack& stack_next,
                                                  size_t count, int n, uint64_t seed,
                                                  const std::string& fire_id = "") {
  std::vector<Sample> base = sample_pois(stack_t, stack_next, count, seed, n, fire_id);
  const RasterGrid& next_mask = stack_next.fire_mask();
  Tensor3<float> mask_tensor(stack_next.spec.height, stack_next.spec.width, 1);
  for (int y = 0; y < mask_tensor.height; ++y)
    for (int x = 0; x < mask_tensor.width; ++x)
      mask_tensor.at(y, x, 0) = static_cast<float>(next_mask.at(y, x));

  std::vector<MaskSample> out;
  out.reserve(base.size());
  for (auto& b : base) {
    MaskSample ms;
    ms.label_mask = extract_patch(mask_tensor, b.row, b.col, n);
    ms.base = std::move(b);
    out.push_back(std::move(ms));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dihedral augmentation (default OFF in every pipeline entry point).
//
// Element d in 0..7 is decomposed as d = 4*flip + rot: a horizontal mirror
// applied first (flip=1), then rot CCW quarter turns. Wind direction is
// degrees clockwise from north (blowing toward); under the image transform
// the angle maps as mirror: a -> 360-a, then each CCW quarter turn:
// a -> a-90. Angle-carrying cells are only remapped inside the patch's
// in-bounds rectangle so zero padding stays zero.

namespace sampling_detail {

template <typename T>
Tensor3<T> dihedral_plane(const Tensor3<T>& src, int d) {
  int rot = d & 3, flip = d >> 2;
  int n = src.height;
  Tensor3<T> out(n, n, src.channels);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      int sy = y, sx = x;
      for (int r = 0; r < rot; ++r) {  // invert rot: apply CW per step to indices
        int ty = sx, tx = n - 1 - sy;
        sy = ty;
        sx = tx;
      }
      if (flip) sx = n - 1 - sx;
      for (int c = 0; c < src.channels; ++c) out.at(y, x, c) = src.at(sy, sx, c);
    }
  }
  return out;
}

inline double dihedral_angle(double degrees, int d) {
  int rot = d & 3, flip = d >> 2;
  double a = degrees;
  if (flip) a = 360.0 - a;
  a -= 90.0 * rot;
  a = std::fmod(a, 360.0);
  if (a < 0) a += 360.0;
  return a;
}

}  // namespace sampling_detail

// Expand samples 8-fold. Wind channels (direction / sin / cos), when present
// in the schema, are value-adjusted to match the rotated/mirrored frame.
inline std::vector<Sample> augment_dihedral(const std::vector<Sample>& samples,
                                            const LayerSchema& schema) {
  int dir_idx = -1, sin_idx = -1, cos_idx = -1;
  for (size_t i = 0; i < schema.layers.size(); ++i) {
    if (schema.layers[i].name == "wind_direction") dir_idx = static_cast<int>(i);
    if (schema.layers[i].name == "wind_dir_sin") sin_idx = static_cast<int>(i);
    if (schema.layers[i].name == "wind_dir_cos") cos_idx = static_cast<int>(i);
  }
  if ((sin_idx < 0) != (cos_idx < 0))
    throw SamplingError("wind_dir_sin/cos channels must come as a pair");

  std::vector<Sample> out;
  out.reserve(samples.size() * 8);
  for (const auto& s : samples) {
    int n = s.patch.height;
    int half = n / 2;
    // In-bounds rectangle of the original patch, in patch coordinates.
    int ry0 = std::max(0, half - s.row);
    int ry1 = n - 1 - std::max(0, s.row + half - (s.grid_height - 1));
    int rx0 = std::max(0, half - s.col);
    int rx1 = n - 1 - std::max(0, s.col + half - (s.grid_width - 1));
    for (int d = 0; d < 8; ++d) {
      Sample a = s;
      a.dihedral = static_cast<uint8_t>(d);
      if (d == 0) {
        out.push_back(std::move(a));
        continue;
      }
      a.patch = sampling_detail::dihedral_plane(s.patch, d);
      // The valid rectangle moves with the transform; recompute its image
      // by transforming a marker plane would be wasteful, so remap angles
      // over the whole patch but only where the ORIGINAL cell was in
      // bounds; track via the source-index logic mirrored from
      // dihedral_plane.
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          int sy = y, sx = x;
          int rot = d & 3, flip = d >> 2;
          for (int r = 0; r < rot; ++r) {
            int ty = sx, tx = n - 1 - sy;
            sy = ty;
            sx = tx;
          }
          if (flip) sx = n - 1 - sx;
          bool in_bounds = sy >= ry0 && sy <= ry1 && sx >= rx0 && sx <= rx1;
          if (!in_bounds) continue;
          if (dir_idx >= 0) {
            double deg = a.patch.at(y, x, dir_idx) * 360.0;
            a.patch.at(y, x, dir_idx) =
                static_cast<float>(sampling_detail::dihedral_angle(deg, d) / 360.0);
          }
          if (sin_idx >= 0) {
            // stored as (value+1)/2; mirror: sin -> -sin; CCW quarter turn:
            // (sin, cos) -> (-cos, sin)
            double sv = a.patch.at(y, x, sin_idx) * 2.0 - 1.0;
            double cv = a.patch.at(y, x, cos_idx) * 2.0 - 1.0;
            if (d >> 2) sv = -sv;
            for (int r = 0; r < (d & 3); ++r) {
              double ns = -cv, nc = sv;
              sv = ns;
              cv = nc;
            }
            a.patch.at(y, x, sin_idx) = static_cast<float>((sv + 1.0) / 2.0);
            a.patch.at(y, x, cos_idx) = static_cast<float>((cv + 1.0) / 2.0);
          }
        }
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace wildfire
