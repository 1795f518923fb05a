#pragma once

// Same-CRS regridding: nearest-neighbor resample onto a target grid, and
// first-listed-wins mosaicking of tiles. The nearest source pixel to a
// target center is the source pixel containing it (half-open convention
// from GridSpec), which for aligned grids reduces to the identity.

#include <vector>

#include "wildfire/geo.hpp"

namespace wildfire {

inline RasterGrid resample_to_grid(const RasterGrid& src, const GridSpec& target) {
  target.validate();
  if (src.spec.crs_tag != target.crs_tag)
    throw GeoError("crs_tag mismatch: '" + src.spec.crs_tag + "' vs '" +
                   target.crs_tag + "'");
  RasterGrid out(target);
  // Out-of-extent pixels become nodata; grids without a declared sentinel
  // get NaN, which cannot collide with finite data values.
  double fill = src.nodata.value_or(std::numeric_limits<double>::quiet_NaN());
  out.nodata = fill;
  for (int row = 0; row < target.height; ++row) {
    double y = target.center_y(row);
    int src_row = src.spec.row_of(y);
    bool row_ok = src_row >= 0 && src_row < src.spec.height;
    for (int col = 0; col < target.width; ++col) {
      double x = target.center_x(col);
      int src_col = src.spec.col_of(x);
      if (row_ok && src_col >= 0 && src_col < src.spec.width)
        out.at(row, col) = src.at(src_row, src_col);
      else
        out.at(row, col) = fill;
    }
  }
  return out;
}

inline RasterGrid mosaic(const std::vector<RasterGrid>& rasters, const GridSpec& target) {
  if (rasters.empty()) throw GeoError("mosaic: empty input list");
  target.validate();
  for (const auto& r : rasters) {
    if (r.spec.crs_tag != target.crs_tag) throw GeoError("mosaic: crs_tag mismatch");
    if (r.spec.pixel_size != target.pixel_size)
      throw GeoError("mosaic: pixel_size mismatch");
  }
  RasterGrid out(target);
  double nodata = rasters.front().nodata.value_or(std::numeric_limits<double>::quiet_NaN());
  out.nodata = nodata;
  for (int row = 0; row < target.height; ++row) {
    double y = target.center_y(row);
    for (int col = 0; col < target.width; ++col) {
      double x = target.center_x(col);
      double v = nodata;
      for (const auto& r : rasters) {
        int sr = r.spec.row_of(y);
        int sc = r.spec.col_of(x);
        if (sr < 0 || sr >= r.spec.height || sc < 0 || sc >= r.spec.width) continue;
        double candidate = r.at(sr, sc);
        if (r.is_nodata(candidate)) continue;
        v = candidate;
        break;
      }
      out.at(row, col) = v;
    }
  }
  return out;
}

}  // namespace wildfire
