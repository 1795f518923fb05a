#pragma once

// Core raster/vector domain types. Grids are north-up with square pixels;
// pixel (col,row) covers the half-open map square
//   [origin_x + col*ps, origin_x + (col+1)*ps) x (origin_y - (row+1)*ps, origin_y - row*ps]
// and its center is (origin_x + (col+0.5)*ps, origin_y - (row+0.5)*ps).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildfire/timeutil.hpp"

namespace wildfire {

struct GeoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double origin_x = 0.0;  // map x of the left edge of column 0
  double origin_y = 0.0;  // map y of the top edge of row 0
  double pixel_size = 30.0;
  int width = 1;
  int height = 1;
  std::string crs_tag;

  void validate() const {
    if (!(pixel_size > 0.0)) throw GeoError("pixel_size must be positive");
    if (width < 1 || height < 1) throw GeoError("grid dims must be >= 1");
  }

  size_t pixel_count() const {
    return static_cast<size_t>(width) * static_cast<size_t>(height);
  }

  double center_x(int col) const { return origin_x + (col + 0.5) * pixel_size; }
  double center_y(int row) const { return origin_y - (row + 0.5) * pixel_size; }

  // Containing pixel of a map point, half-open convention: a point exactly
  // on a shared edge belongs to the pixel right/below it.
  int col_of(double x) const {
    return static_cast<int>(std::floor((x - origin_x) / pixel_size));
  }
  int row_of(double y) const {
    return static_cast<int>(std::floor((origin_y - y) / pixel_size));
  }

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }

  bool same_grid(const GridSpec& o) const {
    return origin_x == o.origin_x && origin_y == o.origin_y &&
           pixel_size == o.pixel_size && width == o.width &&
           height == o.height && crs_tag == o.crs_tag;
  }
};

struct RasterGrid {
  GridSpec spec;
  std::vector<double> values;  // row-major, values[row*width + col]
  std::optional<double> nodata;

  RasterGrid() = default;
  explicit RasterGrid(GridSpec s, double fill = 0.0)
      : spec(std::move(s)), values(spec.pixel_count(), fill) {
    spec.validate();
  }

  double& at(int row, int col) {
    return values[static_cast<size_t>(row) * spec.width + col];
  }
  double at(int row, int col) const {
    return values[static_cast<size_t>(row) * spec.width + col];
  }

  bool is_nodata(double v) const {
    return nodata.has_value() && (v == *nodata || (std::isnan(v) && std::isnan(*nodata)));
  }
  bool is_nodata_at(int row, int col) const { return is_nodata(at(row, col)); }
};

struct PerimeterPolygon {
  // First ring is the exterior, the rest are holes. Rings are closed
  // (first point repeated last) with at least 4 points.
  std::vector<std::vector<std::pair<double, double>>> rings;
  UtcTime timestamp = 0;

  void validate() const {
    if (rings.empty()) throw GeoError("polygon has no rings");
    for (const auto& ring : rings) {
      if (ring.size() < 4) throw GeoError("ring has fewer than 4 points");
      if (ring.front() != ring.back()) throw GeoError("ring not closed");
    }
  }

  // Signed shoelace area of the exterior ring.
  double exterior_area() const {
    if (rings.empty()) return 0.0;
    const auto& ring = rings.front();
    double twice = 0.0;
    for (size_t i = 0; i + 1 < ring.size(); ++i)
      twice += ring[i].first * ring[i + 1].second -
               ring[i + 1].first * ring[i].second;
    return 0.5 * twice;
  }
};

}  // namespace wildfire
