#pragma once

// Polygon -> binary mask rasterization. A pixel is 1 iff its center is
// inside the polygon under the even-odd rule, holes included in the parity
// count. Implementation is a scanline: for each pixel row, intersect the
// horizontal line through the centers with every ring edge using the
// half-open vertex rule (y1 > y) != (y2 > y), then walk the sorted
// crossings left to right. A center exactly on a crossing resolves to
// outside-onto-inside transitions consistent with a strict rightward
// ray cast (crossings strictly greater than the center x flip parity).

#include <algorithm>
#include <vector>

#include "wildfire/geo.hpp"

namespace wildfire {

inline RasterGrid rasterize_polygon(const PerimeterPolygon& poly,
                                    const GridSpec& spec,
                                    bool* degenerate_warning = nullptr) {
  spec.validate();
  poly.validate();
  RasterGrid mask(spec, 0.0);
  if (degenerate_warning) *degenerate_warning = false;
  if (std::abs(poly.exterior_area()) == 0.0) {
    if (degenerate_warning) *degenerate_warning = true;
    return mask;
  }

  std::vector<double> crossings;
  for (int row = 0; row < spec.height; ++row) {
    double y = spec.center_y(row);
    crossings.clear();
    for (const auto& ring : poly.rings) {
      for (size_t i = 0; i + 1 < ring.size(); ++i) {
        double y1 = ring[i].second, y2 = ring[i + 1].second;
        if ((y1 > y) == (y2 > y)) continue;
        double x1 = ring[i].first, x2 = ring[i + 1].first;
        crossings.push_back(x1 + (y - y1) * (x2 - x1) / (y2 - y1));
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    // Walk centers and crossings together; parity of crossings <= center x
    // equals parity of crossings > it because the total count is even.
    size_t ci = 0;
    bool inside = false;
    for (int col = 0; col < spec.width; ++col) {
      double x = spec.center_x(col);
      while (ci < crossings.size() && crossings[ci] <= x) {
        inside = !inside;
        ++ci;
      }
      if (inside) mask.at(row, col) = 1.0;
    }
  }
  return mask;
}

}  // namespace wildfire
