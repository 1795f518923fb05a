#pragma once

// Perimeter GeoJSON: a FeatureCollection of Polygon/MultiPolygon features,
// each with a "timestamp" property (ISO-8601 UTC), coordinates already in
// the working projected CRS. Every polygon part becomes one
// PerimeterPolygon; results are sorted by timestamp (stable, so file order
// breaks ties).

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildfire/geo.hpp"
#include "wildfire/timeutil.hpp"

namespace wildfire {

struct GeoJsonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace geojson_detail {

inline std::vector<std::pair<double, double>> parse_ring(const nlohmann::json& ring,
                                                         size_t feature_index) {
  std::vector<std::pair<double, double>> out;
  if (!ring.is_array() || ring.size() < 4)
    throw GeoJsonError("feature " + std::to_string(feature_index) +
                       ": ring has fewer than 4 points");
  for (const auto& pt : ring) {
    if (!pt.is_array() || pt.size() < 2)
      throw GeoJsonError("feature " + std::to_string(feature_index) +
                         ": bad coordinate pair");
    out.emplace_back(pt[0].get<double>(), pt[1].get<double>());
  }
  if (out.front() != out.back())
    throw GeoJsonError("feature " + std::to_string(feature_index) +
                       ": ring not closed");
  return out;
}

inline PerimeterPolygon parse_polygon(const nlohmann::json& rings, UtcTime ts,
                                      size_t feature_index) {
  PerimeterPolygon poly;
  poly.timestamp = ts;
  if (!rings.is_array() || rings.empty())
    throw GeoJsonError("feature " + std::to_string(feature_index) +
                       ": polygon has no rings");
  for (const auto& ring : rings) poly.rings.push_back(parse_ring(ring, feature_index));
  return poly;
}

}  // namespace geojson_detail

inline std::vector<PerimeterPolygon> parse_perimeter_geojson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw GeoJsonError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw GeoJsonError("not a FeatureCollection");

  std::vector<PerimeterPolygon> polys;
  size_t idx = 0;
  for (const auto& feature : doc["features"]) {
    if (!feature.contains("properties") || !feature["properties"].is_object() ||
        !feature["properties"].contains("timestamp"))
      throw GeoJsonError("feature " + std::to_string(idx) + ": missing timestamp property");
    UtcTime ts;
    try {
      ts = parse_iso8601(feature["properties"]["timestamp"].get<std::string>());
    } catch (const std::exception& e) {
      throw GeoJsonError("feature " + std::to_string(idx) + ": " + e.what());
    }
    if (!feature.contains("geometry") || !feature["geometry"].is_object())
      throw GeoJsonError("feature " + std::to_string(idx) + ": missing geometry");
    const auto& geom = feature["geometry"];
    std::string type = geom.value("type", "");
    const auto& coords = geom["coordinates"];
    if (type == "Polygon") {
      polys.push_back(geojson_detail::parse_polygon(coords, ts, idx));
    } else if (type == "MultiPolygon") {
      for (const auto& part : coords)
        polys.push_back(geojson_detail::parse_polygon(part, ts, idx));
    } else {
      throw GeoJsonError("feature " + std::to_string(idx) +
                         ": unsupported geometry type '" + type + "'");
    }
    ++idx;
  }
  std::stable_sort(polys.begin(), polys.end(),
                   [](const PerimeterPolygon& a, const PerimeterPolygon& b) {
                     return a.timestamp < b.timestamp;
                   });
  return polys;
}

}  // namespace wildfire
