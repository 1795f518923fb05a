#pragma once

// Fire manifest: the JSON entry point of the real-data pipeline. It names
// the fire, the working CRS, the target grid, the schema, the dated scene
// rasters (ESRI ASCII or minimal GeoTIFF), the perimeter GeoJSON, and the
// weather CSV. cmd_stack turns one of these into a FireEventArchive.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildfire/archive_io.hpp"
#include "wildfire/ascii_grid.hpp"
#include "wildfire/geojson.hpp"
#include "wildfire/stacking.hpp"
#include "wildfire/tiff.hpp"

namespace wildfire {

struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FireManifest {
  std::string fire_id;
  GridSpec grid;
  LayerSchema schema;
  std::vector<DatedScene> scenes;
  std::vector<PerimeterPolygon> perimeters;
  std::vector<WeatherStation> stations;
};

namespace manifest_detail {

inline RasterGrid load_raster(const std::filesystem::path& path, const std::string& crs) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".asc" || ext == ".agr" || ext == ".txt") {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open raster '" + path.string() + "'");
    return parse_ascii_grid(in, crs);
  }
  if (ext == ".tif" || ext == ".tiff") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open raster '" + path.string() + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return parse_geotiff_minimal(bytes, crs);
  }
  throw ManifestError("unsupported raster extension '" + ext + "' for '" +
                      path.string() + "'");
}

}  // namespace manifest_detail

inline FireManifest load_fire_manifest(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw ManifestError("cannot open manifest '" + manifest_path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  fs::path base = fs::path(manifest_path).parent_path();

  FireManifest m;
  m.fire_id = doc.value("fire_id", "fire");
  m.grid = archive_detail::grid_from_json(doc.at("grid"));
  m.schema = archive_detail::schema_from_json(doc.at("schema"));

  for (const auto& js : doc.at("scenes")) {
    DatedScene scene;
    scene.timestamp = parse_iso8601(js.at("timestamp").get<std::string>());
    for (const auto& [name, rel] : js.at("layers").items())
      scene.layers[name] =
          manifest_detail::load_raster(base / rel.get<std::string>(), m.grid.crs_tag);
    m.scenes.push_back(std::move(scene));
  }

  {
    fs::path perims = base / doc.at("perimeters").get<std::string>();
    std::ifstream pin(perims);
    if (!pin) throw ManifestError("cannot open perimeters '" + perims.string() + "'");
    std::string text((std::istreambuf_iterator<char>(pin)),
                     std::istreambuf_iterator<char>());
    m.perimeters = parse_perimeter_geojson(text);
  }

  if (doc.contains("weather")) {
    fs::path weather = base / doc.at("weather").get<std::string>();
    std::ifstream win(weather);
    if (!win) throw ManifestError("cannot open weather CSV '" + weather.string() + "'");
    m.stations = parse_weather_csv(win);
  }
  return m;
}

inline FireEventArchive build_archive_from_manifest(const std::string& manifest_path) {
  FireManifest m = load_fire_manifest(manifest_path);
  return build_archive(m.perimeters, m.scenes, m.stations, m.schema, m.grid, m.fire_id);
}

}  // namespace wildfire
