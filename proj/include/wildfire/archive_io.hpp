#pragma once

// FireEventArchive persistence: a directory with archive.json plus one
// ASCII grid per channel per stack. This is the interchange format between
// the stacking/synthesis stages and the sampling/prediction stages, and it
// is what cmd_synth and cmd_stack emit.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "wildfire/ascii_grid.hpp"
#include "wildfire/stacking.hpp"

namespace wildfire {

struct ArchiveIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace archive_detail {

inline nlohmann::json grid_to_json(const GridSpec& s) {
  return {{"origin_x", s.origin_x}, {"origin_y", s.origin_y},
          {"pixel_size", s.pixel_size}, {"width", s.width},
          {"height", s.height}, {"crs_tag", s.crs_tag}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec s;
  s.origin_x = j.at("origin_x").get<double>();
  s.origin_y = j.at("origin_y").get<double>();
  s.pixel_size = j.at("pixel_size").get<double>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.crs_tag = j.value("crs_tag", "");
  s.validate();
  return s;
}

inline nlohmann::json schema_to_json(const LayerSchema& schema) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& def : schema.layers)
    out.push_back({{"name", def.name}, {"kind", to_string(def.kind)}});
  return out;
}

inline LayerSchema schema_from_json(const nlohmann::json& arr) {
  LayerSchema schema;
  for (const auto& item : arr)
    schema.layers.push_back({item.at("name").get<std::string>(),
                             layer_kind_from_string(item.at("kind").get<std::string>())});
  schema.validate();
  return schema;
}

}  // namespace archive_detail

inline void save_archive(const FireEventArchive& archive, const std::string& dir) {
  namespace fs = std::filesystem;
  if (archive.stacks.empty()) throw ArchiveIoError("archive has no stacks");
  fs::create_directories(dir);
  nlohmann::json doc;
  doc["fire_id"] = archive.fire_id;
  const LayerStack& first = archive.stacks.front();
  doc["grid"] = archive_detail::grid_to_json(first.spec);
  doc["schema"] = archive_detail::schema_to_json(first.schema);
  nlohmann::json stacks = nlohmann::json::array();
  for (size_t si = 0; si < archive.stacks.size(); ++si) {
    const LayerStack& stack = archive.stacks[si];
    fs::path stack_dir = fs::path(dir) / "stacks" / std::to_string(si);
    fs::create_directories(stack_dir);
    nlohmann::json js;
    js["timestamp"] = format_iso8601(stack.timestamp);
    nlohmann::json channels;
    for (size_t ci = 0; ci < stack.channels.size(); ++ci) {
      const std::string& name = stack.schema.layers[ci].name;
      std::string rel = "stacks/" + std::to_string(si) + "/" + name + ".asc";
      std::ofstream out(fs::path(dir) / rel);
      if (!out) throw ArchiveIoError("cannot write '" + rel + "'");
      write_ascii_grid(stack.channels[ci], out);
      channels[name] = rel;
    }
    js["channels"] = channels;
    js["station_weather"] = stack.station_weather;
    nlohmann::json norm;
    for (const auto& [name, info] : stack.normalization)
      norm[name] = {{"lo", info.lo}, {"hi", info.hi}};
    js["normalization"] = norm;
    js["normalized"] = stack.normalized;
    stacks.push_back(std::move(js));
  }
  doc["stacks"] = stacks;
  std::ofstream out(fs::path(dir) / "archive.json");
  if (!out) throw ArchiveIoError("cannot write archive.json");
  out << doc.dump(2) << "\n";
}

inline FireEventArchive load_archive(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path manifest_path = fs::path(dir) / "archive.json";
  std::ifstream in(manifest_path);
  if (!in) throw ArchiveIoError("cannot open '" + manifest_path.string() + "'");
  nlohmann::json doc = nlohmann::json::parse(in);

  FireEventArchive archive;
  archive.fire_id = doc.value("fire_id", "");
  GridSpec spec = archive_detail::grid_from_json(doc.at("grid"));
  LayerSchema schema = archive_detail::schema_from_json(doc.at("schema"));
  for (const auto& js : doc.at("stacks")) {
    LayerStack stack;
    stack.timestamp = parse_iso8601(js.at("timestamp").get<std::string>());
    stack.spec = spec;
    stack.schema = schema;
    for (const auto& def : schema.layers) {
      std::string rel = js.at("channels").at(def.name).get<std::string>();
      std::ifstream ch(fs::path(dir) / rel);
      if (!ch) throw ArchiveIoError("cannot open channel raster '" + rel + "'");
      RasterGrid grid = parse_ascii_grid(ch, spec.crs_tag);
      if (!grid.spec.same_grid(spec))
        throw ArchiveIoError("channel raster '" + rel + "' grid mismatch");
      stack.channels.push_back(std::move(grid));
    }
    if (js.contains("station_weather"))
      for (const auto& [name, value] : js.at("station_weather").items())
        stack.station_weather[name] = value.get<double>();
    if (js.contains("normalization"))
      for (const auto& [name, info] : js.at("normalization").items())
        stack.normalization[name] = {info.at("lo").get<double>(),
                                     info.at("hi").get<double>()};
    stack.normalized = js.value("normalized", false);
    archive.stacks.push_back(std::move(stack));
  }
  archive.validate();
  return archive;
}

}  // namespace wildfire
