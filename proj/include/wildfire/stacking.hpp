#pragma once

// Per-datetime tensor assembly. A LayerStack is the unit the sampler and
// the network consume: all schema channels geo-synchronized onto one grid,
// capped with the binary fire mask for that report time, stamped with the
// perimeter report datetime. Scene selection enforces the 16-day lookback
// (never imagery after the report), archives keep at most one stack per
// 24-hour window, and channels are normalized with statistics taken over
// the whole archive so inference reuses identical scaling.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wildfire/geo.hpp"
#include "wildfire/rasterize.hpp"
#include "wildfire/regrid.hpp"
#include "wildfire/tensor.hpp"
#include "wildfire/timeutil.hpp"

namespace wildfire {

struct StackingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int64_t kSceneLookbackSeconds = 16 * kSecondsPerDay;

enum class LayerKind { spectral, categorical, elevation, weather_constant, fire_mask };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::spectral: return "spectral";
    case LayerKind::categorical: return "categorical";
    case LayerKind::elevation: return "elevation";
    case LayerKind::weather_constant: return "weather_constant";
    default: return "fire_mask";
  }
}

inline LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "spectral") return LayerKind::spectral;
  if (s == "categorical") return LayerKind::categorical;
  if (s == "elevation") return LayerKind::elevation;
  if (s == "weather_constant") return LayerKind::weather_constant;
  if (s == "fire_mask") return LayerKind::fire_mask;
  throw StackingError("unknown layer kind '" + s + "'");
}

struct LayerDef {
  std::string name;
  LayerKind kind;
  bool operator==(const LayerDef&) const = default;
};

struct LayerSchema {
  std::vector<LayerDef> layers;

  int channel_count() const { return static_cast<int>(layers.size()); }

  void validate() const {
    if (layers.size() < 2) throw StackingError("schema needs at least 2 channels");
    int masks = 0;
    for (size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].kind == LayerKind::fire_mask) ++masks;
      for (size_t j = i + 1; j < layers.size(); ++j)
        if (layers[i].name == layers[j].name)
          throw StackingError("duplicate layer name '" + layers[i].name + "'");
    }
    if (masks != 1) throw StackingError("schema must have exactly one fire_mask layer");
  }

  int fire_mask_index() const {
    for (size_t i = 0; i < layers.size(); ++i)
      if (layers[i].kind == LayerKind::fire_mask) return static_cast<int>(i);
    throw StackingError("schema has no fire_mask layer");
  }

  bool operator==(const LayerSchema&) const = default;
};

// The 8-channel default; wind direction is available but not part of it.
inline LayerSchema default_schema() {
  return LayerSchema{{
      {"fire_mask", LayerKind::fire_mask},
      {"red", LayerKind::spectral},
      {"green", LayerKind::spectral},
      {"blue", LayerKind::spectral},
      {"infrared", LayerKind::spectral},
      {"land_cover", LayerKind::categorical},
      {"elevation", LayerKind::elevation},
      {"wind_speed", LayerKind::weather_constant},
  }};
}

struct DatedScene {
  UtcTime timestamp = 0;
  std::map<std::string, RasterGrid> layers;
};

struct WeatherRecord {
  UtcTime timestamp = 0;
  double wind_speed = 0;      // m/s
  double wind_direction = 0;  // degrees clockwise from north, blowing toward
  double temperature = 0;     // Celsius
  double precipitation = 0;   // mm
};

struct WeatherStation {
  std::string id;
  double x = 0, y = 0;
  std::vector<WeatherRecord> records;

  void validate() const {
    for (size_t i = 1; i < records.size(); ++i)
      if (records[i].timestamp <= records[i - 1].timestamp)
        throw StackingError("station '" + id + "': timestamps not strictly increasing");
  }

  // Latest record at or before t, mirroring the imagery prior-never-after rule.
  const WeatherRecord* latest_at_or_before(UtcTime t) const {
    const WeatherRecord* best = nullptr;
    for (const auto& r : records) {
      if (r.timestamp > t) break;
      best = &r;
    }
    return best;
  }
};

// Min-max style scaling record: normalized = (raw - lo) / (hi - lo).
struct NormalizationInfo {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const NormalizationInfo&) const = default;
};

struct LayerStack {
  UtcTime timestamp = 0;
  GridSpec spec;
  LayerSchema schema;
  std::vector<RasterGrid> channels;  // aligned with schema.layers
  std::map<std::string, double> station_weather;  // raw readings used
  std::map<std::string, NormalizationInfo> normalization;  // set once normalized
  bool normalized = false;

  const RasterGrid& channel(const std::string& name) const {
    for (size_t i = 0; i < channels.size(); ++i)
      if (schema.layers[i].name == name) return channels[i];
    throw StackingError("no channel named '" + name + "'");
  }

  const RasterGrid& fire_mask() const { return channels[schema.fire_mask_index()]; }

  void validate() const {
    schema.validate();
    if (channels.size() != schema.layers.size())
      throw StackingError("channel count does not match schema");
    for (const auto& ch : channels)
      if (!ch.spec.same_grid(spec)) throw StackingError("channel grid mismatch");
    for (double v : fire_mask().values)
      if (v != 0.0 && v != 1.0) throw StackingError("fire mask not binary");
  }

  Tensor3<float> to_tensor() const {
    Tensor3<float> t(spec.height, spec.width, schema.channel_count());
    for (int c = 0; c < t.channels; ++c) {
      const auto& vals = channels[c].values;
      for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x)
          t.at(y, x, c) = static_cast<float>(vals[static_cast<size_t>(y) * t.width + x]);
    }
    return t;
  }
};

struct FireEventArchive {
  std::string fire_id;
  std::vector<LayerStack> stacks;

  void validate() const {
    for (size_t i = 1; i < stacks.size(); ++i)
      if (stacks[i].timestamp - stacks[i - 1].timestamp < kSecondsPerDay)
        throw StackingError("archive stacks closer than 24h");
    for (const auto& s : stacks) s.validate();
  }
};

// ---------------------------------------------------------------------------
// Scene and record selection

// Latest scene within [t - 16 days, t]; nullptr means the perimeter must be
// excluded. Scenes must be sorted ascending by timestamp.
inline const DatedScene* select_scene(const std::vector<DatedScene>& scenes,
                                      UtcTime perimeter_time) {
  const DatedScene* best = nullptr;
  for (const auto& s : scenes) {
    if (s.timestamp > perimeter_time) break;
    if (s.timestamp >= perimeter_time - kSceneLookbackSeconds) best = &s;
  }
  return best;
}

// Greedy 24h filter over ascending timestamps: keep the first element, then
// each element at least 24h after the last kept one. Returns kept indices.
inline std::vector<size_t> filter_24h_indices(const std::vector<UtcTime>& times) {
  std::vector<size_t> kept;
  for (size_t i = 0; i < times.size(); ++i) {
    if (kept.empty() || times[i] - times[kept.back()] >= kSecondsPerDay)
      kept.push_back(i);
  }
  return kept;
}

inline std::vector<LayerStack> filter_24h(const std::vector<LayerStack>& stacks) {
  std::vector<UtcTime> times;
  times.reserve(stacks.size());
  for (const auto& s : stacks) times.push_back(s.timestamp);
  std::vector<LayerStack> out;
  for (size_t i : filter_24h_indices(times)) out.push_back(stacks[i]);
  return out;
}

inline const WeatherStation* nearest_station(const std::vector<WeatherStation>& stations,
                                             double x, double y) {
  if (stations.empty()) throw StackingError("nearest_station: no stations");
  const WeatherStation* best = nullptr;
  double best_d2 = 0;
  for (const auto& s : stations) {
    double dx = s.x - x, dy = s.y - y;
    double d2 = dx * dx + dy * dy;
    if (!best || d2 < best_d2 || (d2 == best_d2 && s.id < best->id)) {
      best = &s;
      best_d2 = d2;
    }
  }
  return best;
}

inline RasterGrid weather_constant_layer(double value, const GridSpec& spec) {
  if (!std::isfinite(value)) throw StackingError("weather value not finite");
  return RasterGrid(spec, value);
}

// ---------------------------------------------------------------------------
// Stack construction

namespace stacking_detail {

inline bool weather_channel_value(const std::string& name, const WeatherRecord& rec,
                                  double& out) {
  if (name == "wind_speed") out = rec.wind_speed;
  else if (name == "wind_direction") out = rec.wind_direction;
  else if (name == "wind_dir_sin") out = std::sin(rec.wind_direction * M_PI / 180.0);
  else if (name == "wind_dir_cos") out = std::cos(rec.wind_direction * M_PI / 180.0);
  else if (name == "temperature") out = rec.temperature;
  else if (name == "precipitation") out = rec.precipitation;
  else return false;
  return true;
}

// Fixed physical scaling ranges for weather channels.
inline NormalizationInfo weather_norm_range(const std::string& name) {
  if (name == "wind_speed") return {0.0, 30.0};
  if (name == "wind_direction") return {0.0, 360.0};
  if (name == "wind_dir_sin" || name == "wind_dir_cos") return {-1.0, 1.0};
  if (name == "temperature") return {-50.0, 50.0};
  if (name == "precipitation") return {0.0, 100.0};
  return {0.0, 1.0};
}

}  // namespace stacking_detail

// Build one raw (un-normalized) stack for the report time of `perimeters`
// (all parts share it). The scene must have been chosen by select_scene;
// the station may be null when the schema has no weather channels.
inline LayerStack build_stack(const DatedScene& scene,
                              const std::vector<PerimeterPolygon>& perimeters,
                              const WeatherStation* station,
                              const LayerSchema& schema, const GridSpec& spec) {
  schema.validate();
  spec.validate();
  if (perimeters.empty()) throw StackingError("build_stack: no perimeter parts");
  UtcTime t = perimeters.front().timestamp;
  for (const auto& p : perimeters)
    if (p.timestamp != t) throw StackingError("build_stack: mixed perimeter timestamps");

  LayerStack stack;
  stack.timestamp = t;
  stack.spec = spec;
  stack.schema = schema;

  const WeatherRecord* record = nullptr;
  if (station) {
    record = station->latest_at_or_before(t);
  }

  for (const auto& def : schema.layers) {
    if (def.kind == LayerKind::fire_mask) {
      RasterGrid mask(spec, 0.0);
      for (const auto& poly : perimeters) {
        RasterGrid part = rasterize_polygon(poly, spec);
        for (size_t i = 0; i < mask.values.size(); ++i)
          if (part.values[i] != 0.0) mask.values[i] = 1.0;
      }
      stack.channels.push_back(std::move(mask));
      continue;
    }
    if (def.kind == LayerKind::weather_constant) {
      double value = 0;
      if (!record)
        throw StackingError("channel '" + def.name +
                            "': no weather record at or before stack time");
      if (!stacking_detail::weather_channel_value(def.name, *record, value))
        throw StackingError("channel '" + def.name + "': unknown weather quantity");
      stack.channels.push_back(weather_constant_layer(value, spec));
      stack.station_weather[def.name] = value;
      continue;
    }
    auto it = scene.layers.find(def.name);
    if (it == scene.layers.end())
      throw StackingError("channel '" + def.name + "' missing from scene");
    stack.channels.push_back(resample_to_grid(it->second, spec));
  }
  return stack;
}

inline LayerStack build_stack(const DatedScene& scene, const PerimeterPolygon& perimeter,
                              const WeatherStation* station, const LayerSchema& schema,
                              const GridSpec& spec) {
  return build_stack(scene, std::vector<PerimeterPolygon>{perimeter}, station, schema, spec);
}

// Normalize all channels in place using statistics over the whole archive:
// spectral/elevation min-max; categorical divided by its max class code;
// weather channels by fixed physical ranges; fire mask untouched. Nodata
// pixels become 0 after stats are computed.
inline void normalize_archive(std::vector<LayerStack>& stacks) {
  if (stacks.empty()) return;
  const LayerSchema& schema = stacks.front().schema;
  for (size_t ci = 0; ci < schema.layers.size(); ++ci) {
    const LayerDef& def = schema.layers[ci];
    NormalizationInfo info;
    switch (def.kind) {
      case LayerKind::fire_mask:
        info = {0.0, 1.0};
        break;
      case LayerKind::weather_constant:
        info = stacking_detail::weather_norm_range(def.name);
        break;
      case LayerKind::categorical: {
        double hi = 0.0;
        for (const auto& s : stacks)
          for (double v : s.channels[ci].values)
            if (!s.channels[ci].is_nodata(v)) hi = std::max(hi, v);
        info = {0.0, hi};
        break;
      }
      default: {  // spectral, elevation: archive-wide min-max
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& s : stacks) {
          for (double v : s.channels[ci].values) {
            if (s.channels[ci].is_nodata(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
        if (!(lo < hi)) { lo = 0.0; hi = 0.0; }  // constant or empty channel
        info = {lo, hi};
        break;
      }
    }
    double scale = (info.hi > info.lo) ? 1.0 / (info.hi - info.lo) : 0.0;
    for (auto& s : stacks) {
      if (def.kind != LayerKind::fire_mask) {
        for (double& v : s.channels[ci].values) {
          if (s.channels[ci].is_nodata(v)) v = 0.0;
          else v = (v - info.lo) * scale;
        }
        s.channels[ci].nodata.reset();
      }
      s.normalization[def.name] = info;
      s.normalized = true;
    }
  }
}

// Full preprocessing chain: per-report stack construction (dropping
// perimeters with no eligible scene), the 24h filter, then archive-wide
// normalization. Fails when fewer than 2 stacks survive, since no
// (t, t+next) training pair can be formed.
inline FireEventArchive build_archive(const std::vector<PerimeterPolygon>& perimeters,
                                      const std::vector<DatedScene>& scenes,
                                      const std::vector<WeatherStation>& stations,
                                      const LayerSchema& schema, const GridSpec& spec,
                                      const std::string& fire_id = "") {
  schema.validate();
  spec.validate();
  std::vector<DatedScene> sorted_scenes = scenes;
  std::stable_sort(sorted_scenes.begin(), sorted_scenes.end(),
                   [](const DatedScene& a, const DatedScene& b) {
                     return a.timestamp < b.timestamp;
                   });
  std::vector<PerimeterPolygon> sorted_perims = perimeters;
  std::stable_sort(sorted_perims.begin(), sorted_perims.end(),
                   [](const PerimeterPolygon& a, const PerimeterPolygon& b) {
                     return a.timestamp < b.timestamp;
                   });

  bool needs_weather = false;
  for (const auto& def : schema.layers)
    if (def.kind == LayerKind::weather_constant) needs_weather = true;
  const WeatherStation* station = nullptr;
  if (needs_weather) {
    double cx = spec.origin_x + spec.width * spec.pixel_size / 2.0;
    double cy = spec.origin_y - spec.height * spec.pixel_size / 2.0;
    station = nearest_station(stations, cx, cy);
  }

  FireEventArchive archive;
  archive.fire_id = fire_id;
  size_t i = 0;
  while (i < sorted_perims.size()) {
    size_t j = i;
    while (j < sorted_perims.size() &&
           sorted_perims[j].timestamp == sorted_perims[i].timestamp)
      ++j;
    const DatedScene* scene = select_scene(sorted_scenes, sorted_perims[i].timestamp);
    if (scene) {
      std::vector<PerimeterPolygon> group(sorted_perims.begin() + i,
                                          sorted_perims.begin() + j);
      archive.stacks.push_back(build_stack(*scene, group, station, schema, spec));
    }
    i = j;
  }
  archive.stacks = filter_24h(archive.stacks);
  if (archive.stacks.size() < 2)
    throw StackingError("fewer than 2 stacks survive selection; cannot form training pairs");
  normalize_archive(archive.stacks);
  archive.validate();
  return archive;
}

// ---------------------------------------------------------------------------
// Weather CSV: station_id,x,y,timestamp,wind_speed,wind_direction,temperature,precipitation

inline std::vector<WeatherStation> parse_weather_csv(std::istream& in) {
  std::vector<WeatherStation> stations;
  std::map<std::string, size_t> index;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
      fields.back().pop_back();
    if (!header_seen) {
      header_seen = true;
      if (!fields.empty() && fields[0] == "station_id") continue;  // header row
    }
    if (fields.size() != 8)
      throw StackingError("weather CSV line " + std::to_string(line_no) +
                          ": expected 8 fields, got " + std::to_string(fields.size()));
    WeatherRecord rec;
    double x, y;
    try {
      x = std::stod(fields[1]);
      y = std::stod(fields[2]);
      rec.timestamp = parse_iso8601(fields[3]);
      rec.wind_speed = std::stod(fields[4]);
      rec.wind_direction = std::stod(fields[5]);
      rec.temperature = std::stod(fields[6]);
      rec.precipitation = std::stod(fields[7]);
    } catch (const std::exception& e) {
      throw StackingError("weather CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = index.try_emplace(fields[0], stations.size());
    if (inserted) {
      WeatherStation st;
      st.id = fields[0];
      st.x = x;
      st.y = y;
      stations.push_back(std::move(st));
    }
    stations[it->second].records.push_back(rec);
  }
  for (auto& st : stations) {
    std::sort(st.records.begin(), st.records.end(),
              [](const WeatherRecord& a, const WeatherRecord& b) {
                return a.timestamp < b.timestamp;
              });
    st.validate();
  }
  return stations;
}

inline std::vector<WeatherStation> parse_weather_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_weather_csv(in);
}

}  // namespace wildfire
