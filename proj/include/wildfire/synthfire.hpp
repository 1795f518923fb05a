#pragma once

// Seeded cellular-automaton fire generator used as end-to-end ground truth.
// An unburned pixel with burning neighbors ignites with probability
//   1 - prod_i (1 - min(1, p0 * flammability * (1 + alpha * max(0, cos t_i))))
// over its burning 8-neighbors, where t_i is the angle between the wind
// vector and the neighbor->pixel direction. Burning pixels stay burning and
// water never ignites. This is a test harness with controllable wind and
// fuel structure, not a physical spread model.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildfire/rng.hpp"
#include "wildfire/stacking.hpp"

namespace wildfire {

struct SynthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthParams {
  int width = 128, height = 128;
  double pixel_size = 30.0;
  std::string crs_tag = "synth";
  double p0 = 0.55;             // base per-neighbor ignition probability
  double wind_speed = 5.0;      // m/s, written into the weather channels
  double wind_direction = 90.0; // degrees clockwise from north, blowing toward
  double wind_gain = 0.8;       // alpha
  double temperature = 25.0;    // Celsius, constant weather channel value
  double precipitation = 0.0;   // mm
  // land-cover class -> flammability multiplier; class 0 is water
  std::map<int, double> flammability = {{0, 0.0}, {1, 0.5}, {2, 1.0}, {3, 1.4}};
  double water_fraction = 0.08;
  int land_cover_block = 8;     // side of the blocky class patches, pixels
  int elevation_block = 16;     // lattice spacing of the smooth elevation field
  double elevation_relief = 400.0;
  int days = 10;
  int steps_per_day = 1;
  int ignition_radius = 2;
  uint64_t seed = 0;
  std::string fire_id = "synth";
  UtcTime start_time = 1596240000;  // 2020-08-01T00:00:00Z
  LayerSchema schema = default_schema();

  void validate() const {
    if (width < 8 || height < 8) throw SynthError("grid must be at least 8x8");
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw SynthError("p0 must be in [0,1]");
    for (const auto& [cls, mult] : flammability)
      if (mult < 0) throw SynthError("flammability multipliers must be >= 0");
    if (days < 2) throw SynthError("days must be >= 2");
    if (steps_per_day < 1) throw SynthError("steps_per_day must be >= 1");
    schema.validate();
  }

  GridSpec grid() const {
    GridSpec s;
    s.origin_x = 0;
    s.origin_y = height * pixel_size;
    s.pixel_size = pixel_size;
    s.width = width;
    s.height = height;
    s.crs_tag = crs_tag;
    return s;
  }
};

struct SynthTerrain {
  RasterGrid land_cover;
  RasterGrid elevation;
  std::map<std::string, RasterGrid> spectra;  // red, green, blue, infrared
};

namespace synth_detail {

// Seed streams by purpose so adding a consumer never shifts another's draws.
enum : uint64_t { kStreamLandCover = 1, kStreamElevation = 2, kStreamSpectra = 3,
                  kStreamIgnition = 4, kStreamSteps = 5 };

inline double flammability_of(const SynthParams& p, double land_class) {
  auto it = p.flammability.find(static_cast<int>(land_class));
  return it == p.flammability.end() ? 1.0 : it->second;
}

}  // namespace synth_detail

// Static channels: blocky land-cover classes, a smooth bilinear elevation
// field, spectra as deterministic functions of class and elevation plus
// seeded noise.
inline SynthTerrain generate_terrain(const SynthParams& params) {
  params.validate();
  GridSpec spec = params.grid();
  Rng base(params.seed);
  SynthTerrain t{RasterGrid(spec), RasterGrid(spec), {}};

  // Land cover: coarse blocks, water_fraction of them water (class 0),
  // the rest uniform over classes 1..3.
  {
    Rng rng = base.stream(synth_detail::kStreamLandCover);
    int bw = (params.width + params.land_cover_block - 1) / params.land_cover_block;
    int bh = (params.height + params.land_cover_block - 1) / params.land_cover_block;
    std::vector<int> classes(static_cast<size_t>(bw) * bh);
    for (auto& c : classes) {
      double u = rng.uniform_real();
      c = u < params.water_fraction ? 0 : 1 + static_cast<int>(rng.uniform_below(3));
    }
    for (int y = 0; y < params.height; ++y)
      for (int x = 0; x < params.width; ++x)
        t.land_cover.at(y, x) = classes[static_cast<size_t>(y / params.land_cover_block) *
                                            bw + x / params.land_cover_block];
  }

  // Elevation: gaussian lattice, bilinear interpolation, one octave of
  // half-amplitude detail.
  {
    Rng rng = base.stream(synth_detail::kStreamElevation);
    auto lattice_field = [&](int block, double amplitude) {
      int lw = params.width / block + 2, lh = params.height / block + 2;
      std::vector<double> lattice(static_cast<size_t>(lw) * lh);
      for (auto& v : lattice) v = rng.normal() * amplitude;
      return [=](int y, int x) {
        double fy = static_cast<double>(y) / block, fx = static_cast<double>(x) / block;
        int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
        double ty = fy - iy, tx = fx - ix;
        auto at = [&](int yy, int xx) { return lattice[static_cast<size_t>(yy) * lw + xx]; };
        return (1 - ty) * ((1 - tx) * at(iy, ix) + tx * at(iy, ix + 1)) +
               ty * ((1 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1));
      };
    };
    auto coarse = lattice_field(params.elevation_block, params.elevation_relief);
    auto fine = lattice_field(std::max(2, params.elevation_block / 4),
                              params.elevation_relief / 4);
    for (int y = 0; y < params.height; ++y)
      for (int x = 0; x < params.width; ++x)
        t.elevation.at(y, x) = 1000.0 + coarse(y, x) + fine(y, x);
  }

  // Spectra: class- and elevation-driven with per-channel noise.
  {
    Rng rng = base.stream(synth_detail::kStreamSpectra);
    const char* names[] = {"red", "green", "blue", "infrared"};
    double class_gain[4] = {18.0, 25.0, 8.0, 40.0};
    double elev_gain[4] = {0.02, 0.01, 0.005, 0.03};
    for (int ch = 0; ch < 4; ++ch) {
      RasterGrid g(spec);
      for (int y = 0; y < params.height; ++y)
        for (int x = 0; x < params.width; ++x) {
          double cls = t.land_cover.at(y, x);
          double base_v = 40.0 + class_gain[ch] * cls +
                          elev_gain[ch] * t.elevation.at(y, x);
          g.at(y, x) = base_v + rng.normal() * 2.0;
        }
      t.spectra[names[ch]] = std::move(g);
    }
  }
  return t;
}

// One CA step. Scan order: rows top to bottom with per-row substreams
// (stream id = row), columns left to right, one uniform draw per non-water,
// non-burning pixel that has at least one burning neighbor.
inline RasterGrid step_fire(const RasterGrid& mask, const RasterGrid& land_cover,
                            const SynthParams& params, uint64_t day_seed) {
  const GridSpec& spec = mask.spec;
  RasterGrid next = mask;
  Rng day(day_seed);
  double wind_rad = params.wind_direction * M_PI / 180.0;
  double wx = std::sin(wind_rad), wy = std::cos(wind_rad);  // toward, map frame
  static const int off[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                {0, 1},  {1, -1}, {1, 0},  {1, 1}};
  for (int y = 0; y < spec.height; ++y) {
    Rng row_rng = day.stream(static_cast<uint64_t>(y));
    for (int x = 0; x < spec.width; ++x) {
      if (mask.at(y, x) != 0.0) continue;
      double flam = synth_detail::flammability_of(params, land_cover.at(y, x));
      if (flam <= 0.0) continue;  // water and other non-fuel never ignite
      double survive = 1.0;
      bool any_burning = false;
      for (const auto& o : off) {
        int ny = y + o[0], nx = x + o[1];
        if (ny < 0 || ny >= spec.height || nx < 0 || nx >= spec.width) continue;
        if (mask.at(ny, nx) == 0.0) continue;
        any_burning = true;
        // neighbor -> pixel direction in map coordinates (rows grow south)
        double dx = static_cast<double>(x - nx);
        double dy = static_cast<double>(-(y - ny));
        double norm = std::sqrt(dx * dx + dy * dy);
        double cos_t = (dx * wx + dy * wy) / norm;
        double p = std::min(1.0, params.p0 * flam *
                                     (1.0 + params.wind_gain * std::max(0.0, cos_t)));
        survive *= 1.0 - p;
      }
      if (!any_burning) continue;
      double ignite_p = 1.0 - survive;
      if (row_rng.uniform_real() < ignite_p) next.at(y, x) = 1.0;
    }
  }
  return next;
}

// Day-indexed stacks 24h apart: static channels frozen, weather channels
// from the configured wind, fire mask evolved by the CA. Normalized like
// every other archive.
inline FireEventArchive generate_archive(const SynthParams& params) {
  params.validate();
  GridSpec spec = params.grid();
  SynthTerrain terrain = generate_terrain(params);
  Rng base(params.seed);

  // Ignition: first seeded disk position whose center is flammable.
  RasterGrid mask(spec, 0.0);
  {
    Rng rng = base.stream(synth_detail::kStreamIgnition);
    int cx = 0, cy = 0;
    bool found = false;
    for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
      cx = static_cast<int>(rng.uniform_below(spec.width));
      cy = static_cast<int>(rng.uniform_below(spec.height));
      found = synth_detail::flammability_of(params, terrain.land_cover.at(cy, cx)) > 0;
    }
    if (!found) throw SynthError("no flammable ignition site found");
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        double d2 = double(x - cx) * (x - cx) + double(y - cy) * (y - cy);
        if (d2 <= double(params.ignition_radius) * params.ignition_radius &&
            synth_detail::flammability_of(params, terrain.land_cover.at(y, x)) > 0)
          mask.at(y, x) = 1.0;
      }
  }

  WeatherRecord weather;
  weather.wind_speed = params.wind_speed;
  weather.wind_direction = params.wind_direction;
  weather.temperature = params.temperature;
  weather.precipitation = params.precipitation;

  FireEventArchive archive;
  archive.fire_id = params.fire_id;
  Rng steps = base.stream(synth_detail::kStreamSteps);
  for (int day = 0; day < params.days; ++day) {
    if (day > 0) {
      for (int sub = 0; sub < params.steps_per_day; ++sub) {
        uint64_t step_seed =
            steps.stream(static_cast<uint64_t>(day) * params.steps_per_day + sub).next_u64();
        mask = step_fire(mask, terrain.land_cover, params, step_seed);
      }
    }
    LayerStack stack;
    stack.timestamp = params.start_time + static_cast<int64_t>(day) * kSecondsPerDay;
    stack.spec = spec;
    stack.schema = params.schema;
    for (const auto& def : params.schema.layers) {
      switch (def.kind) {
        case LayerKind::fire_mask:
          stack.channels.push_back(mask);
          break;
        case LayerKind::weather_constant: {
          double value = 0;
          if (!stacking_detail::weather_channel_value(def.name, weather, value))
            throw SynthError("unknown weather channel '" + def.name + "'");
          stack.channels.push_back(RasterGrid(spec, value));
          stack.station_weather[def.name] = value;
          break;
        }
        case LayerKind::categorical:
          stack.channels.push_back(terrain.land_cover);
          break;
        case LayerKind::elevation:
          stack.channels.push_back(terrain.elevation);
          break;
        case LayerKind::spectral: {
          auto it = terrain.spectra.find(def.name);
          if (it == terrain.spectra.end())
            throw SynthError("no synthetic source for spectral channel '" + def.name + "'");
          stack.channels.push_back(it->second);
          break;
        }
      }
    }
    archive.stacks.push_back(std::move(stack));
  }
  normalize_archive(archive.stacks);
  archive.validate();
  return archive;
}

// ---------------------------------------------------------------------------
// JSON config (the cmd_synth external interface)

inline SynthParams synth_params_from_json(const nlohmann::json& j) {
  SynthParams p;
  if (j.contains("width")) p.width = j.at("width").get<int>();
  if (j.contains("height")) p.height = j.at("height").get<int>();
  if (j.contains("pixel_size")) p.pixel_size = j.at("pixel_size").get<double>();
  if (j.contains("crs_tag")) p.crs_tag = j.at("crs_tag").get<std::string>();
  if (j.contains("p0")) p.p0 = j.at("p0").get<double>();
  if (j.contains("wind_speed")) p.wind_speed = j.at("wind_speed").get<double>();
  if (j.contains("wind_direction")) p.wind_direction = j.at("wind_direction").get<double>();
  if (j.contains("wind_gain")) p.wind_gain = j.at("wind_gain").get<double>();
  if (j.contains("temperature")) p.temperature = j.at("temperature").get<double>();
  if (j.contains("precipitation")) p.precipitation = j.at("precipitation").get<double>();
  if (j.contains("water_fraction")) p.water_fraction = j.at("water_fraction").get<double>();
  if (j.contains("land_cover_block")) p.land_cover_block = j.at("land_cover_block").get<int>();
  if (j.contains("elevation_block")) p.elevation_block = j.at("elevation_block").get<int>();
  if (j.contains("elevation_relief"))
    p.elevation_relief = j.at("elevation_relief").get<double>();
  if (j.contains("days")) p.days = j.at("days").get<int>();
  if (j.contains("steps_per_day")) p.steps_per_day = j.at("steps_per_day").get<int>();
  if (j.contains("ignition_radius")) p.ignition_radius = j.at("ignition_radius").get<int>();
  if (j.contains("seed")) p.seed = j.at("seed").get<uint64_t>();
  if (j.contains("fire_id")) p.fire_id = j.at("fire_id").get<std::string>();
  if (j.contains("start_time"))
    p.start_time = parse_iso8601(j.at("start_time").get<std::string>());
  if (j.contains("flammability")) {
    p.flammability.clear();
    for (const auto& [key, value] : j.at("flammability").items())
      p.flammability[std::stoi(key)] = value.get<double>();
  }
  if (j.contains("schema")) {
    LayerSchema schema;
    for (const auto& item : j.at("schema"))
      schema.layers.push_back(
          {item.at("name").get<std::string>(),
           layer_kind_from_string(item.at("kind").get<std::string>())});
    p.schema = schema;
  }
  p.validate();
  return p;
}

}  // namespace wildfire
