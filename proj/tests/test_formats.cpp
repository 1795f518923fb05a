#include <catch2/catch_amalgamated.hpp>

#include "support/tiff_writer.hpp"
#include "wildfire/geojson.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/tiff.hpp"

using namespace wildfire;

TEST_CASE("tiff: float32 little-endian round trip") {
  std::vector<double> vals = {0, 1, 2, 3};
  testtiff::Options opt;
  opt.origin_y = 60.0;
  auto bytes = testtiff::write_tiff(vals, 2, 2, opt);
  RasterGrid g = parse_geotiff_minimal(bytes);
  REQUIRE(g.spec.width == 2);
  REQUIRE(g.spec.height == 2);
  REQUIRE(g.spec.pixel_size == 30.0);
  REQUIRE(g.spec.origin_x == 0.0);
  REQUIRE(g.spec.origin_y == 60.0);
  REQUIRE(g.values == vals);
}

TEST_CASE("tiff: big-endian variant reads identically") {
  std::vector<double> vals = {0, 1, 2, 3};
  testtiff::Options le, be;
  le.origin_y = be.origin_y = 60.0;
  be.big_endian = true;
  RasterGrid a = parse_geotiff_minimal(testtiff::write_tiff(vals, 2, 2, le));
  RasterGrid b = parse_geotiff_minimal(testtiff::write_tiff(vals, 2, 2, be));
  REQUIRE(a.values == b.values);
  REQUIRE(a.spec.same_grid(b.spec));
}

TEST_CASE("tiff: write-then-read identity across sample types and orders") {
  Rng rng(31);
  for (auto sample : {testtiff::Sample::U8, testtiff::Sample::U16, testtiff::Sample::F32}) {
    for (bool big : {false, true}) {
      int w = 3 + static_cast<int>(rng.uniform_below(6));
      int h = 2 + static_cast<int>(rng.uniform_below(6));
      std::vector<double> vals(static_cast<size_t>(w) * h);
      for (auto& v : vals) {
        switch (sample) {
          case testtiff::Sample::U8: v = rng.uniform_below(256); break;
          case testtiff::Sample::U16: v = rng.uniform_below(65536); break;
          case testtiff::Sample::F32: v = static_cast<float>(rng.uniform_real() * 4e3); break;
        }
      }
      testtiff::Options opt;
      opt.sample = sample;
      opt.big_endian = big;
      opt.pixel_size = 30.0;
      opt.origin_x = 499980.0;
      opt.origin_y = 4305000.0;
      RasterGrid g = parse_geotiff_minimal(testtiff::write_tiff(vals, w, h, opt));
      REQUIRE(g.spec.width == w);
      REQUIRE(g.spec.height == h);
      REQUIRE(g.spec.origin_x == opt.origin_x);
      REQUIRE(g.spec.origin_y == opt.origin_y);
      REQUIRE(g.values == vals);
    }
  }
}

TEST_CASE("tiff: compressed file rejected by name") {
  testtiff::Options opt;
  opt.compression = 5;  // LZW
  auto bytes = testtiff::write_tiff({0, 1, 2, 3}, 2, 2, opt);
  REQUIRE_THROWS_AS(parse_geotiff_minimal(bytes), TiffUnsupported);
  REQUIRE_THROWS_WITH(parse_geotiff_minimal(bytes),
                      Catch::Matchers::ContainsSubstring("compression"));
}

TEST_CASE("tiff: multi-band rejected") {
  testtiff::Options opt;
  opt.samples_per_pixel = 3;
  auto bytes = testtiff::write_tiff({0, 1, 2, 3}, 2, 2, opt);
  REQUIRE_THROWS_AS(parse_geotiff_minimal(bytes), TiffUnsupported);
}

TEST_CASE("tiff: missing geotags rejected") {
  testtiff::Options opt;
  opt.include_geotags = false;
  auto bytes = testtiff::write_tiff({0, 1, 2, 3}, 2, 2, opt);
  REQUIRE_THROWS_WITH(parse_geotiff_minimal(bytes),
                      Catch::Matchers::ContainsSubstring("geotags"));
}

TEST_CASE("tiff: garbage rejected") {
  std::vector<uint8_t> junk = {'P', 'K', 3, 4, 9, 9};
  REQUIRE_THROWS_AS(parse_geotiff_minimal(junk), TiffError);
}

TEST_CASE("geojson: single square polygon") {
  std::string text = R"({
    "type": "FeatureCollection",
    "features": [{
      "type": "Feature",
      "properties": {"timestamp": "2014-09-13T00:00:00Z"},
      "geometry": {"type": "Polygon",
        "coordinates": [[[0,0],[60,0],[60,60],[0,60],[0,0]]]}
    }]
  })";
  auto polys = parse_perimeter_geojson(text);
  REQUIRE(polys.size() == 1);
  REQUIRE(polys[0].rings.size() == 1);
  REQUIRE(polys[0].rings[0].size() == 5);
  REQUIRE(polys[0].timestamp == parse_iso8601("2014-09-13T00:00:00Z"));
}

TEST_CASE("geojson: multipolygon splits into parts") {
  std::string text = R"({
    "type": "FeatureCollection",
    "features": [{
      "type": "Feature",
      "properties": {"timestamp": "2014-09-13T00:00:00Z"},
      "geometry": {"type": "MultiPolygon",
        "coordinates": [
          [[[0,0],[10,0],[10,10],[0,10],[0,0]]],
          [[[20,20],[30,20],[30,30],[20,30],[20,20]]]
        ]}
    }]
  })";
  auto polys = parse_perimeter_geojson(text);
  REQUIRE(polys.size() == 2);
  REQUIRE(polys[0].timestamp == polys[1].timestamp);
}

TEST_CASE("geojson: results sorted by timestamp") {
  std::string text = R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {"timestamp": "2014-09-15T00:00:00Z"},
       "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
      {"type": "Feature", "properties": {"timestamp": "2014-09-13T00:00:00Z"},
       "geometry": {"type": "Polygon", "coordinates": [[[0,0],[2,0],[2,2],[0,2],[0,0]]]}}
    ]
  })";
  auto polys = parse_perimeter_geojson(text);
  REQUIRE(polys.size() == 2);
  REQUIRE(polys[0].timestamp < polys[1].timestamp);
}

TEST_CASE("geojson: unclosed ring names the feature") {
  std::string text = R"({
    "type": "FeatureCollection",
    "features": [{
      "type": "Feature",
      "properties": {"timestamp": "2014-09-13T00:00:00Z"},
      "geometry": {"type": "Polygon",
        "coordinates": [[[0,0],[60,0],[60,60],[0,60],[1,1]]]}
    }]
  })";
  REQUIRE_THROWS_WITH(parse_perimeter_geojson(text),
                      Catch::Matchers::ContainsSubstring("feature 0"));
}

TEST_CASE("geojson: missing timestamp rejected") {
  std::string text = R"({
    "type": "FeatureCollection",
    "features": [{
      "type": "Feature",
      "properties": {},
      "geometry": {"type": "Polygon",
        "coordinates": [[[0,0],[60,0],[60,60],[0,60],[0,0]]]}
    }]
  })";
  REQUIRE_THROWS_WITH(parse_perimeter_geojson(text),
                      Catch::Matchers::ContainsSubstring("timestamp"));
}

TEST_CASE("geojson: short ring rejected") {
  std::string text = R"({
    "type": "FeatureCollection",
    "features": [{
      "type": "Feature",
      "properties": {"timestamp": "2014-09-13T00:00:00Z"},
      "geometry": {"type": "Polygon", "coordinates": [[[0,0],[60,0],[0,0]]]}
    }]
  })";
  REQUIRE_THROWS_WITH(parse_perimeter_geojson(text),
                      Catch::Matchers::ContainsSubstring("fewer than 4"));
}
