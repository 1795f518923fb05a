#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "support/oracles.hpp"
#include "wildfire/ascii_grid.hpp"
#include "wildfire/geo.hpp"
#include "wildfire/rasterize.hpp"
#include "wildfire/regrid.hpp"
#include "wildfire/rng.hpp"

using namespace wildfire;

namespace {

GridSpec make_spec(double ox, double oy, double ps, int w, int h,
                   const std::string& crs = "") {
  GridSpec s;
  s.origin_x = ox;
  s.origin_y = oy;
  s.pixel_size = ps;
  s.width = w;
  s.height = h;
  s.crs_tag = crs;
  return s;
}

PerimeterPolygon square(double x0, double y0, double x1, double y1) {
  PerimeterPolygon p;
  p.rings = {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}};
  return p;
}

// Star-shaped polygon around (cx,cy): random radii at sorted angles.
// Always simple, arbitrary concavity.
PerimeterPolygon random_star(Rng& rng, double cx, double cy, double rmax) {
  int n = 3 + static_cast<int>(rng.uniform_below(9));
  std::vector<double> angles(n);
  for (auto& a : angles) a = rng.uniform_real() * 2.0 * 3.14159265358979;
  std::sort(angles.begin(), angles.end());
  PerimeterPolygon p;
  std::vector<std::pair<double, double>> ring;
  for (double a : angles) {
    double r = rmax * (0.2 + 0.8 * rng.uniform_real());
    ring.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
  }
  ring.push_back(ring.front());
  p.rings.push_back(ring);
  return p;
}

}  // namespace

TEST_CASE("geotransform round trip is exact in bounds") {
  Rng rng(99);
  double sizes[] = {30.0, 10.0, 2.5, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    double ps = sizes[rng.uniform_below(4)];
    GridSpec s = make_spec(rng.uniform_below(1000000) * 0.5,
                           rng.uniform_below(1000000) * 0.5, ps,
                           1 + static_cast<int>(rng.uniform_below(60)),
                           1 + static_cast<int>(rng.uniform_below(60)));
    for (int probe = 0; probe < 20; ++probe) {
      int col = static_cast<int>(rng.uniform_below(s.width));
      int row = static_cast<int>(rng.uniform_below(s.height));
      REQUIRE(s.col_of(s.center_x(col)) == col);
      REQUIRE(s.row_of(s.center_y(row)) == row);
    }
  }
}

TEST_CASE("ascii grid parses header and body") {
  std::string text =
      "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n"
      "1 2\n3 4\n";
  RasterGrid g = parse_ascii_grid(text);
  REQUIRE(g.spec.width == 2);
  REQUIRE(g.spec.height == 2);
  REQUIRE(g.spec.origin_x == 0.0);
  REQUIRE(g.spec.origin_y == 60.0);  // yllcorner + nrows*cellsize
  REQUIRE(g.at(0, 0) == 1.0);
  REQUIRE(g.at(0, 1) == 2.0);
  REQUIRE(g.at(1, 0) == 3.0);
  REQUIRE(g.at(1, 1) == 4.0);
  REQUIRE_FALSE(g.nodata.has_value());
}

TEST_CASE("ascii grid errors carry line numbers") {
  SECTION("wrong value count, too few") {
    std::string text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n1 2 3\n";
    REQUIRE_THROWS_WITH(parse_ascii_grid(text),
                        Catch::Matchers::ContainsSubstring("wrong value count"));
  }
  SECTION("wrong value count, too many") {
    std::string text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n1 2 3\n4 5\n";
    REQUIRE_THROWS_WITH(parse_ascii_grid(text),
                        Catch::Matchers::ContainsSubstring("wrong value count"));
  }
  SECTION("malformed header key") {
    std::string text = "ncols 2\nnrowz 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n1 2\n3 4\n";
    REQUIRE_THROWS_WITH(parse_ascii_grid(text),
                        Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("non-numeric body token") {
    std::string text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n1 2\n3 oops\n";
    REQUIRE_THROWS_WITH(parse_ascii_grid(text),
                        Catch::Matchers::ContainsSubstring("non-numeric"));
  }
}

TEST_CASE("ascii grid nodata flagging") {
  std::string text =
      "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n"
      "NODATA_value -9999\n1 -9999\n3 4\n";
  RasterGrid g = parse_ascii_grid(text);
  REQUIRE(g.nodata.has_value());
  REQUIRE(g.is_nodata_at(0, 1));
  REQUIRE_FALSE(g.is_nodata_at(0, 0));
}

TEST_CASE("ascii grid write/parse round trip") {
  GridSpec s = make_spec(1200.0, 4500.0, 30.0, 3, 2);
  RasterGrid g(s);
  g.nodata = -9999.0;
  double vals[] = {0.5, -9999.0, 3.25, 4.0, 5.125, -2.75};
  for (int i = 0; i < 6; ++i) g.values[i] = vals[i];
  RasterGrid h = parse_ascii_grid(write_ascii_grid(g));
  REQUIRE(h.spec.same_grid(g.spec));
  REQUIRE(h.values == g.values);
  REQUIRE(h.nodata == g.nodata);
}

TEST_CASE("rasterize: square covering every center") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  RasterGrid m = rasterize_polygon(square(-1, -1, 61, 61), s);
  for (double v : m.values) REQUIRE(v == 1.0);
}

TEST_CASE("rasterize: right triangle matches the center oracle") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  PerimeterPolygon tri;
  tri.rings = {{{0, 60}, {60, 60}, {0, 0}, {0, 60}}};
  RasterGrid m = rasterize_polygon(tri, s);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      REQUIRE(m.at(r, c) ==
              (oracle::point_in_polygon(tri, s.center_x(c), s.center_y(r)) ? 1.0 : 0.0));
}

TEST_CASE("rasterize: polygon outside the extent") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  RasterGrid m = rasterize_polygon(square(1000, 1000, 1100, 1100), s);
  for (double v : m.values) REQUIRE(v == 0.0);
}

TEST_CASE("rasterize: degenerate polygon warns and yields zeros") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  PerimeterPolygon degenerate;
  degenerate.rings = {{{5, 5}, {5, 5}, {5, 5}, {5, 5}}};
  bool warn = false;
  RasterGrid m = rasterize_polygon(degenerate, s, &warn);
  REQUIRE(warn);
  for (double v : m.values) REQUIRE(v == 0.0);
}

TEST_CASE("rasterize: holes are excluded") {
  GridSpec s = make_spec(0, 100, 10, 10, 10);
  PerimeterPolygon p = square(2, 2, 98, 98);
  p.rings.push_back({{32, 32}, {68, 32}, {68, 68}, {32, 68}, {32, 32}});
  RasterGrid m = rasterize_polygon(p, s);
  REQUIRE(m.at(0, 0) == 1.0);
  REQUIRE(m.at(5, 5) == 0.0);  // center (55,45) inside the hole
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c)
      REQUIRE(m.at(r, c) ==
              (oracle::point_in_polygon(p, s.center_x(c), s.center_y(r)) ? 1.0 : 0.0));
}

TEST_CASE("rasterize agrees with the oracle on 100 random polygons x grids") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    double ps = (trial % 2) ? 30.0 : 7.5;
    int w = 4 + static_cast<int>(rng.uniform_below(28));
    int h = 4 + static_cast<int>(rng.uniform_below(28));
    GridSpec s = make_spec(rng.uniform_real() * 100.0, rng.uniform_real() * 100.0,
                           ps, w, h);
    double cx = s.origin_x + rng.uniform_real() * w * ps;
    double cy = s.origin_y - rng.uniform_real() * h * ps;
    PerimeterPolygon poly = random_star(rng, cx, cy, (0.2 + rng.uniform_real()) * w * ps / 2);
    if (trial % 5 == 0)
      poly.rings.push_back(random_star(rng, cx, cy, 0.15 * w * ps / 2).rings[0]);

    RasterGrid m = rasterize_polygon(poly, s);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double x = s.center_x(c), y = s.center_y(r);
        if (oracle::distance_to_edges(poly, x, y) < 1e-9 * ps) continue;
        bool expect = oracle::point_in_polygon(poly, x, y);
        INFO("trial " << trial << " pixel (" << c << "," << r << ")");
        REQUIRE(m.at(r, c) == (expect ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("resample: identical spec is the identity") {
  GridSpec s = make_spec(500000, 4200000, 30, 4, 3, "utm10");
  RasterGrid g(s);
  Rng rng(5);
  for (auto& v : g.values) v = rng.uniform_real() * 1000;
  RasterGrid out = resample_to_grid(g, s);
  REQUIRE(out.values == g.values);
}

TEST_CASE("resample: 2x upsample replicates blocks") {
  GridSpec src = make_spec(0, 60, 30, 2, 2);
  RasterGrid g(src);
  g.values = {1, 2, 3, 4};
  GridSpec dst = make_spec(0, 60, 15, 4, 4);
  RasterGrid out = resample_to_grid(g, dst);
  double expect[4][4] = {{1, 1, 2, 2}, {1, 1, 2, 2}, {3, 3, 4, 4}, {3, 3, 4, 4}};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) REQUIRE(out.at(r, c) == expect[r][c]);
}

TEST_CASE("resample: disjoint target is all nodata") {
  GridSpec src = make_spec(0, 60, 30, 2, 2);
  RasterGrid g(src, 7.0);
  GridSpec dst = make_spec(10000, 60, 30, 2, 2);
  RasterGrid out = resample_to_grid(g, dst);
  for (double v : out.values) REQUIRE(out.is_nodata(v));
}

TEST_CASE("resample: crs mismatch rejected") {
  GridSpec src = make_spec(0, 60, 30, 2, 2, "utm10");
  GridSpec dst = make_spec(0, 60, 30, 2, 2, "utm11");
  REQUIRE_THROWS_AS(resample_to_grid(RasterGrid(src), dst), GeoError);
}

TEST_CASE("resample matches the exhaustive nearest-center oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    GridSpec src = make_spec(rng.uniform_real() * 50, 300 + rng.uniform_real() * 50,
                             10.0, 5 + static_cast<int>(rng.uniform_below(8)),
                             5 + static_cast<int>(rng.uniform_below(8)));
    RasterGrid g(src);
    for (auto& v : g.values) v = rng.uniform_real();
    GridSpec dst = make_spec(src.origin_x - 20 + rng.uniform_real() * 40,
                             src.origin_y + 20 - rng.uniform_real() * 40,
                             (trial % 2) ? 10.0 : 5.0,
                             4 + static_cast<int>(rng.uniform_below(10)),
                             4 + static_cast<int>(rng.uniform_below(10)));
    RasterGrid out = resample_to_grid(g, dst);
    for (int r = 0; r < dst.height; ++r) {
      for (int c = 0; c < dst.width; ++c) {
        double x = dst.center_x(c), y = dst.center_y(r);
        // Skip centers equidistant to two source centers (grid-edge ties).
        double ux = (x - src.origin_x) / src.pixel_size;
        double uy = (src.origin_y - y) / src.pixel_size;
        if (std::abs(ux - std::round(ux)) < 1e-9 || std::abs(uy - std::round(uy)) < 1e-9)
          continue;
        int orow, ocol;
        bool covered = oracle::nearest_source_pixel(src, x, y, orow, ocol);
        if (covered)
          REQUIRE(out.at(r, c) == g.at(orow, ocol));
        else
          REQUIRE(out.is_nodata(out.at(r, c)));
      }
    }
  }
}

TEST_CASE("mosaic: single raster identity") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  RasterGrid g(s);
  g.values = {1, 2, 3, 4};
  RasterGrid out = mosaic({g}, s);
  REQUIRE(out.values == g.values);
}

TEST_CASE("mosaic: abutting tiles concatenate") {
  GridSpec left = make_spec(0, 60, 30, 2, 2);
  GridSpec right = make_spec(60, 60, 30, 2, 2);
  RasterGrid a(left), b(right);
  a.values = {1, 2, 3, 4};
  b.values = {5, 6, 7, 8};
  GridSpec target = make_spec(0, 60, 30, 4, 2);
  RasterGrid out = mosaic({a, b}, target);
  std::vector<double> expect = {1, 2, 5, 6, 3, 4, 7, 8};
  REQUIRE(out.values == expect);
}

TEST_CASE("mosaic: first listed wins on overlap") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  RasterGrid a(s, 1.0), b(s, 2.0);
  RasterGrid out = mosaic({a, b}, s);
  for (double v : out.values) REQUIRE(v == 1.0);
  RasterGrid out2 = mosaic({b, a}, s);
  for (double v : out2.values) REQUIRE(v == 2.0);
}

TEST_CASE("mosaic: nodata in the first tile falls through") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  RasterGrid a(s, 1.0), b(s, 2.0);
  a.nodata = -1.0;
  a.at(0, 0) = -1.0;
  RasterGrid out = mosaic({a, b}, s);
  REQUIRE(out.at(0, 0) == 2.0);
  REQUIRE(out.at(0, 1) == 1.0);
}

TEST_CASE("mosaic: empty list rejected") {
  GridSpec s = make_spec(0, 60, 30, 2, 2);
  REQUIRE_THROWS_AS(mosaic({}, s), GeoError);
}
