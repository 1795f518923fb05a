#pragma once

// ESRI ASCII grid reader/writer. Header keys: ncols, nrows, xllcorner,
// yllcorner, cellsize, optional NODATA_value (any case). The stored origin
// is the lower-left corner; RasterGrid uses a top-left origin, so
// origin_y = yllcorner + nrows * cellsize.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "wildfire/geo.hpp"

namespace wildfire {

struct AsciiGridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool parse_double_token(const std::string& tok, double& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

}  // namespace detail

inline RasterGrid parse_ascii_grid(std::istream& in, const std::string& crs_tag = "") {
  long ncols = -1, nrows = -1;
  double xll = 0, yll = 0, cellsize = 0;
  bool have_xll = false, have_yll = false, have_cell = false;
  std::optional<double> nodata;

  std::string line;
  int line_no = 0;
  // Header: key/value lines until the first line whose first token is numeric.
  std::streampos body_start = in.tellg();
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) {
      body_start = in.tellg();
      continue;  // blank line
    }
    double num;
    if (detail::parse_double_token(key, num)) break;  // body begins on this line
    std::string value;
    if (!(ls >> value))
      throw AsciiGridError("line " + std::to_string(line_no) + ": header key '" +
                           key + "' has no value");
    double v;
    if (!detail::parse_double_token(value, v))
      throw AsciiGridError("line " + std::to_string(line_no) +
                           ": non-numeric header value '" + value + "'");
    std::string k = detail::lower(key);
    if (k == "ncols") ncols = static_cast<long>(v);
    else if (k == "nrows") nrows = static_cast<long>(v);
    else if (k == "xllcorner") { xll = v; have_xll = true; }
    else if (k == "yllcorner") { yll = v; have_yll = true; }
    else if (k == "cellsize") { cellsize = v; have_cell = true; }
    else if (k == "nodata_value") nodata = v;
    else
      throw AsciiGridError("line " + std::to_string(line_no) +
                           ": malformed header key '" + key + "'");
    body_start = in.tellg();
  }
  if (ncols < 1 || nrows < 1 || !have_xll || !have_yll || !have_cell)
    throw AsciiGridError("incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)");
  if (cellsize <= 0) throw AsciiGridError("cellsize must be positive");

  GridSpec spec;
  spec.width = static_cast<int>(ncols);
  spec.height = static_cast<int>(nrows);
  spec.pixel_size = cellsize;
  spec.origin_x = xll;
  spec.origin_y = yll + nrows * cellsize;
  spec.crs_tag = crs_tag;
  RasterGrid grid(spec);
  grid.nodata = nodata;

  // Body: re-scan from the first numeric line, tracking line numbers.
  in.clear();
  in.seekg(body_start);
  size_t want = spec.pixel_count();
  size_t got = 0;
  int body_line = line_no - 1;
  while (std::getline(in, line)) {
    ++body_line;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      double v;
      if (!detail::parse_double_token(tok, v))
        throw AsciiGridError("line " + std::to_string(body_line) +
                             ": non-numeric token '" + tok + "'");
      if (got >= want)
        throw AsciiGridError("line " + std::to_string(body_line) +
                             ": wrong value count (more than " +
                             std::to_string(want) + " values)");
      grid.values[got++] = v;
    }
  }
  if (got != want)
    throw AsciiGridError("wrong value count: expected " + std::to_string(want) +
                         " values, got " + std::to_string(got));
  return grid;
}

inline RasterGrid parse_ascii_grid(const std::string& text, const std::string& crs_tag = "") {
  std::istringstream in(text);
  return parse_ascii_grid(in, crs_tag);
}

inline void write_ascii_grid(const RasterGrid& grid, std::ostream& out) {
  const GridSpec& s = grid.spec;
  char buf[64];
  out << "ncols " << s.width << "\n";
  out << "nrows " << s.height << "\n";
  std::snprintf(buf, sizeof(buf), "%.10g", s.origin_x);
  out << "xllcorner " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.10g", s.origin_y - s.height * s.pixel_size);
  out << "yllcorner " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.10g", s.pixel_size);
  out << "cellsize " << buf << "\n";
  if (grid.nodata) {
    std::snprintf(buf, sizeof(buf), "%.10g", *grid.nodata);
    out << "NODATA_value " << buf << "\n";
  }
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      std::snprintf(buf, sizeof(buf), "%.10g", grid.at(r, c));
      out << buf << (c + 1 == s.width ? "" : " ");
    }
    out << "\n";
  }
}

inline std::string write_ascii_grid(const RasterGrid& grid) {
  std::ostringstream out;
  write_ascii_grid(grid, out);
  return out.str();
}

}  // namespace wildfire
