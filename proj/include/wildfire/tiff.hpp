#pragma once

// Minimal GeoTIFF reader: single band, uncompressed, strip-organized,
// north-up. Supported samples: uint8, uint16, float32; both byte orders.
// Georeferencing comes from ModelPixelScaleTag + ModelTiepointTag.
// Anything outside this profile is rejected with a named error -- the
// reader never silently misinterprets a file it does not understand.

#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wildfire/geo.hpp"

namespace wildfire {

struct TiffError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TiffUnsupported : TiffError {
  explicit TiffUnsupported(const std::string& feature)
      : TiffError("unsupported TIFF feature: " + feature) {}
};

namespace tiff_detail {

struct Reader {
  const uint8_t* data;
  size_t size;
  bool big_endian;

  uint16_t u16(size_t off) const {
    check(off, 2);
    return big_endian ? static_cast<uint16_t>(data[off] << 8 | data[off + 1])
                      : static_cast<uint16_t>(data[off + 1] << 8 | data[off]);
  }
  uint32_t u32(size_t off) const {
    check(off, 4);
    uint32_t b0 = data[off], b1 = data[off + 1], b2 = data[off + 2], b3 = data[off + 3];
    return big_endian ? (b0 << 24 | b1 << 16 | b2 << 8 | b3)
                      : (b3 << 24 | b2 << 16 | b1 << 8 | b0);
  }
  double f64(size_t off) const {
    check(off, 8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      size_t idx = big_endian ? off + i : off + 7 - i;
      bits = (bits << 8) | data[idx];
    }
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  float f32(size_t off) const {
    uint32_t bits = u32(off);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  void check(size_t off, size_t n) const {
    if (off + n > size) throw TiffError("truncated TIFF file");
  }
};

struct IfdEntry {
  uint16_t type = 0;
  uint32_t count = 0;
  size_t value_offset = 0;  // offset of the inline value field itself
};

inline size_t type_size(uint16_t type) {
  switch (type) {
    case 1: case 2: case 6: case 7: return 1;   // BYTE, ASCII, SBYTE, UNDEF
    case 3: case 8: return 2;                   // SHORT, SSHORT
    case 4: case 9: case 11: return 4;          // LONG, SLONG, FLOAT
    case 5: case 10: case 12: return 8;         // RATIONAL, SRATIONAL, DOUBLE
    default: return 0;
  }
}

// Offset of the entry's payload, following the inline-vs-pointer rule.
inline size_t payload_offset(const Reader& r, const IfdEntry& e) {
  size_t bytes = type_size(e.type) * e.count;
  if (bytes == 0) throw TiffError("unknown tag data type");
  return bytes <= 4 ? e.value_offset : r.u32(e.value_offset);
}

inline uint32_t scalar_u32(const Reader& r, const IfdEntry& e, uint32_t index = 0) {
  size_t off = payload_offset(r, e) + index * type_size(e.type);
  if (e.type == 3) return r.u16(off);
  if (e.type == 4) return r.u32(off);
  throw TiffError("tag has unexpected data type");
}

}  // namespace tiff_detail

inline RasterGrid parse_geotiff_minimal(const uint8_t* bytes, size_t size,
                                        const std::string& crs_tag = "") {
  using namespace tiff_detail;
  if (size < 8) throw TiffError("not a TIFF: too short");
  bool big_endian;
  if (bytes[0] == 'I' && bytes[1] == 'I') big_endian = false;
  else if (bytes[0] == 'M' && bytes[1] == 'M') big_endian = true;
  else throw TiffError("not a TIFF: bad byte-order mark");
  Reader r{bytes, size, big_endian};
  if (r.u16(2) != 42) throw TiffError("not a TIFF: bad magic");
  size_t ifd = r.u32(4);
  uint16_t n_entries = r.u16(ifd);
  std::map<uint16_t, IfdEntry> tags;
  for (uint16_t i = 0; i < n_entries; ++i) {
    size_t off = ifd + 2 + i * 12;
    uint16_t tag = r.u16(off);
    tags[tag] = IfdEntry{r.u16(off + 2), r.u32(off + 4), off + 8};
  }

  auto has = [&](uint16_t t) { return tags.count(t) != 0; };
  auto get_scalar = [&](uint16_t t, uint32_t fallback,
                        bool required = false) -> uint32_t {
    if (!has(t)) {
      if (required) throw TiffError("missing required tag " + std::to_string(t));
      return fallback;
    }
    return scalar_u32(r, tags.at(t));
  };

  if (has(322) || has(323) || has(324) || has(325)) throw TiffUnsupported("tiled organization");
  uint32_t compression = get_scalar(259, 1);
  if (compression != 1)
    throw TiffUnsupported("compression (Compression=" + std::to_string(compression) + ")");
  uint32_t samples_per_pixel = get_scalar(277, 1);
  if (samples_per_pixel != 1) throw TiffUnsupported("multi-band image");
  if (has(338)) throw TiffUnsupported("extra samples");
  uint32_t planar = get_scalar(284, 1);
  if (planar != 1) throw TiffUnsupported("planar configuration");

  uint32_t width = get_scalar(256, 0, true);
  uint32_t height = get_scalar(257, 0, true);
  if (width == 0 || height == 0) throw TiffError("zero image dimension");
  uint32_t bits = get_scalar(258, 1);
  uint32_t sample_format = get_scalar(339, 1);

  enum class Kind { U8, U16, F32 };
  Kind kind;
  if (sample_format == 1 && bits == 8) kind = Kind::U8;
  else if (sample_format == 1 && bits == 16) kind = Kind::U16;
  else if (sample_format == 3 && bits == 32) kind = Kind::F32;
  else
    throw TiffUnsupported("sample type (bits=" + std::to_string(bits) +
                          ", format=" + std::to_string(sample_format) + ")");

  if (!has(273) || !has(279)) throw TiffError("missing strip offsets/byte counts");
  if (!has(33550) || !has(33922))
    throw TiffUnsupported("missing geotags (ModelPixelScale/ModelTiepoint)");

  // Geotransform: tiepoint maps raster (i,j) to model (x,y); north-up only.
  const IfdEntry& scale_e = tags.at(33550);
  if (scale_e.type != 12 || scale_e.count < 2) throw TiffError("bad ModelPixelScaleTag");
  size_t scale_off = payload_offset(r, scale_e);
  double sx = r.f64(scale_off);
  double sy = r.f64(scale_off + 8);
  if (!(sx > 0) || !(sy > 0)) throw TiffError("non-positive pixel scale");
  if (sx != sy) throw TiffUnsupported("non-square pixels");
  const IfdEntry& tie_e = tags.at(33922);
  if (tie_e.type != 12 || tie_e.count < 6) throw TiffError("bad ModelTiepointTag");
  size_t tie_off = payload_offset(r, tie_e);
  double ti = r.f64(tie_off), tj = r.f64(tie_off + 8);
  double tx = r.f64(tie_off + 24), ty = r.f64(tie_off + 32);

  GridSpec spec;
  spec.width = static_cast<int>(width);
  spec.height = static_cast<int>(height);
  spec.pixel_size = sx;
  spec.origin_x = tx - ti * sx;
  spec.origin_y = ty + tj * sy;
  spec.crs_tag = crs_tag;
  RasterGrid grid(spec);

  // Optional GDAL nodata (tag 42113, ASCII).
  if (has(42113)) {
    const IfdEntry& nd = tags.at(42113);
    size_t off = payload_offset(r, nd);
    r.check(off, nd.count);
    std::string text(reinterpret_cast<const char*>(bytes + off), nd.count);
    if (!text.empty() && text.back() == '\0') text.pop_back();
    try {
      grid.nodata = std::stod(text);
    } catch (...) {
      throw TiffError("unparsable GDAL_NODATA value '" + text + "'");
    }
  }

  const IfdEntry& offsets_e = tags.at(273);
  const IfdEntry& counts_e = tags.at(279);
  if (offsets_e.count != counts_e.count) throw TiffError("strip table size mismatch");
  uint32_t rows_per_strip = get_scalar(278, height);
  size_t bytes_per_sample = bits / 8;
  size_t row_bytes = static_cast<size_t>(width) * bytes_per_sample;

  size_t out = 0;
  for (uint32_t s = 0; s < offsets_e.count; ++s) {
    size_t strip_off = scalar_u32(r, offsets_e, s);
    size_t strip_len = scalar_u32(r, counts_e, s);
    uint32_t first_row = s * rows_per_strip;
    uint32_t rows = std::min(rows_per_strip, height - first_row);
    if (strip_len != rows * row_bytes) throw TiffError("strip byte count mismatch");
    r.check(strip_off, strip_len);
    for (uint32_t rr = 0; rr < rows; ++rr) {
      for (uint32_t c = 0; c < width; ++c) {
        size_t off = strip_off + rr * row_bytes + c * bytes_per_sample;
        double v;
        switch (kind) {
          case Kind::U8: v = bytes[off]; break;
          case Kind::U16: v = r.u16(off); break;
          default: v = r.f32(off); break;
        }
        grid.values[out++] = v;
      }
    }
  }
  if (out != grid.spec.pixel_count()) throw TiffError("strip data does not cover image");
  return grid;
}

inline RasterGrid parse_geotiff_minimal(const std::vector<uint8_t>& bytes,
                                        const std::string& crs_tag = "") {
  return parse_geotiff_minimal(bytes.data(), bytes.size(), crs_tag);
}

}  // namespace wildfire
