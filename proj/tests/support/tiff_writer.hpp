#pragma once

// Byte-level TIFF writer for round-trip tests. Builds the file directly
// from the TIFF 6.0 layout rules (header, one IFD, doubles area, one data
// strip) without touching the reader under test. Supports uint8/uint16/
// float32 samples in either byte order.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace testtiff {

enum class Sample { U8, U16, F32 };

struct Options {
  bool big_endian = false;
  Sample sample = Sample::F32;
  double pixel_size = 30.0;
  double origin_x = 0.0;
  double origin_y = 0.0;  // top-left corner, as a tiepoint at raster (0,0)
  uint16_t compression = 1;
  bool include_geotags = true;
  uint16_t samples_per_pixel = 1;
};

class Builder {
 public:
  explicit Builder(bool big_endian) : be_(big_endian) {}

  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    if (be_) { u8(v >> 8); u8(v & 0xff); }
    else { u8(v & 0xff); u8(v >> 8); }
  }
  void u32(uint32_t v) {
    if (be_) { u16(v >> 16); u16(v & 0xffff); }
    else { u16(v & 0xffff); u16(v >> 16); }
  }
  void f64(double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int i = 0; i < 8; ++i)
      u8(static_cast<uint8_t>(be_ ? bits >> (8 * (7 - i)) : bits >> (8 * i)));
  }
  void f32(float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }

  std::vector<uint8_t> out_;
  bool be_;
};

// values are row-major, height*width entries, cast to the sample type.
inline std::vector<uint8_t> write_tiff(const std::vector<double>& values,
                                       int width, int height,
                                       const Options& opt = Options{}) {
  Builder b(opt.big_endian);
  uint16_t bits = opt.sample == Sample::U8 ? 8 : opt.sample == Sample::U16 ? 16 : 32;
  uint16_t format = opt.sample == Sample::F32 ? 3 : 1;
  size_t sample_bytes = bits / 8;
  size_t data_bytes = values.size() * sample_bytes;

  uint16_t n_entries = opt.include_geotags ? 12 : 10;
  uint32_t header_bytes = 8;
  uint32_t ifd_bytes = 2 + n_entries * 12 + 4;
  uint32_t doubles_off = header_bytes + ifd_bytes;
  uint32_t scale_off = doubles_off;            // 3 doubles
  uint32_t tie_off = scale_off + 3 * 8;        // 6 doubles
  uint32_t data_off = opt.include_geotags ? tie_off + 6 * 8 : doubles_off;

  // Header.
  b.u8(opt.big_endian ? 'M' : 'I');
  b.u8(opt.big_endian ? 'M' : 'I');
  b.u16(42);
  b.u32(header_bytes);  // IFD immediately follows

  // IFD. Entries must be ascending by tag.
  b.u16(n_entries);
  auto entry_short = [&](uint16_t tag, uint16_t value) {
    b.u16(tag); b.u16(3); b.u32(1);
    // SHORT inline value occupies the first two bytes of the value field.
    b.u16(value); b.u16(0);
  };
  auto entry_long = [&](uint16_t tag, uint32_t value) {
    b.u16(tag); b.u16(4); b.u32(1); b.u32(value);
  };
  auto entry_doubles = [&](uint16_t tag, uint32_t count, uint32_t offset) {
    b.u16(tag); b.u16(12); b.u32(count); b.u32(offset);
  };
  entry_long(256, static_cast<uint32_t>(width));
  entry_long(257, static_cast<uint32_t>(height));
  entry_short(258, bits);
  entry_short(259, opt.compression);
  entry_short(262, 1);  // BlackIsZero
  entry_long(273, data_off);
  entry_short(277, opt.samples_per_pixel);
  entry_long(278, static_cast<uint32_t>(height));  // single strip
  entry_long(279, static_cast<uint32_t>(data_bytes));
  entry_short(339, format);
  if (opt.include_geotags) {
    entry_doubles(33550, 3, scale_off);
    entry_doubles(33922, 6, tie_off);
  }
  b.u32(0);  // next IFD

  if (opt.include_geotags) {
    b.f64(opt.pixel_size); b.f64(opt.pixel_size); b.f64(0.0);
    b.f64(0.0); b.f64(0.0); b.f64(0.0);  // raster point (0,0,0)
    b.f64(opt.origin_x); b.f64(opt.origin_y); b.f64(0.0);
  }

  for (double v : values) {
    switch (opt.sample) {
      case Sample::U8: b.u8(static_cast<uint8_t>(v)); break;
      case Sample::U16: b.u16(static_cast<uint16_t>(v)); break;
      case Sample::F32: b.f32(static_cast<float>(v)); break;
    }
  }
  return b.out_;
}

}  // namespace testtiff
