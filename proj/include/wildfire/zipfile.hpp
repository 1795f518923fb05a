#pragma once

// Minimal zip container, method STORED only (the sample store is defined
// as a dynamic, non-compressed zipfile). Writer emits local headers,
// a central directory, and the end-of-central-directory record with fixed
// timestamps so identical content gives identical bytes. Reader locates
// the central directory from the end of the file and reads entries by
// offset; compressed entries are rejected, never decoded wrong.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wildfire {

struct ZipError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Standard CRC-32 (reflected, polynomial 0xEDB88320).
inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t crc = 0) {
  static const auto table = [] {
    std::vector<uint32_t> t(256);
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return ~crc;
}

inline uint32_t crc32(const std::vector<uint8_t>& data) {
  return crc32(data.data(), data.size());
}

namespace zip_detail {

inline void put16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back(v >> 8);
}
inline void put32(std::vector<uint8_t>& out, uint32_t v) {
  put16(out, v & 0xffff);
  put16(out, v >> 16);
}

constexpr uint16_t kDosDate = (1 << 5) | 1;  // 1980-01-01, fixed for determinism
constexpr uint16_t kDosTime = 0;

}  // namespace zip_detail

class ZipWriter {
 public:
  explicit ZipWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ZipError("cannot open '" + path + "' for writing");
  }

  void add_entry(const std::string& name, const uint8_t* data, size_t size) {
    using namespace zip_detail;
    if (finished_) throw ZipError("archive already finished");
    for (const auto& e : entries_)
      if (e.name == name) throw ZipError("duplicate entry path '" + name + "'");
    Entry e;
    e.name = name;
    e.offset = static_cast<uint32_t>(bytes_written_);
    e.size = static_cast<uint32_t>(size);
    e.crc = crc32(data, size);

    std::vector<uint8_t> hdr;
    put32(hdr, 0x04034b50);
    put16(hdr, 20);             // version needed
    put16(hdr, 0);              // flags
    put16(hdr, 0);              // method STORED
    put16(hdr, kDosTime);
    put16(hdr, kDosDate);
    put32(hdr, e.crc);
    put32(hdr, e.size);         // compressed == uncompressed
    put32(hdr, e.size);
    put16(hdr, static_cast<uint16_t>(name.size()));
    put16(hdr, 0);              // extra length
    write(hdr.data(), hdr.size());
    write(reinterpret_cast<const uint8_t*>(name.data()), name.size());
    write(data, size);
    entries_.push_back(std::move(e));
  }

  void add_entry(const std::string& name, const std::vector<uint8_t>& data) {
    add_entry(name, data.data(), data.size());
  }
  void add_entry(const std::string& name, const std::string& text) {
    add_entry(name, reinterpret_cast<const uint8_t*>(text.data()), text.size());
  }

  void finish() {
    using namespace zip_detail;
    if (finished_) return;
    uint32_t dir_offset = static_cast<uint32_t>(bytes_written_);
    size_t dir_size = 0;
    for (const auto& e : entries_) {
      std::vector<uint8_t> rec;
      put32(rec, 0x02014b50);
      put16(rec, 20);  // version made by
      put16(rec, 20);  // version needed
      put16(rec, 0);
      put16(rec, 0);   // method STORED
      put16(rec, kDosTime);
      put16(rec, kDosDate);
      put32(rec, e.crc);
      put32(rec, e.size);
      put32(rec, e.size);
      put16(rec, static_cast<uint16_t>(e.name.size()));
      put16(rec, 0);  // extra
      put16(rec, 0);  // comment
      put16(rec, 0);  // disk number
      put16(rec, 0);  // internal attrs
      put32(rec, 0);  // external attrs
      put32(rec, e.offset);
      write(rec.data(), rec.size());
      write(reinterpret_cast<const uint8_t*>(e.name.data()), e.name.size());
      dir_size += rec.size() + e.name.size();
    }
    std::vector<uint8_t> eocd;
    put32(eocd, 0x06054b50);
    put16(eocd, 0);
    put16(eocd, 0);
    put16(eocd, static_cast<uint16_t>(entries_.size()));
    put16(eocd, static_cast<uint16_t>(entries_.size()));
    put32(eocd, static_cast<uint32_t>(dir_size));
    put32(eocd, dir_offset);
    put16(eocd, 0);  // comment length
    write(eocd.data(), eocd.size());
    out_.flush();
    if (!out_) throw ZipError("write failure while finishing archive");
    finished_ = true;
  }

  size_t entry_count() const { return entries_.size(); }

  ~ZipWriter() {
    try {
      finish();
    } catch (...) {
    }
  }

 private:
  struct Entry {
    std::string name;
    uint32_t crc = 0;
    uint32_t size = 0;
    uint32_t offset = 0;
  };

  void write(const uint8_t* data, size_t size) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out_) throw ZipError("write failure");
    bytes_written_ += size;
  }

  std::ofstream out_;
  std::vector<Entry> entries_;
  size_t bytes_written_ = 0;
  bool finished_ = false;
};

class ZipReader {
 public:
  struct Entry {
    std::string name;
    uint32_t size = 0;
    uint32_t crc = 0;
    uint32_t local_offset = 0;
  };

  explicit ZipReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw ZipError("cannot open '" + path + "'");
    in_.seekg(0, std::ios::end);
    file_size_ = static_cast<size_t>(in_.tellg());

    // Locate EOCD: scan backwards over at most 64KB + 22 bytes of comment.
    size_t scan = std::min(file_size_, size_t(65536 + 22));
    std::vector<uint8_t> tail(scan);
    in_.seekg(static_cast<std::streamoff>(file_size_ - scan));
    in_.read(reinterpret_cast<char*>(tail.data()), static_cast<std::streamsize>(scan));
    size_t eocd = SIZE_MAX;
    for (size_t i = scan >= 22 ? scan - 22 : 0; i + 4 <= scan; --i) {
      if (tail[i] == 0x50 && tail[i + 1] == 0x4b && tail[i + 2] == 0x05 && tail[i + 3] == 0x06) {
        eocd = i;
        break;
      }
      if (i == 0) break;
    }
    if (eocd == SIZE_MAX) throw ZipError("no end-of-central-directory record");
    auto u16 = [&](size_t off) { return uint16_t(tail[off] | tail[off + 1] << 8); };
    auto u32 = [&](size_t off) {
      return uint32_t(tail[off] | tail[off + 1] << 8 | tail[off + 2] << 16 |
                      uint32_t(tail[off + 3]) << 24);
    };
    uint16_t count = u16(eocd + 10);
    uint32_t dir_size = u32(eocd + 12);
    uint32_t dir_offset = u32(eocd + 16);

    std::vector<uint8_t> dir(dir_size);
    in_.clear();
    in_.seekg(dir_offset);
    in_.read(reinterpret_cast<char*>(dir.data()), dir_size);
    if (!in_) throw ZipError("truncated central directory");
    size_t pos = 0;
    auto d16 = [&](size_t off) { return uint16_t(dir[off] | dir[off + 1] << 8); };
    auto d32 = [&](size_t off) {
      return uint32_t(dir[off] | dir[off + 1] << 8 | dir[off + 2] << 16 |
                      uint32_t(dir[off + 3]) << 24);
    };
    for (uint16_t i = 0; i < count; ++i) {
      if (pos + 46 > dir.size() || d32(pos) != 0x02014b50)
        throw ZipError("corrupt central directory");
      Entry e;
      uint16_t method = d16(pos + 10);
      e.crc = d32(pos + 16);
      uint32_t csize = d32(pos + 20);
      e.size = d32(pos + 24);
      uint16_t name_len = d16(pos + 28);
      uint16_t extra_len = d16(pos + 30);
      uint16_t comment_len = d16(pos + 32);
      e.local_offset = d32(pos + 42);
      e.name.assign(reinterpret_cast<const char*>(dir.data()) + pos + 46, name_len);
      if (method != 0)
        throw ZipError("entry '" + e.name + "' is compressed; only STORED is supported");
      if (csize != e.size) throw ZipError("entry '" + e.name + "' size mismatch");
      entries_.push_back(std::move(e));
      pos += 46 + name_len + extra_len + comment_len;
    }
  }

  const std::vector<Entry>& entries() const { return entries_; }

  const Entry* find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e;
    return nullptr;
  }

  std::vector<uint8_t> read_entry(const Entry& e) {
    // Local header: 30 bytes fixed + name + extra (lengths from the local copy).
    uint8_t hdr[30];
    in_.clear();
    in_.seekg(e.local_offset);
    in_.read(reinterpret_cast<char*>(hdr), 30);
    if (!in_ || !(hdr[0] == 0x50 && hdr[1] == 0x4b && hdr[2] == 0x03 && hdr[3] == 0x04))
      throw ZipError("bad local header for '" + e.name + "'");
    uint16_t name_len = uint16_t(hdr[26] | hdr[27] << 8);
    uint16_t extra_len = uint16_t(hdr[28] | hdr[29] << 8);
    std::vector<uint8_t> data(e.size);
    in_.seekg(e.local_offset + 30 + name_len + extra_len);
    in_.read(reinterpret_cast<char*>(data.data()), e.size);
    if (!in_) throw ZipError("truncated entry '" + e.name + "'");
    return data;
  }

  std::vector<uint8_t> read_entry(const std::string& name) {
    const Entry* e = find(name);
    if (!e) throw ZipError("no entry named '" + name + "'");
    return read_entry(*e);
  }

 private:
  std::ifstream in_;
  size_t file_size_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace wildfire
