#pragma once

// Zip-backed sample store. Entries follow
//   <split>/<label>/<fire_id>_<t0-iso>_<row>_<col>[_d<k>].bin
// so a binary sample's label is recoverable from its path alone; the mask
// scheme stores a paired "<same>.mask.bin" entry. Patch payloads are a
// 16-byte header (magic "WFSP", format version, n, C; all little-endian
// 32-bit) followed by n*n*C float32 values, channel-major then row-major.
// A manifest.json entry records schema, patch size, seed, fractions, and
// per-split class counts. Split assignment is a seeded shuffle followed by
// contiguous partition (floored sizes, remainder to train).

#include <algorithm>
#include <array>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildfire/rng.hpp"
#include "wildfire/sampling.hpp"
#include "wildfire/stacking.hpp"
#include "wildfire/tensor.hpp"
#include "wildfire/timeutil.hpp"
#include "wildfire/zipfile.hpp"

namespace wildfire {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kStoreSplits[3] = {"train", "val", "test"};
constexpr uint32_t kPatchFormatVersion = 1;

struct SplitFractions {
  double train = 0.8, val = 0.1, test = 0.1;

  void validate() const {
    if (!(train > 0) || !(val > 0) || !(test > 0))
      throw StoreError("split fractions must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9)
      throw StoreError("split fractions must sum to 1");
  }
};

namespace store_detail {

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

inline void put_f32(std::vector<uint8_t>& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

inline uint32_t get_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

inline float get_f32(const uint8_t* p) {
  uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

// Patch payload: HWC tensor serialized channel-major then row-major.
inline std::vector<uint8_t> encode_patch(const Tensor3<float>& patch) {
  std::vector<uint8_t> out;
  out.reserve(16 + patch.size() * 4);
  out.push_back('W'); out.push_back('F'); out.push_back('S'); out.push_back('P');
  put_u32(out, kPatchFormatVersion);
  put_u32(out, static_cast<uint32_t>(patch.height));
  put_u32(out, static_cast<uint32_t>(patch.channels));
  for (int c = 0; c < patch.channels; ++c)
    for (int y = 0; y < patch.height; ++y)
      for (int x = 0; x < patch.width; ++x) put_f32(out, patch.at(y, x, c));
  return out;
}

inline Tensor3<float> decode_patch(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 16 || bytes[0] != 'W' || bytes[1] != 'F' || bytes[2] != 'S' ||
      bytes[3] != 'P')
    throw StoreError("bad patch payload magic");
  uint32_t version = get_u32(bytes.data() + 4);
  if (version != kPatchFormatVersion)
    throw StoreError("unsupported patch format version " + std::to_string(version));
  uint32_t n = get_u32(bytes.data() + 8);
  uint32_t c = get_u32(bytes.data() + 12);
  if (bytes.size() != 16 + size_t(n) * n * c * 4)
    throw StoreError("patch payload size mismatch");
  Tensor3<float> patch(static_cast<int>(n), static_cast<int>(n), static_cast<int>(c));
  size_t off = 16;
  for (uint32_t ch = 0; ch < c; ++ch)
    for (uint32_t y = 0; y < n; ++y)
      for (uint32_t x = 0; x < n; ++x) {
        patch.at(static_cast<int>(y), static_cast<int>(x), static_cast<int>(ch)) =
            get_f32(bytes.data() + off);
        off += 4;
      }
  return patch;
}

inline std::string entry_name(const std::string& split, const Sample& s) {
  std::string name = split + "/" + std::to_string(s.label) + "/" +
                     (s.fire_id.empty() ? "fire" : s.fire_id) + "_" +
                     format_iso8601(s.t0) + "_" + std::to_string(s.row) + "_" +
                     std::to_string(s.col);
  if (s.dihedral != 0) name += "_d" + std::to_string(int(s.dihedral));
  return name + ".bin";
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
    schema.layers.push_back(
        {item.at("name").get<std::string>(),
         layer_kind_from_string(item.at("kind").get<std::string>())});
  return schema;
}

}  // namespace store_detail

// Split assignment: floor(fraction * n) per split, remainder to train.
inline std::array<size_t, 3> split_sizes(size_t n, const SplitFractions& f) {
  f.validate();
  std::array<size_t, 3> sizes = {static_cast<size_t>(f.train * n),
                                 static_cast<size_t>(f.val * n),
                                 static_cast<size_t>(f.test * n)};
  size_t assigned = sizes[0] + sizes[1] + sizes[2];
  sizes[0] += n - assigned;
  return sizes;
}

// Write samples (optionally with paired mask labels) to a new store.
// Assignment order is a Fisher-Yates shuffle under `seed`; entries are
// written grouped train, then val, then test, preserving shuffled order
// within each split.
inline void write_store(const std::vector<Sample>& samples,
                        const std::vector<Tensor3<float>>* mask_labels,
                        const std::string& path, uint64_t seed,
                        const SplitFractions& fractions, const LayerSchema& schema) {
  fractions.validate();
  if (samples.empty()) throw StoreError("no samples to write");
  if (mask_labels && mask_labels->size() != samples.size())
    throw StoreError("mask label count does not match samples");

  std::vector<uint32_t> order(samples.size());
  for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);
  auto sizes = split_sizes(samples.size(), fractions);

  ZipWriter zip(path);
  nlohmann::json counts;
  std::vector<std::string> fire_ids;
  size_t cursor = 0;
  for (int split = 0; split < 3; ++split) {
    nlohmann::json split_counts = {{"0", 0}, {"1", 0}};
    for (size_t i = 0; i < sizes[split]; ++i, ++cursor) {
      const Sample& s = samples[order[cursor]];
      std::string name = store_detail::entry_name(kStoreSplits[split], s);
      zip.add_entry(name, store_detail::encode_patch(s.patch));
      if (mask_labels) {
        std::string mask_name = name.substr(0, name.size() - 4) + ".mask.bin";
        zip.add_entry(mask_name, store_detail::encode_patch((*mask_labels)[order[cursor]]));
      }
      split_counts[s.label ? "1" : "0"] = split_counts[s.label ? "1" : "0"].get<int>() + 1;
      if (std::find(fire_ids.begin(), fire_ids.end(), s.fire_id) == fire_ids.end())
        fire_ids.push_back(s.fire_id);
    }
    counts[kStoreSplits[split]] = split_counts;
  }

  nlohmann::json manifest = {
      {"format_version", kPatchFormatVersion},
      {"patch_size", samples.front().patch.height},
      {"channels", samples.front().patch.channels},
      {"schema", store_detail::schema_to_json(schema)},
      {"seed", seed},
      {"split_fractions", {fractions.train, fractions.val, fractions.test}},
      {"counts", counts},
      {"fire_ids", fire_ids},
      {"mask_labels", mask_labels != nullptr},
  };
  zip.add_entry("manifest.json", manifest.dump(2));
  zip.finish();
}

inline void write_store(const std::vector<Sample>& samples, const std::string& path,
                        uint64_t seed, const SplitFractions& fractions,
                        const LayerSchema& schema) {
  write_store(samples, nullptr, path, seed, fractions, schema);
}

inline void write_store(const std::vector<MaskSample>& samples, const std::string& path,
                        uint64_t seed, const SplitFractions& fractions,
                        const LayerSchema& schema) {
  std::vector<Sample> bases;
  std::vector<Tensor3<float>> masks;
  bases.reserve(samples.size());
  for (const auto& ms : samples) {
    bases.push_back(ms.base);
    masks.push_back(ms.label_mask);
  }
  write_store(bases, &masks, path, seed, fractions, schema);
}

// ---------------------------------------------------------------------------
// Reading

class SampleStore {
 public:
  struct EntryRef {
    std::string name;
    int label = 0;
    size_t zip_index = 0;
  };

  explicit SampleStore(const std::string& path) : path_(path), zip_(path) {
    auto manifest_bytes = zip_.read_entry("manifest.json");
    manifest_ = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end());
    patch_size_ = manifest_.at("patch_size").get<int>();
    channels_ = manifest_.at("channels").get<int>();
    schema_ = store_detail::schema_from_json(manifest_.at("schema"));
    const auto& entries = zip_.entries();
    for (size_t i = 0; i < entries.size(); ++i) {
      const std::string& name = entries[i].name;
      if (name == "manifest.json") continue;
      if (name.size() > 9 && name.substr(name.size() - 9) == ".mask.bin") continue;
      size_t slash = name.find('/');
      size_t slash2 = name.find('/', slash + 1);
      if (slash == std::string::npos || slash2 == std::string::npos)
        throw StoreError("unrecognized entry path '" + name + "'");
      EntryRef ref;
      ref.name = name;
      ref.label = name.substr(slash + 1, slash2 - slash - 1) == "1" ? 1 : 0;
      ref.zip_index = i;
      by_split_[name.substr(0, slash)].push_back(ref);
    }
  }

  const nlohmann::json& manifest() const { return manifest_; }
  int patch_size() const { return patch_size_; }
  int channels() const { return channels_; }
  const LayerSchema& schema() const { return schema_; }
  const std::string& path() const { return path_; }

  bool has_split(const std::string& split) const {
    return split == "all" || by_split_.count(split) != 0;
  }

  // Entries of a split in canonical (archive) order. "all" is the union
  // train, val, test -- used for whole-store evaluation of held-out fires.
  std::vector<EntryRef> split_entries(const std::string& split) const {
    if (split == "all") {
      std::vector<EntryRef> out;
      for (const char* s : kStoreSplits) {
        auto it = by_split_.find(s);
        if (it != by_split_.end())
          out.insert(out.end(), it->second.begin(), it->second.end());
      }
      return out;
    }
    auto it = by_split_.find(split);
    if (it == by_split_.end()) throw StoreError("unknown split '" + split + "'");
    return it->second;
  }

  size_t split_size(const std::string& split) const { return split_entries(split).size(); }

  Tensor3<float> read_patch(const EntryRef& ref) {
    return store_detail::decode_patch(zip_.read_entry(zip_.entries()[ref.zip_index]));
  }

  // Paired mask label for the mask-sampling scheme.
  Tensor3<float> read_mask(const EntryRef& ref) {
    std::string name = ref.name.substr(0, ref.name.size() - 4) + ".mask.bin";
    return store_detail::decode_patch(zip_.read_entry(name));
  }

 private:
  std::string path_;
  ZipReader zip_;
  nlohmann::json manifest_;
  int patch_size_ = 0;
  int channels_ = 0;
  LayerSchema schema_;
  std::map<std::string, std::vector<EntryRef>> by_split_;
};

struct Batch {
  // patches are concatenated HWC tensors: count * n * n * C floats.
  std::vector<float> patches;
  std::vector<float> labels;
  std::vector<std::string> names;
  int count = 0, patch_size = 0, channels = 0;
};

// One full pass over a split in an epoch-seeded shuffled order; the final
// short batch is emitted. Each sample appears exactly once per epoch.
class StoreIterator {
 public:
  StoreIterator(SampleStore& store, const std::string& split, size_t batch_size,
                uint64_t epoch_seed)
      : store_(store), entries_(store.split_entries(split)), batch_size_(batch_size) {
    if (batch_size_ == 0) throw StoreError("batch size must be >= 1");
    order_.resize(entries_.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<uint32_t>(i);
    Rng rng(epoch_seed);
    shuffle(order_, rng);
  }

  bool next(Batch& batch) {
    if (cursor_ >= order_.size()) return false;
    size_t take = std::min(batch_size_, order_.size() - cursor_);
    int n = store_.patch_size(), c = store_.channels();
    batch.count = static_cast<int>(take);
    batch.patch_size = n;
    batch.channels = c;
    size_t patch_floats = static_cast<size_t>(n) * n * c;
    batch.patches.resize(take * patch_floats);
    batch.labels.resize(take);
    batch.names.resize(take);
    for (size_t i = 0; i < take; ++i) {
      const auto& ref = entries_[order_[cursor_ + i]];
      Tensor3<float> patch = store_.read_patch(ref);
      if (patch.height != n || patch.channels != c)
        throw StoreError("entry '" + ref.name + "' has unexpected shape");
      std::copy(patch.data.begin(), patch.data.end(),
                batch.patches.begin() + i * patch_floats);
      batch.labels[i] = static_cast<float>(ref.label);
      batch.names[i] = ref.name;
    }
    cursor_ += take;
    return true;
  }

  size_t total() const { return order_.size(); }

 private:
  SampleStore& store_;
  std::vector<SampleStore::EntryRef> entries_;
  size_t batch_size_;
  std::vector<uint32_t> order_;
  size_t cursor_ = 0;
};

}  // namespace wildfire
