#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "wildfire/sampling.hpp"
#include "wildfire/store.hpp"

using namespace wildfire;

namespace {

const UtcTime kT0 = parse_iso8601("2014-09-13T00:00:00Z");

// Small normalized stack pair with a deterministic mask change.
std::pair<LayerStack, LayerStack> stack_pair(int w, int h, uint64_t value_seed = 7) {
  GridSpec spec;
  spec.origin_x = 0;
  spec.origin_y = h * 30.0;
  spec.pixel_size = 30;
  spec.width = w;
  spec.height = h;

  LayerSchema schema{{
      {"fire_mask", LayerKind::fire_mask},
      {"red", LayerKind::spectral},
      {"elevation", LayerKind::elevation},
  }};

  auto make = [&](int burn_radius) {
    LayerStack s;
    s.spec = spec;
    s.schema = schema;
    Rng rng(value_seed);
    RasterGrid mask(spec, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (std::abs(y - h / 2) <= burn_radius && std::abs(x - w / 2) <= burn_radius)
          mask.at(y, x) = 1.0;
    RasterGrid red(spec), elev(spec);
    for (auto& v : red.values) v = rng.uniform_real();
    for (auto& v : elev.values) v = rng.uniform_real();
    s.channels = {mask, red, elev};
    s.normalized = true;
    return s;
  };

  LayerStack a = make(1), b = make(2);
  a.timestamp = kT0;
  b.timestamp = kT0 + kSecondsPerDay + kSecondsPerHour;
  return {a, b};
}

}  // namespace

TEST_CASE("extract_patch centered on the grid center returns the grid") {
  auto [a, b] = stack_pair(31, 31);
  Tensor3<float> t = a.to_tensor();
  Tensor3<float> p = extract_patch(t, 15, 15, 31);
  REQUIRE(p.data == t.data);
}

TEST_CASE("extract_patch zero pads the out-of-bounds region") {
  auto [a, b] = stack_pair(16, 16);
  Tensor3<float> t = a.to_tensor();
  Tensor3<float> p = extract_patch(t, 0, 0, 31);
  for (int y = 0; y < 31; ++y)
    for (int x = 0; x < 31; ++x)
      for (int c = 0; c < t.channels; ++c) {
        int sy = y - 15, sx = x - 15;
        float expect = (sy >= 0 && sy < 16 && sx >= 0 && sx < 16) ? t.at(sy, sx, c) : 0.0f;
        REQUIRE(p.at(y, x, c) == expect);
      }
}

TEST_CASE("extract_patch matches the index oracle at random POIs") {
  auto [a, b] = stack_pair(23, 17);
  Tensor3<float> t = a.to_tensor();
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 * static_cast<int>(rng.uniform_below(8)) + 3;
    int row = static_cast<int>(rng.uniform_below(17));
    int col = static_cast<int>(rng.uniform_below(23));
    Tensor3<float> p = extract_patch(t, row, col, n);
    int half = n / 2;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        for (int c = 0; c < t.channels; ++c) {
          int sy = row + y - half, sx = col + x - half;
          float expect = (sy >= 0 && sy < t.height && sx >= 0 && sx < t.width)
                             ? t.at(sy, sx, c)
                             : 0.0f;
          REQUIRE(p.at(y, x, c) == expect);
        }
  }
}

TEST_CASE("extract_patch rejects even sizes") {
  auto [a, b] = stack_pair(8, 8);
  REQUIRE_THROWS_AS(extract_patch(a.to_tensor(), 0, 0, 4), SamplingError);
}

TEST_CASE("sample_pois draws without replacement") {
  auto [a, b] = stack_pair(12, 10);
  SECTION("count exceeding population is rejected") {
    REQUIRE_THROWS_WITH(sample_pois(a, b, 121, 1, 5),
                        Catch::Matchers::ContainsSubstring("population"));
  }
  SECTION("exhaustive draw covers every pixel exactly once") {
    auto samples = sample_pois(a, b, 120, 1, 5);
    std::set<std::pair<int, int>> seen;
    for (const auto& s : samples) seen.insert({s.row, s.col});
    REQUIRE(seen.size() == 120);
  }
  SECTION("same seed twice gives identical POI sequences") {
    auto s1 = sample_pois(a, b, 50, 99, 5);
    auto s2 = sample_pois(a, b, 50, 99, 5);
    for (size_t i = 0; i < s1.size(); ++i) {
      REQUIRE(s1[i].row == s2[i].row);
      REQUIRE(s1[i].col == s2[i].col);
      REQUIRE(s1[i].patch.data == s2[i].patch.data);
    }
  }
  SECTION("labels come from the next stack's mask") {
    auto samples = sample_pois(a, b, 120, 4, 5);
    for (const auto& s : samples)
      REQUIRE(s.label == (b.fire_mask().at(s.row, s.col) != 0.0 ? 1 : 0));
  }
}

TEST_CASE("mask scheme labels agree with the binary scheme at the center") {
  auto [a, b] = stack_pair(12, 10);
  auto masks = sample_mask_scheme(a, b, 120, 5, 17);
  for (const auto& ms : masks) {
    REQUIRE(ms.label_mask.height == 5);
    REQUIRE(ms.label_mask.channels == 1);
    REQUIRE(ms.label_mask.at(2, 2, 0) == static_cast<float>(ms.base.label));
  }
}

TEST_CASE("mask scheme pads corners with zeros") {
  auto [a, b] = stack_pair(12, 10);
  // all-burning next stack
  for (auto& v : b.channels[0].values) v = 1.0;
  auto masks = sample_mask_scheme(a, b, 120, 7, 17);
  for (const auto& ms : masks) {
    if (ms.base.row == 0 && ms.base.col == 0) {
      REQUIRE(ms.label_mask.at(0, 0, 0) == 0.0f);  // out of bounds
      REQUIRE(ms.label_mask.at(3, 3, 0) == 1.0f);  // the POI itself
      REQUIRE(ms.label_mask.at(6, 6, 0) == 1.0f);
    }
  }
}

TEST_CASE("dihedral augmentation expands 8-fold and preserves the center") {
  auto [a, b] = stack_pair(12, 10);
  auto samples = sample_pois(a, b, 20, 5, 5);
  auto aug = augment_dihedral(samples, a.schema);
  REQUIRE(aug.size() == samples.size() * 8);
  for (size_t i = 0; i < samples.size(); ++i) {
    for (int d = 0; d < 8; ++d) {
      const Sample& s = aug[i * 8 + d];
      REQUIRE(s.label == samples[i].label);
      // center pixel is fixed under every dihedral element
      for (int c = 0; c < s.patch.channels; ++c)
        REQUIRE(s.patch.at(2, 2, c) == samples[i].patch.at(2, 2, c));
    }
  }
}

TEST_CASE("dihedral wind channels stay mutually consistent") {
  GridSpec spec;
  spec.origin_x = 0;
  spec.origin_y = 90;
  spec.pixel_size = 30;
  spec.width = 9;
  spec.height = 9;
  LayerSchema schema{{
      {"fire_mask", LayerKind::fire_mask},
      {"wind_direction", LayerKind::weather_constant},
      {"wind_dir_sin", LayerKind::weather_constant},
      {"wind_dir_cos", LayerKind::weather_constant},
  }};
  double theta = 137.0;
  auto make = [&](UtcTime t) {
    LayerStack s;
    s.spec = spec;
    s.schema = schema;
    s.timestamp = t;
    s.channels = {RasterGrid(spec, 0.0), RasterGrid(spec, theta / 360.0),
                  RasterGrid(spec, (std::sin(theta * M_PI / 180) + 1) / 2),
                  RasterGrid(spec, (std::cos(theta * M_PI / 180) + 1) / 2)};
    s.normalized = true;
    return s;
  };
  LayerStack a = make(kT0), b = make(kT0 + kSecondsPerDay);
  auto samples = sample_pois(a, b, 10, 3, 5);
  auto aug = augment_dihedral(samples, schema);
  for (const auto& s : aug) {
    // Wherever the direction cell is in bounds, sin/cos cells must equal
    // the direction's own sine/cosine.
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x) {
        double dir = s.patch.at(y, x, 1) * 360.0;
        double sv = s.patch.at(y, x, 2) * 2.0 - 1.0;
        double cv = s.patch.at(y, x, 3) * 2.0 - 1.0;
        if (s.patch.at(y, x, 1) == 0.0f && sv == -1.0 && cv == -1.0) continue;
        if (s.patch.at(y, x, 1) == 0.0f && sv == 0.0 && cv == 0.0) continue;  // padding
        REQUIRE(std::abs(std::sin(dir * M_PI / 180) - sv) < 1e-5);
        REQUIRE(std::abs(std::cos(dir * M_PI / 180) - cv) < 1e-5);
      }
  }
}

TEST_CASE("store round trip recovers patches and labels exactly") {
  auto [a, b] = stack_pair(12, 10);
  auto samples = sample_pois(a, b, 60, 21, 5, "king");
  std::string path = (std::filesystem::temp_directory_path() / "wf_store_test.zip").string();
  write_store(samples, path, 42, SplitFractions{0.8, 0.1, 0.1}, a.schema);

  SampleStore store(path);
  REQUIRE(store.patch_size() == 5);
  REQUIRE(store.channels() == 3);
  REQUIRE(store.split_size("train") == 48);
  REQUIRE(store.split_size("val") == 6);
  REQUIRE(store.split_size("test") == 6);
  REQUIRE(store.split_size("all") == 60);

  // Recover every patch bit-exactly and every label correctly.
  std::map<std::string, const Sample*> originals;
  for (const auto& s : samples)
    for (const char* split : kStoreSplits)
      originals[store_detail::entry_name(split, s)] = &s;
  size_t matched = 0;
  for (const char* split : kStoreSplits) {
    for (const auto& ref : store.split_entries(split)) {
      auto it = originals.find(ref.name);
      REQUIRE(it != originals.end());
      REQUIRE(ref.label == it->second->label);
      Tensor3<float> patch = store.read_patch(ref);
      REQUIRE(patch.data == it->second->patch.data);
      ++matched;
    }
  }
  REQUIRE(matched == 60);
  std::filesystem::remove(path);
}

TEST_CASE("store split sizes follow floor-then-remainder-to-train") {
  auto sizes = split_sizes(10, SplitFractions{0.8, 0.1, 0.1});
  REQUIRE(sizes == std::array<size_t, 3>{8, 1, 1});
  auto sizes11 = split_sizes(11, SplitFractions{0.8, 0.1, 0.1});
  REQUIRE(sizes11 == std::array<size_t, 3>{9, 1, 1});
  REQUIRE_THROWS_AS(split_sizes(10, SplitFractions{0.8, 0.2, 0.1}), StoreError);
  REQUIRE_THROWS_AS(split_sizes(10, SplitFractions{1.0, 0.0, 0.0}), StoreError);
}

TEST_CASE("identical seeds give byte-identical stores") {
  auto [a, b] = stack_pair(12, 10);
  auto samples = sample_pois(a, b, 40, 5, 5, "king");
  auto tmp = std::filesystem::temp_directory_path();
  std::string p1 = (tmp / "wf_store_a.zip").string();
  std::string p2 = (tmp / "wf_store_b.zip").string();
  write_store(samples, p1, 7, SplitFractions{}, a.schema);
  write_store(samples, p2, 7, SplitFractions{}, a.schema);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  REQUIRE(c1 == c2);
  REQUIRE_FALSE(c1.empty());
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("label is recoverable from the entry path alone") {
  Sample s;
  s.patch = Tensor3<float>(3, 3, 2);
  s.label = 1;
  s.row = 10;
  s.col = 12;
  s.fire_id = "king";
  s.t0 = kT0;
  REQUIRE(store_detail::entry_name("train", s) ==
          "train/1/king_2014-09-13T00:00:00Z_10_12.bin");
}

TEST_CASE("iterator yields every sample exactly once per epoch") {
  auto [a, b] = stack_pair(12, 10);
  auto samples = sample_pois(a, b, 60, 21, 5, "king");
  std::string path = (std::filesystem::temp_directory_path() / "wf_store_iter.zip").string();
  write_store(samples, path, 42, SplitFractions{}, a.schema);
  SampleStore store(path);

  SECTION("batch sizes 4,4,2 over a split of 10") {
    // test split has 6; use train split of 48 with batch 20 -> 20,20,8
    StoreIterator it(store, "train", 20, 1);
    Batch batch;
    std::vector<int> sizes;
    std::set<std::string> names;
    while (it.next(batch)) {
      sizes.push_back(batch.count);
      for (const auto& n : batch.names) names.insert(n);
    }
    REQUIRE(sizes == std::vector<int>{20, 20, 8});
    REQUIRE(names.size() == 48);
  }
  SECTION("same epoch seed gives identical order") {
    StoreIterator i1(store, "train", 7, 33), i2(store, "train", 7, 33);
    Batch b1, b2;
    while (i1.next(b1)) {
      REQUIRE(i2.next(b2));
      REQUIRE(b1.names == b2.names);
      REQUIRE(b1.patches == b2.patches);
    }
    REQUIRE_FALSE(i2.next(b2));
  }
  SECTION("unknown split rejected") {
    REQUIRE_THROWS_AS(StoreIterator(store, "holdout", 4, 1), StoreError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("splits are disjoint and cover all samples") {
  auto [a, b] = stack_pair(16, 16);
  auto samples = sample_pois(a, b, 256, 11, 5, "king");
  std::string path = (std::filesystem::temp_directory_path() / "wf_store_split.zip").string();
  write_store(samples, path, 5, SplitFractions{0.6, 0.2, 0.2}, a.schema);
  SampleStore store(path);
  std::set<std::string> all;
  size_t total = 0;
  for (const char* split : kStoreSplits) {
    auto entries = store.split_entries(split);
    total += entries.size();
    for (const auto& e : entries) {
      // strip the split prefix so identical samples in different splits collide
      std::string suffix = e.name.substr(e.name.find('/'));
      REQUIRE(all.insert(suffix).second);
    }
  }
  REQUIRE(total == 256);
  REQUIRE(all.size() == 256);
  std::filesystem::remove(path);
}

TEST_CASE("mask samples round trip through the store") {
  auto [a, b] = stack_pair(12, 10);
  auto masks = sample_mask_scheme(a, b, 30, 5, 17, "king");
  std::string path = (std::filesystem::temp_directory_path() / "wf_store_mask.zip").string();
  write_store(masks, path, 3, SplitFractions{}, a.schema);
  SampleStore store(path);
  REQUIRE(store.manifest().at("mask_labels").get<bool>());
  size_t checked = 0;
  for (const char* split : kStoreSplits) {
    for (const auto& ref : store.split_entries(split)) {
      Tensor3<float> m = store.read_mask(ref);
      REQUIRE(m.channels == 1);
      REQUIRE(m.at(2, 2, 0) == static_cast<float>(ref.label));
      ++checked;
    }
  }
  REQUIRE(checked == 30);
  std::filesystem::remove(path);
}

TEST_CASE("zip rejects duplicate entries and compressed method") {
  auto tmp = std::filesystem::temp_directory_path();
  std::string path = (tmp / "wf_zip_dup.zip").string();
  {
    ZipWriter w(path);
    w.add_entry("a.txt", std::string("hello"));
    REQUIRE_THROWS_AS(w.add_entry("a.txt", std::string("again")), ZipError);
    w.finish();
  }
  ZipReader r(path);
  REQUIRE(r.entries().size() == 1);
  auto data = r.read_entry("a.txt");
  REQUIRE(std::string(data.begin(), data.end()) == "hello");
  std::filesystem::remove(path);
}
