#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "minusface/data.hpp"
#include "test_helpers.hpp"

using namespace minusface;

TEST_CASE("generate_toy_dataset: deterministic, right count, valid labels") {
  const auto a = data::generate_toy_dataset(10, 20, 32, 7);
  const auto b = data::generate_toy_dataset(10, 20, 32, 7);
  REQUIRE(a.samples.size() == 200);
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].image.data == b.samples[i].image.data);
    CHECK(a.samples[i].label == b.samples[i].label);
    CHECK(a.samples[i].label >= 0);
    CHECK(a.samples[i].label < 10);
  }
  const auto c = data::generate_toy_dataset(10, 20, 32, 8);
  CHECK(a.samples[0].image.data != c.samples[0].image.data);
}

TEST_CASE("splits: attacker shares no identity with defender-test, 80/20 defender split") {
  const auto ds = data::generate_toy_dataset(20, 20, 32, 9);
  std::set<int> attacker_ids, defender_test_ids, defender_train_ids;
  for (const auto& s : ds.samples) {
    if (s.split == data::Split::Attacker) attacker_ids.insert(s.label);
    if (s.split == data::Split::DefenderTest) defender_test_ids.insert(s.label);
    if (s.split == data::Split::DefenderTrain) defender_train_ids.insert(s.label);
  }
  for (int id : attacker_ids) {
    CHECK(defender_test_ids.count(id) == 0);
    CHECK(defender_train_ids.count(id) == 0);
  }
  CHECK(attacker_ids.size() == 10);
  CHECK(defender_train_ids.size() == 10);
  CHECK(ds.indices(data::Split::DefenderTrain).size() == 160);
  CHECK(ds.indices(data::Split::DefenderTest).size() == 40);
  CHECK(ds.indices(data::Split::Attacker).size() == 200);
}

TEST_CASE("intra-identity distances are smaller than inter-identity distances") {
  const auto ds = data::generate_toy_dataset(8, 6, 32, 10);
  auto l1 = [](const SpatialImage& a, const SpatialImage& b) {
    double s = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
      s += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
    }
    return s / a.data.size();
  };
  double intra = 0, inter = 0;
  long n_intra = 0, n_inter = 0;
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    for (size_t j = i + 1; j < ds.samples.size(); ++j) {
      const double d = l1(ds.samples[i].image, ds.samples[j].image);
      if (ds.samples[i].label == ds.samples[j].label) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  CHECK(intra / n_intra < inter / n_inter);
}

TEST_CASE("dataset generation throughput exceeds 1000 images/s at 32x32") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = data::generate_toy_dataset(10, 20, 32, 11);
  const auto t1 = std::chrono::steady_clock::now();
  const double secs = std::chrono::duration<double>(t1 - t0).count();
  MESSAGE("generated 200 images in ", secs, " s");
  CHECK(200.0 / secs >= 1000.0);
}

TEST_CASE("invalid dataset parameters are rejected") {
  CHECK_THROWS_AS(data::generate_toy_dataset(1, 20, 32, 1), std::invalid_argument);
  CHECK_THROWS_AS(data::generate_toy_dataset(10, 1, 32, 1), std::invalid_argument);
  CHECK_THROWS_AS(data::generate_toy_dataset(10, 20, 8, 1), std::invalid_argument);
}

TEST_CASE("save/load roundtrip stays within 8-bit quantization for PPM and PNG") {
  namespace fs = std::filesystem;
  const auto img = testutil::random_image(17, 23, 12);
  for (const char* name : {"t.ppm", "t.png"}) {
    const std::string path = (fs::temp_directory_path() / name).string();
    data::save_image(img, path);
    const auto back = data::load_image(path);
    REQUIRE(back.height == img.height);
    REQUIRE(back.width == img.width);
    CHECK(testutil::max_abs_diff(img.data, back.data) <= 1.0 / 255.0 + 1e-6);
    std::remove(path.c_str());
  }
}

TEST_CASE("a hand-written 2x2 P6 fixture loads to exact float values") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "fixture.ppm").string();
  std::ofstream out(path, std::ios::binary);
  out << "P6\n2 2\n255\n";
  const unsigned char bytes[12] = {0,   0,   0,    // (0,0) black
                                   255, 255, 255,  // (0,1) white
                                   255, 0,   0,    // (1,0) red
                                   0,   51,  102}; // (1,1) known mix
  out.write(reinterpret_cast<const char*>(bytes), 12);
  out.close();

  const auto img = data::load_image(path);
  CHECK(img.at(0, 0, 0) == 0.0f);
  CHECK(img.at(0, 0, 1) == 1.0f);
  CHECK(img.at(1, 0, 1) == 1.0f);
  CHECK(img.at(0, 1, 0) == 1.0f);
  CHECK(img.at(1, 1, 0) == 0.0f);
  CHECK(img.at(0, 1, 1) == 0.0f);
  CHECK(img.at(1, 1, 1) == doctest::Approx(51.0f / 255.0f));
  CHECK(img.at(2, 1, 1) == doctest::Approx(102.0f / 255.0f));
  std::remove(path.c_str());
}

TEST_CASE("loading a missing file reports the path") {
  try {
    (void)data::load_image("/nonexistent/nowhere.png");
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/nowhere.png") != std::string::npos);
  }
}

TEST_CASE("make_pairs: balanced, seeded, no repeats when capacity allows") {
  const auto ds = data::generate_toy_dataset(20, 20, 32, 13);
  const auto pairs = data::make_pairs(ds, 100, 21);
  REQUIRE(pairs.size() == 100);
  int pos = 0;
  std::set<std::pair<int, int>> seen;
  for (const auto& p : pairs) {
    pos += p.same;
    CHECK(ds.samples[p.index_a].split == data::Split::DefenderTest);
    CHECK(ds.samples[p.index_b].split == data::Split::DefenderTest);
    CHECK((ds.samples[p.index_a].label == ds.samples[p.index_b].label) == p.same);
    seen.insert({std::min(p.index_a, p.index_b), std::max(p.index_a, p.index_b)});
  }
  CHECK(pos == 50);
  CHECK(seen.size() == 100);  // no repeats

  const auto again = data::make_pairs(ds, 100, 21);
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].index_a == again[i].index_a);
    CHECK(pairs[i].index_b == again[i].index_b);
  }
}

TEST_CASE("make_pairs rejects impossible requests") {
  const auto ds = data::generate_toy_dataset(4, 10, 32, 14);  // 2 defender ids, 2 test imgs each
  CHECK_NOTHROW(data::make_pairs(ds, 4, 1));
  CHECK_THROWS_AS(data::make_pairs(ds, 1, 1), std::invalid_argument);
  // a single defender identity has no negative pairs
  const auto two = data::generate_toy_dataset(2, 10, 32, 14);
  CHECK_THROWS_AS(data::make_pairs(two, 4, 1), std::invalid_argument);
}

TEST_CASE("dataset save/load roundtrip preserves labels, splits, and pixels to 8 bits") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "toy_ds").string();
  fs::remove_all(dir);
  const auto ds = data::generate_toy_dataset(4, 4, 32, 15);
  data::save_dataset(ds, dir);
  CHECK(fs::exists(fs::path(dir) / "manifest.tsv"));

  const auto back = data::load_dataset(dir);
  REQUIRE(back.samples.size() == ds.samples.size());
  CHECK(back.identities == 4);
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].split == ds.samples[i].split);
    CHECK(testutil::max_abs_diff(back.samples[i].image.data, ds.samples[i].image.data) <=
          1.0 / 255.0 + 1e-6);
  }
  fs::remove_all(dir);
}

TEST_CASE("hflip mirrors columns") {
  const auto img = testutil::random_image(4, 6, 16);
  const auto f = data::hflip(img);
  for (int k = 0; k < 3; ++k) {
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 6; ++x) {
        CHECK(f.at(k, y, x) == img.at(k, y, 5 - x));
      }
    }
  }
  CHECK(data::hflip(f).data == img.data);
}
