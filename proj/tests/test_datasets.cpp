#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "vsa/datasets.hpp"
#include "vsa/errors.hpp"
#include "vsa/rng.hpp"

using namespace vsa;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scenefactor_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_u32_be(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x >> 24));
  v.push_back(static_cast<unsigned char>(x >> 16));
  v.push_back(static_cast<unsigned char>(x >> 8));
  v.push_back(static_cast<unsigned char>(x));
}

}  // namespace

TEST_SUITE_BEGIN("datasets");

TEST_CASE("bars_dictionary geometry") {
  const Dictionary d = bars_dictionary();
  CHECK(d.count() == 2);
  CHECK(d.patch() == 8);
  CHECK(std::abs(d.filter(0).norm() - 1.0) < 1e-12);
  CHECK(std::abs(d.filter(1).norm() - 1.0) < 1e-12);
  // Bars cross at exactly one pixel.
  const double inner = (d.filter(0).array() * d.filter(1).array()).sum();
  CHECK(inner == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("gen_bars_shapes: distinct, reconstructible, deterministic") {
  auto rng = make_rng(401);
  const auto shapes = gen_bars_shapes(30, rng);
  const Dictionary dict = bars_dictionary();

  for (std::size_t a = 0; a < shapes.size(); ++a) {
    for (std::size_t b = a + 1; b < shapes.size(); ++b) {
      CHECK((shapes[a].grid.grid() - shapes[b].grid.grid()).cwiseAbs().maxCoeff() > 0.0);
    }
  }

  for (const auto& shape : shapes) {
    const Image recon = reconstruct(dict, shape.ground_truth_maps);
    // Grid equals the reconstruction with crossings saturated at 1.
    const Eigen::MatrixXd clipped = recon.grid().cwiseMin(1.0);
    CHECK((clipped - shape.grid.grid()).cwiseAbs().maxCoeff() < 1e-9);
  }

  auto rng_a = make_rng(77);
  auto rng_b = make_rng(77);
  const auto first = gen_bars_shapes(10, rng_a);
  const auto second = gen_bars_shapes(10, rng_b);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK((first[i].grid.grid() - second[i].grid.grid()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gen_bars_shapes: canonicalization pins the degenerate coordinate") {
  auto rng = make_rng(402);
  const auto shapes = gen_bars_shapes(20, rng, BarsConfig{1, 3});
  for (const auto& shape : shapes) {
    int min_col = kBarsFrame;
    int min_row = kBarsFrame;
    bool has_v = false, has_h = false;
    for (const auto& bar : shape.placements) {
      if (bar.horizontal) {
        has_h = true;
        min_row = std::min(min_row, bar.y);
        CHECK(bar.x == 0);
      } else {
        has_v = true;
        min_col = std::min(min_col, bar.x);
        CHECK(bar.y == 0);
      }
    }
    if (has_v && !has_h) CHECK(min_col == 0);
    if (has_h && !has_v) CHECK(min_row == 0);
  }
}

TEST_CASE("gen_bars_shapes: impossible distinct count fails loudly") {
  auto rng = make_rng(403);
  // Single-bar shapes canonicalize to just two distinct images.
  CHECK_THROWS_AS(gen_bars_shapes(3, rng, BarsConfig{1, 1}), std::invalid_argument);
}

TEST_CASE("place_scene composition rules") {
  Image obj = Image::zeros(4);
  obj.at(0, 0) = 1.0;
  obj.at(1, 0) = 1.0;

  const SceneSpec at_origin = place_scene({{obj, 0, 0, 0}}, 10);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(10, 10);
  expect(0, 0) = 1.0;
  expect(0, 1) = 1.0;
  CHECK((at_origin.image.grid() - expect).cwiseAbs().maxCoeff() == 0.0);

  const SceneSpec two = place_scene({{obj, 0, 0, 0}, {obj, 1, 5, 5}}, 10);
  CHECK(two.image.grid().sum() == doctest::Approx(4.0));
  CHECK(two.truth.count() == 2);

  // Overlap: max keeps values at 1.
  const SceneSpec overlap = place_scene({{obj, 0, 2, 2}, {obj, 1, 2, 2}}, 10);
  CHECK(overlap.image.grid().maxCoeff() == 1.0);
  CHECK(overlap.image.grid().sum() == doctest::Approx(2.0));

  // Toroidal wrap records reduced coordinates.
  const SceneSpec wrapped = place_scene({{obj, 0, 9, -1}, {obj, 1, 12, 3}}, 10);
  CHECK(wrapped.truth.placements[0].x == 9);
  CHECK(wrapped.truth.placements[0].y == 9);
  CHECK(wrapped.truth.placements[1].x == 2);
  CHECK(wrapped.image.at(9, 9) == 1.0);
  CHECK(wrapped.image.at(0, 9) == 1.0);  // wrapped second pixel of the first object
}

TEST_CASE("inference on a generated scene recovers a support superset") {
  auto rng = make_rng(404);
  const auto shapes = gen_bars_shapes(2, rng);
  const int side = 24;
  std::vector<PlacedObject> objects;
  std::vector<std::pair<int, std::pair<int, int>>> truth_support;
  const std::vector<std::pair<int, int>> spots = {{2, 3}, {13, 12}};
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    objects.push_back({shapes[i].grid, static_cast<Eigen::Index>(i), spots[i].first,
                       spots[i].second});
    for (const auto& bar : shapes[i].placements) {
      const int j = bar.horizontal ? 1 : 0;
      truth_support.push_back(
          {j, {(bar.x + spots[i].first) % side, (bar.y + spots[i].second) % side}});
    }
  }
  const SceneSpec scene = place_scene(objects, side);

  SparseConfig cfg;
  cfg.lambda = 0.02;  // small penalty: support superset check
  cfg.max_iters = 400;
  cfg.tol = 1e-9;
  const FeatureMaps maps = infer_maps(scene.image, bars_dictionary(), cfg);
  for (const auto& [j, xy] : truth_support) {
    CHECK(std::abs(maps.at(j, xy.first, xy.second)) > 0.1);
  }
}

TEST_CASE("IDX image parsing and errors") {
  const fs::path dir = temp_dir("idx");

  std::vector<unsigned char> good;
  push_u32_be(good, 0x00000803u);
  push_u32_be(good, 3);
  push_u32_be(good, 2);
  push_u32_be(good, 2);
  for (int i = 0; i < 12; ++i) {
    good.push_back(static_cast<unsigned char>(i * 20));
  }
  write_bytes(dir / "good.idx", good);
  const auto images = load_idx_images(dir / "good.idx");
  REQUIRE(images.size() == 3);
  CHECK(images[0].at(0, 0) == 0.0);
  CHECK(images[0].at(1, 0) == doctest::Approx(20.0 / 255.0));
  for (const auto& img : images) {
    CHECK(img.grid().minCoeff() >= 0.0);
    CHECK(img.grid().maxCoeff() <= 1.0);
  }

  std::vector<unsigned char> bad_magic = good;
  bad_magic[3] = 0x07;
  write_bytes(dir / "bad_magic.idx", bad_magic);
  CHECK_THROWS_WITH_AS(load_idx_images(dir / "bad_magic.idx"),
                       doctest::Contains("expected 0x00000803"), ParseError);

  std::vector<unsigned char> truncated(good.begin(), good.end() - 5);
  write_bytes(dir / "truncated.idx", truncated);
  CHECK_THROWS_WITH_AS(load_idx_images(dir / "truncated.idx"), doctest::Contains("missing 5"),
                       ParseError);

  std::vector<unsigned char> labels;
  push_u32_be(labels, 0x00000801u);
  push_u32_be(labels, 4);
  for (unsigned char c : {1, 7, 3, 9}) {
    labels.push_back(c);
  }
  write_bytes(dir / "labels.idx", labels);
  const auto parsed = load_idx_labels(dir / "labels.idx");
  CHECK(parsed == std::vector<int>{1, 7, 3, 9});
  CHECK_THROWS_AS(load_idx_labels(dir / "good.idx"), ParseError);
}

TEST_CASE("PGM round trip and padding") {
  const fs::path dir = temp_dir("pgm");
  Image img = Image::zeros(6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      img.at(x, y) = static_cast<double>((x + y) % 5) / 4.0;
    }
  }
  save_pgm(dir / "img.pgm", img);
  const Image back = load_pgm(dir / "img.pgm");
  CHECK(back.side() == 6);
  CHECK((back.grid() - img.grid()).cwiseAbs().maxCoeff() < 1.0 / 255.0 + 1e-12);

  // Non-square input pads to square with black.
  std::ofstream out(dir / "wide.pgm", std::ios::binary);
  out << "P5\n4 2\n255\n";
  for (int i = 0; i < 8; ++i) {
    out.put(static_cast<char>(255));
  }
  out.close();
  const Image wide = load_pgm(dir / "wide.pgm");
  CHECK(wide.side() == 4);
  CHECK(wide.at(0, 0) == 1.0);
  CHECK(wide.at(0, 3) == 0.0);

  CHECK_THROWS_AS(load_pgm(dir / "absent.pgm"), ParseError);
}

TEST_CASE("letter assets: missing letters are listed") {
  const fs::path dir = temp_dir("letters_missing");
  CHECK_THROWS_WITH_AS(load_letter_assets(dir), doctest::Contains("A B C"), ParseError);

  Image stub = Image::zeros(4);
  stub.at(1, 1) = 1.0;
  for (char c = 'A'; c <= 'Z'; ++c) {
    if (c != 'Q') {
      save_pgm(dir / (std::string(1, c) + ".pgm"), stub);
    }
  }
  CHECK_THROWS_WITH_AS(load_letter_assets(dir), doctest::Contains(": Q"), ParseError);

  save_pgm(dir / "Q.pgm", stub);
  const auto letters = load_letter_assets(dir);
  CHECK(letters.size() == 26);
  CHECK(letters.front().first == 'A');
  CHECK(letters.back().first == 'Z');
}

TEST_CASE("canonicalize shifts the bounding box to the origin") {
  Image obj = Image::zeros(8);
  obj.at(5, 3) = 0.8;
  obj.at(6, 4) = 0.6;
  const Image canon = canonicalize(obj, 12);
  CHECK(canon.at(0, 0) == doctest::Approx(0.8));
  CHECK(canon.at(1, 1) == doctest::Approx(0.6));
  CHECK(canon.grid().sum() == doctest::Approx(1.4));

  // All-black input stays put.
  const Image empty = canonicalize(Image::zeros(8), 12);
  CHECK(empty.grid().cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
