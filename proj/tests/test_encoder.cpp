#include <doctest.h>

#include <cmath>

#include "vsa/datasets.hpp"
#include "vsa/encoder.hpp"
#include "vsa/rng.hpp"

using namespace vsa;

namespace {

EncoderContext make_ctx(Eigen::Index dim, std::uint32_t period, int filters,
                        std::uint64_t seed) {
  auto rng = make_rng(seed);
  return EncoderContext::create(dim, period, filters, rng);
}

double max_abs_diff(const ComplexVector& a, const ComplexVector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

FeatureMaps shifted_maps(const FeatureMaps& maps, int dx, int dy) {
  FeatureMaps out = maps;
  for (int j = 0; j < maps.count(); ++j) {
    out.map(j) = circular_shift(maps.map(j), dx, dy);
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("encoder");

TEST_CASE("encode_sparse: zeros, single coefficient, linearity") {
  const EncoderContext ctx = make_ctx(512, 12, 3, 1);

  CHECK(encode_sparse(FeatureMaps::zeros(3, 12), ctx).cwiseAbs().maxCoeff() == 0.0);

  FeatureMaps one = FeatureMaps::zeros(3, 12);
  one.at(2, 5, 7) = 1.75;
  const ComplexVector z = encode_sparse(one, ctx);
  const ComplexVector expect = 1.75 * ctx.h_power_table()
                                          .col(5)
                                          .cwiseProduct(ctx.v_power_table().col(7))
                                          .cwiseProduct(ctx.basis_codebook().matrix().col(2));
  CHECK(max_abs_diff(z, expect) < 1e-12);

  auto rng = make_rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FeatureMaps a = FeatureMaps::zeros(3, 12);
  FeatureMaps b = FeatureMaps::zeros(3, 12);
  FeatureMaps combo = FeatureMaps::zeros(3, 12);
  for (int j = 0; j < 3; ++j) {
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 12; ++x) {
        a.at(j, x, y) = gauss(rng);
        b.at(j, x, y) = gauss(rng);
        combo.at(j, x, y) = 2.0 * a.at(j, x, y) - 3.0 * b.at(j, x, y);
      }
    }
  }
  const ComplexVector lhs = encode_sparse(combo, ctx);
  const ComplexVector rhs = 2.0 * encode_sparse(a, ctx) - 3.0 * encode_sparse(b, ctx);
  CHECK(max_abs_diff(lhs, rhs) < 1e-9);
}

TEST_CASE("encode shift equivariance") {
  const EncoderContext ctx = make_ctx(800, 16, 2, 5);
  auto rng = make_rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  FeatureMaps maps = FeatureMaps::zeros(2, 16);
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 6; ++i) {
      maps.at(j, static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)) = unit(rng);
    }
  }
  const int dx = 5;
  const int dy = 11;
  const ComplexVector shifted = encode_sparse(shifted_maps(maps, dx, dy), ctx);
  const ComplexVector bound =
      vsa::bind(bind(fpe_power(ctx.h_base(), dx), fpe_power(ctx.v_base(), dy)).values(),
           encode_sparse(maps, ctx));
  CHECK(max_abs_diff(shifted, bound) < 1e-9);

  Image img = Image::zeros(16);
  for (int i = 0; i < 10; ++i) {
    img.at(static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)) = unit(rng);
  }
  const ComplexVector pix_shifted = encode_pixel(circular_shift(img, dx, dy), ctx);
  const ComplexVector pix_bound =
      vsa::bind(bind(fpe_power(ctx.h_base(), dx), fpe_power(ctx.v_base(), dy)).values(),
           encode_pixel(img, ctx));
  CHECK(max_abs_diff(pix_shifted, pix_bound) < 1e-9);
}

TEST_CASE("encode_pixel: black image and single pixel") {
  const EncoderContext ctx = make_ctx(256, 10, 1, 9);
  CHECK(encode_pixel(Image::zeros(10), ctx).cwiseAbs().maxCoeff() == 0.0);

  Image img = Image::zeros(10);
  img.at(3, 8) = 1.0;
  const ComplexVector z = encode_pixel(img, ctx);
  const ComplexVector expect =
      ctx.h_power_table().col(3).cwiseProduct(ctx.v_power_table().col(8));
  CHECK(max_abs_diff(z, expect) < 1e-12);
}

TEST_CASE("make_object_template rejects degenerate objects and separates modes") {
  const Dictionary dict = bars_dictionary();
  const EncoderContext ctx = make_ctx(10000, 24, 2, 11);
  SparseConfig cfg;
  cfg.lambda = 0.1;

  CHECK_THROWS_AS(
      make_object_template("empty", Image::zeros(24), dict, ctx, cfg, EncodingMode::kPixel),
      std::invalid_argument);

  auto rng = make_rng(13);
  const auto shapes = gen_bars_shapes(4, rng);
  for (const auto& shape : shapes) {
    Image canonical = Image::zeros(24);
    canonical.grid().block(0, 0, kBarsFrame, kBarsFrame) = shape.grid.grid();
    const auto sparse_t =
        make_object_template("s", canonical, dict, ctx, cfg, EncodingMode::kSparse);
    const auto pixel_t =
        make_object_template("p", canonical, dict, ctx, cfg, EncodingMode::kPixel);
    const ComplexVector sn = normalize(sparse_t.template_vector).values();
    const ComplexVector pn = normalize(pixel_t.template_vector).values();
    CHECK(std::abs(similarity(sn, pn)) < 0.2);
  }
}

TEST_CASE("build_codebooks structure") {
  const Dictionary dict = bars_dictionary();
  const EncoderContext ctx = make_ctx(400, 14, 2, 17);
  auto rng = make_rng(19);
  const auto shapes = gen_bars_shapes(5, rng);
  std::vector<ObjectTemplate> templates;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    Image canonical = Image::zeros(14);
    canonical.grid().block(0, 0, kBarsFrame, kBarsFrame) = shapes[k].grid.grid();
    templates.push_back(ObjectTemplate{"shape" + std::to_string(k), canonical,
                                       encode_pixel(canonical, ctx)});
  }
  const SceneCodebooks books = build_codebooks(ctx, templates);

  CHECK(books.h.size() == 14);
  CHECK(books.v.size() == 14);
  CHECK(books.o.size() == 5);
  CHECK(max_abs_diff(books.h.matrix().col(0), ComplexVector::Ones(400)) == 0.0);
  for (Eigen::Index x = 0; x < books.h.size(); ++x) {
    const ComplexVector prod =
        books.h.matrix().col(x).cwiseProduct(books.h.matrix().col(x).conjugate());
    CHECK(max_abs_diff(prod, ComplexVector::Ones(400)) < 1e-12);
  }
  CHECK_THROWS_AS(build_codebooks(ctx, {}), std::invalid_argument);
}

TEST_CASE("compose_query identities and range checks") {
  const EncoderContext ctx = make_ctx(300, 9, 1, 23);
  auto rng = make_rng(29);
  std::vector<ObjectTemplate> templates;
  for (int k = 0; k < 3; ++k) {
    templates.push_back(
        ObjectTemplate{"o" + std::to_string(k), Image::zeros(9), random_phasor(300, rng).values()});
  }
  const SceneCodebooks books = build_codebooks(ctx, templates);

  CHECK(max_abs_diff(compose_query(0, 0, 2, books), books.o.matrix().col(2)) < 1e-12);

  const ComplexVector q = compose_query(4, 7, 1, books);
  const ComplexVector unbound = vsa::bind(
      q, conjugate(ComplexVector(books.h.matrix().col(4).cwiseProduct(books.v.matrix().col(7)))));
  CHECK(max_abs_diff(unbound, books.o.matrix().col(1)) < 1e-12);

  CHECK_THROWS_AS(compose_query(9, 0, 0, books), std::invalid_argument);
  CHECK_THROWS_AS(compose_query(0, -1, 0, books), std::invalid_argument);
  CHECK_THROWS_AS(compose_query(0, 0, 3, books), std::invalid_argument);
}

TEST_CASE("single-object scene similarity peaks at the true triple") {
  // Brute force over every triple at small scale.
  const Dictionary dict = bars_dictionary();
  const int side = 16;
  const EncoderContext ctx = make_ctx(2500, side, 2, 31);
  auto rng = make_rng(37);
  const auto shapes = gen_bars_shapes(4, rng);

  std::vector<ObjectTemplate> templates;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    FeatureMaps canon = FeatureMaps::zeros(2, side);
    for (int j = 0; j < 2; ++j) {
      canon.map(j).block(0, 0, kBarsFrame, kBarsFrame) = shapes[k].ground_truth_maps.map(j);
    }
    templates.push_back(ObjectTemplate{"shape" + std::to_string(k), Image::zeros(side),
                                       encode_sparse(canon, ctx)});
  }
  const SceneCodebooks books = build_codebooks(ctx, templates);

  const int truth_k = 2;
  const int truth_x = 11;
  const int truth_y = 3;
  FeatureMaps scene = FeatureMaps::zeros(2, side);
  for (int j = 0; j < 2; ++j) {
    scene.map(j) = circular_shift(
        [&] {
          Eigen::MatrixXd m = Eigen::MatrixXd::Zero(side, side);
          m.block(0, 0, kBarsFrame, kBarsFrame) =
              shapes[truth_k].ground_truth_maps.map(j);
          return m;
        }(),
        truth_x, truth_y);
  }
  const ComplexVector z = encode_sparse(scene, ctx);

  double best = -1.0;
  int best_x = -1, best_y = -1, best_k = -1;
  for (int x = 0; x < side; ++x) {
    for (int y = 0; y < side; ++y) {
      for (int k = 0; k < 4; ++k) {
        const double s = std::abs(similarity(z, compose_query(x, y, k, books)));
        if (s > best) {
          best = s;
          best_x = x;
          best_y = y;
          best_k = k;
        }
      }
    }
  }
  CHECK(best_x == truth_x);
  CHECK(best_y == truth_y);
  CHECK(best_k == truth_k);
}

TEST_SUITE_END();
