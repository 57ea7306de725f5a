#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vsa/datasets.hpp"
#include "vsa/multi_object.hpp"
#include "vsa/rng.hpp"

using namespace vsa;

namespace {

FactorizationResult make_result(Eigen::Index k, Eigen::Index x, Eigen::Index y) {
  FactorizationResult r;
  r.k_index = k;
  r.x_index = x;
  r.y_index = y;
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("multi_object");

TEST_CASE("explain_away: full explanation, orthogonal input, errors") {
  auto rng = make_rng(201);
  const ComplexVector z = random_phasor(1000, rng).values();
  CHECK(explain_away(z, z).cwiseAbs().maxCoeff() < 1e-12);

  // DFT column vs the all-ones vector: inner product is exactly a full
  // geometric sum of roots of unity, i.e. zero.
  const Eigen::Index dim = 512;
  ComplexVector dft(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    dft(d) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(d) / dim);
  }
  const ComplexVector ones = ComplexVector::Ones(dim);
  CHECK((explain_away(ones, dft) - ones).cwiseAbs().maxCoeff() < 1e-12);

  const ComplexVector small = ComplexVector::Ones(4);
  CHECK_THROWS_AS(explain_away(z, small), std::invalid_argument);
}

TEST_CASE("graded_accuracy: exact scoring") {
  MultiSceneTruth truth;
  truth.placements = {{0, 1, 2}, {1, 3, 4}, {2, 5, 6}, {3, 7, 8}, {4, 9, 0}};

  std::vector<FactorizationResult> all;
  for (const auto& p : truth.placements) {
    all.push_back(make_result(p.k, p.x, p.y));
  }
  CHECK(graded_accuracy(all, truth) == 1.0);

  std::vector<FactorizationResult> four = all;
  four[4] = make_result(4, 0, 0);  // wrong position
  CHECK(graded_accuracy(four, truth) == doctest::Approx(0.8));

  std::vector<FactorizationResult> none(5, make_result(9, 9, 9));
  CHECK(graded_accuracy(none, truth) == 0.0);

  // Order insensitivity.
  std::vector<FactorizationResult> shuffled = {all[3], all[0], all[4], all[2], all[1]};
  CHECK(graded_accuracy(shuffled, truth) == 1.0);
}

TEST_CASE("graded_accuracy: duplicates consume one result per truth entry") {
  MultiSceneTruth truth;
  truth.placements = {{0, 1, 1}, {0, 1, 1}};

  // Two identical truth entries need two results.
  CHECK(graded_accuracy({make_result(0, 1, 1), make_result(5, 5, 5)}, truth) ==
        doctest::Approx(0.5));
  CHECK(graded_accuracy({make_result(0, 1, 1), make_result(0, 1, 1)}, truth) == 1.0);
}

TEST_CASE("graded_accuracy: toroidal position tolerance") {
  MultiSceneTruth truth;
  truth.placements = {{0, 0, 0}};
  // Off by one with wraparound at period 10.
  CHECK(graded_accuracy({make_result(0, 9, 1)}, truth, 1, 10) == 1.0);
  CHECK(graded_accuracy({make_result(0, 8, 0)}, truth, 1, 10) == 0.0);
  CHECK(graded_accuracy({make_result(0, 9, 1)}, truth) == 0.0);
  CHECK_THROWS_AS(graded_accuracy({make_result(0, 0, 0)}, truth, 1, 0), std::invalid_argument);
}

namespace {

struct BarsSetup {
  EncoderContext ctx;
  std::vector<BarsShape> shapes;
  SceneCodebooks books;
};

BarsSetup bars_setup(const EncoderContext& ctx, int side, int n_shapes,
                     std::mt19937_64& rng) {
  auto shapes = gen_bars_shapes(n_shapes, rng);
  std::vector<ObjectTemplate> templates;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    FeatureMaps canon = FeatureMaps::zeros(2, side);
    for (int j = 0; j < 2; ++j) {
      canon.map(j).block(0, 0, kBarsFrame, kBarsFrame) = shapes[k].ground_truth_maps.map(j);
    }
    templates.push_back(ObjectTemplate{"shape" + std::to_string(k), Image::zeros(side),
                                       encode_sparse(canon, ctx)});
  }
  SceneCodebooks books = build_codebooks(ctx, templates);
  return BarsSetup{ctx, std::move(shapes), std::move(books)};
}

ComplexVector bars_scene_vector(const BarsSetup& setup, int side,
                                const std::vector<ScenePlacement>& placements) {
  FeatureMaps maps = FeatureMaps::zeros(2, side);
  for (const auto& p : placements) {
    for (const auto& bar : setup.shapes[static_cast<std::size_t>(p.k)].placements) {
      const int j = bar.horizontal ? 1 : 0;
      const int cx = static_cast<int>((bar.x + p.x) % side);
      const int cy = static_cast<int>((bar.y + p.y) % side);
      double& c = maps.at(j, cx, cy);
      c = std::max(c, std::sqrt(static_cast<double>(kBarsFrame)));
    }
  }
  return encode_sparse(maps, setup.ctx);
}

}  // namespace

TEST_CASE("factorize_multi with m=1 matches a single run") {
  auto ctx_rng = make_rng(211);
  const EncoderContext ctx = EncoderContext::create(1024, 20, 2, ctx_rng);
  const BarsSetup setup = bars_setup(ctx, 20, 4, ctx_rng);
  const ComplexVector z = bars_scene_vector(setup, 20, {{1, 5, 9}});
  StoppingCriterion crit;
  crit.max_iters = 60;
  auto rng1 = make_rng(223);
  auto rng2 = make_rng(223);
  const auto multi = factorize_multi(z, setup.books, 1, crit, rng1);
  const auto single = run(z, setup.books, crit, rng2);
  REQUIRE(multi.size() == 1);
  CHECK(multi[0].x_index == single.x_index);
  CHECK(multi[0].y_index == single.y_index);
  CHECK(multi[0].k_index == single.k_index);
  CHECK(multi[0].iterations == single.iterations);
}

TEST_CASE("explaining away removes a correctly decoded object") {
  const int side = 48;
  auto ctx_rng = make_rng(227);
  const EncoderContext ctx = EncoderContext::create(2500, side, 2, ctx_rng);
  StoppingCriterion crit;
  crit.max_iters = 100;
  crit.epsilon = 0.01;

  int correct_first = 0;
  int norm_drops = 0;
  int second_found = 0;
  for (std::uint64_t t = 0; t < 30; ++t) {
    auto srng = make_rng(derive_seed(229, {t}));
    // Fresh shape set per scene, like the experiment protocol.
    const BarsSetup setup = bars_setup(ctx, side, 6, srng);
    std::uniform_int_distribution<Eigen::Index> pick_k(0, 5);
    std::uniform_int_distribution<Eigen::Index> pick_pos(0, side - 1);
    // Two objects, rejection-sampled until their frames are disjoint.
    ScenePlacement a{pick_k(srng), pick_pos(srng), pick_pos(srng)};
    ScenePlacement b{pick_k(srng), pick_pos(srng), pick_pos(srng)};
    auto overlaps = [&](const ScenePlacement& p, const ScenePlacement& q) {
      auto axis_gap = [&](Eigen::Index u, Eigen::Index v) {
        const int d = static_cast<int>(std::abs(static_cast<long>(u - v))) % side;
        return std::min(d, side - d) >= kBarsFrame;
      };
      return !(axis_gap(p.x, q.x) || axis_gap(p.y, q.y));
    };
    while (b.k == a.k || overlaps(a, b)) {
      b = ScenePlacement{pick_k(srng), pick_pos(srng), pick_pos(srng)};
    }

    const ComplexVector z = bars_scene_vector(setup, side, {a, b});
    auto rng = make_rng(derive_seed(231, {t}));
    const auto results = factorize_multi(z, setup.books, 2, crit, rng);

    const auto& first = results[0];
    const bool first_is_a = first.k_index == a.k && first.x_index == a.x && first.y_index == a.y;
    const bool first_is_b = first.k_index == b.k && first.x_index == b.x && first.y_index == b.y;
    if (first_is_a || first_is_b) {
      ++correct_first;
      // Residual norm must drop when the right contribution is removed.
      const ComplexVector after = explain_away(z, first.final_estimate);
      if (after.norm() < z.norm()) {
        ++norm_drops;
      }
      const ScenePlacement& remaining = first_is_a ? b : a;
      const auto& second = results[1];
      if (second.k_index == remaining.k && second.x_index == remaining.x &&
          second.y_index == remaining.y) {
        ++second_found;
      }
    }
  }
  REQUIRE(correct_first >= 25);
  CHECK(norm_drops >= static_cast<int>(0.95 * correct_first));
  CHECK(second_found >= static_cast<int>(0.85 * correct_first));
}

TEST_SUITE_END();
