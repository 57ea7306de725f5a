#include <doctest.h>

#include <cmath>
#include <random>

#include "vsa/encoder.hpp"
#include "vsa/rng.hpp"
#include "vsa/whitening.hpp"

using namespace vsa;

namespace {

// Correlated synthetic templates: shared base pattern plus per-template
// variation, which is the regime whitening is meant to fix.
std::vector<Eigen::VectorXd> correlated_templates(int count, Eigen::Index flat,
                                                  std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd base(flat);
  for (Eigen::Index i = 0; i < flat; ++i) {
    base(i) = gauss(rng);
  }
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd t = base;
    for (Eigen::Index i = 0; i < flat; ++i) {
      t(i) += 0.4 * gauss(rng);
    }
    t = t.cwiseAbs();  // image-like nonnegative values
    out.push_back(t);
  }
  return out;
}

// Covariance of the transformed set restricted to the fitted span, expressed
// in the span basis; identity there is the defining property.
Eigen::MatrixXd span_covariance(const WhiteningTransform& wt,
                                const std::vector<Eigen::VectorXd>& templates) {
  const auto n = static_cast<Eigen::Index>(templates.size());
  Eigen::MatrixXd data(templates.front().size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.col(i) = wt.apply_flat(templates[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd mean = data.rowwise().mean();
  data.colwise() -= mean;
  const Eigen::MatrixXd projected = wt.basis().transpose() * data;
  return projected * projected.transpose() / static_cast<double>(n - 1);
}

}  // namespace

TEST_SUITE_BEGIN("whitening");

TEST_CASE("whitened covariance is the identity on the data span") {
  auto rng = make_rng(301);
  const auto templates = correlated_templates(10, 28 * 28, rng);
  const WhiteningTransform wt = fit_whitening(templates, 1e-8, GridShape{1, 28});
  const Eigen::MatrixXd cov = span_covariance(wt, templates);
  // Rank is count-1 after centering; the floored null direction stays near 0.
  int identity_dirs = 0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      const double expect = (i == j && cov(i, i) > 0.5) ? 1.0 : 0.0;
      if (i == j && cov(i, i) > 0.5) {
        ++identity_dirs;
        CHECK(std::abs(cov(i, j) - expect) < 1e-6);
      } else if (i != j) {
        CHECK(std::abs(cov(i, j)) < 1e-6);
      }
    }
  }
  CHECK(identity_dirs == 9);
}

TEST_CASE("already-white templates stay white") {
  auto rng = make_rng(302);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> templates;
  for (int k = 0; k < 40; ++k) {
    Eigen::VectorXd t(16);
    for (Eigen::Index i = 0; i < 16; ++i) {
      t(i) = gauss(rng);
    }
    templates.push_back(t);
  }
  const WhiteningTransform wt = fit_whitening(templates, 1e-8, GridShape{1, 4});
  const Eigen::MatrixXd cov = span_covariance(wt, templates);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      CHECK(std::abs(cov(i, j) - (i == j ? 1.0 : 0.0)) < 1e-6);
    }
  }
}

TEST_CASE("rank-deficient input stays finite with the floor") {
  auto rng = make_rng(303);
  auto templates = correlated_templates(5, 64, rng);
  templates.push_back(templates.front());  // duplicate
  const WhiteningTransform wt = fit_whitening(templates, 1e-6, GridShape{1, 8});
  CHECK(wt.basis().allFinite());
  CHECK(wt.inv_scale().allFinite());
  const Eigen::VectorXd y = wt.apply_flat(templates.front());
  CHECK(y.allFinite());
}

TEST_CASE("fit_whitening argument errors") {
  auto rng = make_rng(304);
  const auto templates = correlated_templates(1, 16, rng);
  CHECK_THROWS_AS(fit_whitening(templates, 1e-8, GridShape{1, 4}), std::invalid_argument);
  auto two = correlated_templates(2, 16, rng);
  CHECK_THROWS_AS(fit_whitening(two, 1e-8, GridShape{1, 5}), std::invalid_argument);
}

TEST_CASE("apply_whitening is linear and shape-checked") {
  auto rng = make_rng(305);
  const auto templates = correlated_templates(6, 144, rng);
  const WhiteningTransform wt = fit_whitening(templates, 1e-8, GridShape{1, 12});

  CHECK(apply_whitening(wt, Image::zeros(12)).grid().cwiseAbs().maxCoeff() == 0.0);

  const Image a = unflatten_image(templates[0], GridShape{1, 12});
  const Image b = unflatten_image(templates[1], GridShape{1, 12});
  const Image sum(Eigen::MatrixXd(a.grid() + b.grid()));
  const Eigen::MatrixXd lhs = apply_whitening(wt, sum).grid();
  const Eigen::MatrixXd rhs =
      apply_whitening(wt, a).grid() + apply_whitening(wt, b).grid();
  const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9 * scale);

  CHECK_THROWS_AS(apply_whitening(wt, Image::zeros(9)), std::invalid_argument);
  CHECK_THROWS_AS(apply_whitening(wt, FeatureMaps::zeros(2, 12)), std::invalid_argument);
}

TEST_CASE("huge epsilon degenerates to a scaled projection onto the span") {
  auto rng = make_rng(306);
  const auto templates = correlated_templates(8, 100, rng);
  const double eps = 1e9;
  const WhiteningTransform wt = fit_whitening(templates, eps, GridShape{1, 10});
  // All singular values floored to eps * sigma_max: W = c * U U^T.
  Eigen::VectorXd x = templates[3];
  const Eigen::VectorXd projected = wt.basis() * (wt.basis().transpose() * x);
  const double c = wt.inv_scale()(0);
  CHECK((wt.apply_flat(x) - c * projected).cwiseAbs().maxCoeff() < 1e-9 * c);
}

TEST_CASE("centered whitened templates are equi-correlated at -1/(K-1)") {
  // After centering, K vectors summing to zero have mean pairwise cosine
  // exactly -1/(K-1); whitening equalizes all pairs to that value.
  auto rng = make_rng(307);
  const int count = 10;
  const auto templates = correlated_templates(count, 400, rng);
  const WhiteningTransform wt = fit_whitening(templates, 1e-8, GridShape{1, 20});
  std::vector<Eigen::VectorXd> whitened;
  for (const auto& t : templates) {
    whitened.push_back(wt.apply_flat_centered(t));
  }
  const double expect = -1.0 / (count - 1);
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      const double cosine = whitened[static_cast<std::size_t>(i)].dot(
                                whitened[static_cast<std::size_t>(j)]) /
                            (whitened[static_cast<std::size_t>(i)].norm() *
                             whitened[static_cast<std::size_t>(j)].norm());
      CHECK(std::abs(cosine - expect) < 0.05);
    }
  }
}

TEST_CASE("whitening reduces object codebook cross-talk") {
  auto rng = make_rng(308);
  const int side = 20;
  const auto templates = correlated_templates(8, side * side, rng);
  const WhiteningTransform wt = fit_whitening(templates, 1e-8, GridShape{1, side});

  auto ctx_rng = make_rng(309);
  const EncoderContext ctx = EncoderContext::create(2500, side, 1, ctx_rng);

  auto mean_offdiag = [&](const std::vector<ComplexVector>& vecs) {
    double acc = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      for (std::size_t j = i + 1; j < vecs.size(); ++j) {
        acc += std::abs(similarity(normalize(vecs[i]).values(), normalize(vecs[j]).values()));
        ++n;
      }
    }
    return acc / n;
  };

  std::vector<ComplexVector> raw_enc;
  std::vector<ComplexVector> white_enc;
  for (const auto& t : templates) {
    const Image img = unflatten_image(t, GridShape{1, side});
    raw_enc.push_back(encode_pixel(img, ctx));
    white_enc.push_back(encode_pixel(apply_whitening_centered(wt, img), ctx));
  }
  CHECK(mean_offdiag(white_enc) < mean_offdiag(raw_enc));
}

TEST_SUITE_END();
