#include "vsa/whitening.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace vsa {

WhiteningTransform::WhiteningTransform(Eigen::MatrixXd basis, Eigen::VectorXd inv_scale,
                                       Eigen::VectorXd mean, double epsilon,
                                       GridShape source_shape)
    : basis_(std::move(basis)),
      inv_scale_(std::move(inv_scale)),
      mean_(std::move(mean)),
      epsilon_(epsilon),
      shape_(source_shape) {
  if (basis_.cols() != inv_scale_.size()) {
    throw std::invalid_argument("WhiteningTransform: basis/scale size mismatch");
  }
  if (mean_.size() != basis_.rows()) {
    throw std::invalid_argument("WhiteningTransform: mean size mismatch");
  }
  if (!basis_.allFinite() || !inv_scale_.allFinite() || !mean_.allFinite()) {
    throw std::invalid_argument("WhiteningTransform: non-finite transform");
  }
}

Eigen::VectorXd WhiteningTransform::apply_flat(const Eigen::VectorXd& flat) const {
  if (flat.size() != basis_.rows()) {
    throw std::invalid_argument("apply_whitening: flattened size mismatch");
  }
  return basis_ * (inv_scale_.asDiagonal() * (basis_.transpose() * flat));
}

Eigen::VectorXd WhiteningTransform::apply_flat_centered(const Eigen::VectorXd& flat) const {
  if (flat.size() != basis_.rows()) {
    throw std::invalid_argument("apply_whitening: flattened size mismatch");
  }
  return apply_flat(flat - mean_);
}

WhiteningTransform fit_whitening(const std::vector<Eigen::VectorXd>& templates,
                                 double epsilon_rel, GridShape shape) {
  if (templates.size() < 2) {
    throw std::invalid_argument("fit_whitening: need at least 2 templates");
  }
  if (epsilon_rel < 0.0) {
    throw std::invalid_argument("fit_whitening: epsilon must be >= 0");
  }
  const Eigen::Index flat = templates.front().size();
  const auto n = static_cast<Eigen::Index>(templates.size());
  if (flat != static_cast<Eigen::Index>(shape.count) * shape.side * shape.side) {
    throw std::invalid_argument("fit_whitening: shape does not match template length");
  }
  Eigen::MatrixXd data(flat, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (templates[static_cast<std::size_t>(i)].size() != flat) {
      throw std::invalid_argument("fit_whitening: templates must share one length");
    }
    data.col(i) = templates[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd mean = data.rowwise().mean();
  data.colwise() -= mean;
  // Scale so singular values are standard deviations along principal axes.
  data /= std::sqrt(static_cast<double>(n - 1));

  Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
  const Eigen::VectorXd sigma = svd.singularValues();
  const double floor = epsilon_rel * (sigma.size() > 0 ? sigma(0) : 0.0);
  Eigen::VectorXd inv_scale(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = std::max(sigma(i), floor);
    inv_scale(i) = s > 0.0 ? 1.0 / s : 0.0;
  }
  return WhiteningTransform(svd.matrixU(), std::move(inv_scale), std::move(mean), epsilon_rel,
                            shape);
}

Eigen::VectorXd flatten(const Image& image) {
  const int side = image.side();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(side) * side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      flat(static_cast<Eigen::Index>(y) * side + x) = image.at(x, y);
    }
  }
  return flat;
}

Eigen::VectorXd flatten(const FeatureMaps& maps) {
  const int side = maps.side();
  const int n = maps.count();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(n) * side * side);
  Eigen::Index i = 0;
  for (int j = 0; j < n; ++j) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        flat(i++) = maps.at(j, x, y);
      }
    }
  }
  return flat;
}

Image unflatten_image(const Eigen::VectorXd& flat, const GridShape& shape) {
  if (shape.count != 1 || flat.size() != static_cast<Eigen::Index>(shape.side) * shape.side) {
    throw std::invalid_argument("unflatten_image: shape mismatch");
  }
  Image img = Image::zeros(shape.side);
  for (int y = 0; y < shape.side; ++y) {
    for (int x = 0; x < shape.side; ++x) {
      img.at(x, y) = flat(static_cast<Eigen::Index>(y) * shape.side + x);
    }
  }
  return img;
}

FeatureMaps unflatten_maps(const Eigen::VectorXd& flat, const GridShape& shape) {
  if (flat.size() != static_cast<Eigen::Index>(shape.count) * shape.side * shape.side) {
    throw std::invalid_argument("unflatten_maps: shape mismatch");
  }
  FeatureMaps maps = FeatureMaps::zeros(shape.count, shape.side);
  Eigen::Index i = 0;
  for (int j = 0; j < shape.count; ++j) {
    for (int y = 0; y < shape.side; ++y) {
      for (int x = 0; x < shape.side; ++x) {
        maps.at(j, x, y) = flat(i++);
      }
    }
  }
  return maps;
}

Image apply_whitening(const WhiteningTransform& wt, const Image& image) {
  if (wt.source_shape().count != 1 || wt.source_shape().side != image.side()) {
    throw std::invalid_argument("apply_whitening: image shape does not match transform");
  }
  return unflatten_image(wt.apply_flat(flatten(image)), wt.source_shape());
}

FeatureMaps apply_whitening(const WhiteningTransform& wt, const FeatureMaps& maps) {
  if (wt.source_shape().count != maps.count() || wt.source_shape().side != maps.side()) {
    throw std::invalid_argument("apply_whitening: maps shape does not match transform");
  }
  return unflatten_maps(wt.apply_flat(flatten(maps)), wt.source_shape());
}

Image apply_whitening_centered(const WhiteningTransform& wt, const Image& image) {
  if (wt.source_shape().count != 1 || wt.source_shape().side != image.side()) {
    throw std::invalid_argument("apply_whitening: image shape does not match transform");
  }
  return unflatten_image(wt.apply_flat_centered(flatten(image)), wt.source_shape());
}

FeatureMaps apply_whitening_centered(const WhiteningTransform& wt, const FeatureMaps& maps) {
  if (wt.source_shape().count != maps.count() || wt.source_shape().side != maps.side()) {
    throw std::invalid_argument("apply_whitening: maps shape does not match transform");
  }
  return unflatten_maps(wt.apply_flat_centered(flatten(maps)), wt.source_shape());
}

}  // namespace vsa
