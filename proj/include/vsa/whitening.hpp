#pragma once

// SVD whitening of flattened object templates (pixel space) or canonical
// feature maps (coefficient space): after the transform the empirical
// covariance of the template set restricted to its span is the identity.

#include <vector>

#include <Eigen/Dense>

#include "vsa/image.hpp"
#include "vsa/sparse.hpp"

namespace vsa {

// Shape of the grids a transform was fitted on: count = 1 for single images,
// count = n for feature-map stacks. Flattening is count-major, then row (y),
// then column (x): index = j * side^2 + y * side + x.
struct GridShape {
  int count = 1;
  int side = 0;
};

// W = basis * diag(inv_scale) * basis^T, kept in factored form because the
// flattened space can be large (n * side^2) while the rank is bounded by the
// number of templates. The mean of the fitted template set is retained: the
// codebook pipeline whitens mean-subtracted templates, since W alone
// amplifies the common mean by the inverse of the smallest kept singular
// value and would collapse the template set onto one direction.
class WhiteningTransform {
 public:
  WhiteningTransform(Eigen::MatrixXd basis, Eigen::VectorXd inv_scale, Eigen::VectorXd mean,
                     double epsilon, GridShape source_shape);

  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& inv_scale() const { return inv_scale_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  double epsilon() const { return epsilon_; }
  const GridShape& source_shape() const { return shape_; }
  Eigen::Index flat_size() const { return basis_.rows(); }

  // W * flat; pure linear map, zero in -> zero out.
  Eigen::VectorXd apply_flat(const Eigen::VectorXd& flat) const;
  // W * (flat - mean); the form used when building whitened codebooks.
  Eigen::VectorXd apply_flat_centered(const Eigen::VectorXd& flat) const;
  // Dense W; only sensible for small flattened sizes.
  Eigen::MatrixXd dense() const { return basis_ * inv_scale_.asDiagonal() * basis_.transpose(); }

 private:
  Eigen::MatrixXd basis_;
  Eigen::VectorXd inv_scale_;
  Eigen::VectorXd mean_;
  double epsilon_;
  GridShape shape_;
};

// Fits on the mean-centered template matrix. epsilon_rel floors each singular
// value of the covariance-scaled data at epsilon_rel times the largest one,
// so rank-deficient template sets stay finite.
WhiteningTransform fit_whitening(const std::vector<Eigen::VectorXd>& templates,
                                 double epsilon_rel, GridShape shape);

Eigen::VectorXd flatten(const Image& image);
Eigen::VectorXd flatten(const FeatureMaps& maps);
Image unflatten_image(const Eigen::VectorXd& flat, const GridShape& shape);
FeatureMaps unflatten_maps(const Eigen::VectorXd& flat, const GridShape& shape);

// Flatten, multiply by W, reshape. Pure linear map (no centering), so the
// zero template maps to zero.
Image apply_whitening(const WhiteningTransform& wt, const Image& image);
FeatureMaps apply_whitening(const WhiteningTransform& wt, const FeatureMaps& maps);

// Mean-subtracted variant used for codebook construction.
Image apply_whitening_centered(const WhiteningTransform& wt, const Image& image);
FeatureMaps apply_whitening_centered(const WhiteningTransform& wt, const FeatureMaps& maps);

}  // namespace vsa
