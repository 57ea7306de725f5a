#pragma once

#include <Eigen/Dense>

namespace vsa {

// Square grayscale grid. Storage is (row = y, col = x); at(x, y) follows the
// horizontal/vertical index convention used throughout the encoders.
// Dataset images use values in [0, 1]; whitened templates may leave that
// range, so only squareness and finiteness are enforced.
class Image {
 public:
  explicit Image(Eigen::MatrixXd grid);
  static Image zeros(int side);

  int side() const { return static_cast<int>(grid_.rows()); }
  double at(int x, int y) const { return grid_(y, x); }
  double& at(int x, int y) { return grid_(y, x); }
  const Eigen::MatrixXd& grid() const { return grid_; }
  Eigen::MatrixXd& grid() { return grid_; }

 private:
  Eigen::MatrixXd grid_;
};

// Toroidal shift: output pixel (x + dx mod L, y + dy mod L) = input (x, y).
Image circular_shift(const Image& img, int dx, int dy);
Eigen::MatrixXd circular_shift(const Eigen::MatrixXd& grid, int dx, int dy);

}  // namespace vsa
