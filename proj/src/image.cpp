#include "vsa/image.hpp"

#include <stdexcept>

namespace vsa {

Image::Image(Eigen::MatrixXd grid) : grid_(std::move(grid)) {
  if (grid_.rows() != grid_.cols()) {
    throw std::invalid_argument("Image: grid must be square");
  }
  if (grid_.size() == 0) {
    throw std::invalid_argument("Image: grid must be non-empty");
  }
  if (!grid_.allFinite()) {
    throw std::invalid_argument("Image: grid contains non-finite values");
  }
}

Image Image::zeros(int side) { return Image(Eigen::MatrixXd::Zero(side, side)); }

Eigen::MatrixXd circular_shift(const Eigen::MatrixXd& grid, int dx, int dy) {
  const int rows = static_cast<int>(grid.rows());
  const int cols = static_cast<int>(grid.cols());
  auto wrap = [](int v, int n) {
    int r = v % n;
    return r < 0 ? r + n : r;
  };
  Eigen::MatrixXd out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    const int ty = wrap(y + dy, rows);
    for (int x = 0; x < cols; ++x) {
      out(ty, wrap(x + dx, cols)) = grid(y, x);
    }
  }
  return out;
}

Image circular_shift(const Image& img, int dx, int dy) {
  return Image(circular_shift(img.grid(), dx, dy));
}

}  // namespace vsa
