#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace vsa {

// Real 2-D FFT workspace for side x side grids (FFTW r2c/c2r). Each instance
// owns its buffers and plans; instances are not shared across threads. Plan
// creation is serialized internally because FFTW's planner is not
// thread-safe.
class Fft2 {
 public:
  explicit Fft2(int side);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  int side() const { return side_; }
  // Number of complex bins in the non-redundant half plane.
  int spectrum_size() const { return side_ * (side_ / 2 + 1); }

  // grid is a contiguous side*side real array (any consistent 2-D layout);
  // spectrum holds spectrum_size() complex bins.
  void forward(const double* grid, std::complex<double>* spectrum);
  // Inverse including the 1/(side*side) normalization.
  void inverse(const std::complex<double>* spectrum, double* grid);

  void forward(const Eigen::MatrixXd& grid, Eigen::VectorXcd& spectrum);
  void inverse(const Eigen::VectorXcd& spectrum, Eigen::MatrixXd& grid);

 private:
  int side_;
  void* fwd_plan_;
  void* inv_plan_;
  double* real_buf_;
  void* complex_buf_;
};

}  // namespace vsa
