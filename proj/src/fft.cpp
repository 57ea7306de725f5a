#include "vsa/fft.hpp"

#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace vsa {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft2::Fft2(int side) : side_(side) {
  if (side < 1) {
    throw std::invalid_argument("Fft2: side must be >= 1");
  }
  const int spec = spectrum_size();
  real_buf_ = fftw_alloc_real(static_cast<std::size_t>(side) * side);
  complex_buf_ = fftw_alloc_complex(static_cast<std::size_t>(spec));
  std::lock_guard<std::mutex> lock(planner_mutex());
  fwd_plan_ = fftw_plan_dft_r2c_2d(side, side, real_buf_,
                                   static_cast<fftw_complex*>(complex_buf_),
                                   FFTW_ESTIMATE);
  inv_plan_ = fftw_plan_dft_c2r_2d(side, side,
                                   static_cast<fftw_complex*>(complex_buf_),
                                   real_buf_, FFTW_ESTIMATE);
}

Fft2::~Fft2() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_plan_));
  fftw_free(real_buf_);
  fftw_free(complex_buf_);
}

void Fft2::forward(const double* grid, std::complex<double>* spectrum) {
  std::memcpy(real_buf_, grid, sizeof(double) * static_cast<std::size_t>(side_) * side_);
  fftw_execute(static_cast<fftw_plan>(fwd_plan_));
  std::memcpy(spectrum, complex_buf_,
              sizeof(std::complex<double>) * static_cast<std::size_t>(spectrum_size()));
}

void Fft2::inverse(const std::complex<double>* spectrum, double* grid) {
  std::memcpy(complex_buf_, spectrum,
              sizeof(std::complex<double>) * static_cast<std::size_t>(spectrum_size()));
  fftw_execute(static_cast<fftw_plan>(inv_plan_));
  const double scale = 1.0 / (static_cast<double>(side_) * side_);
  const std::size_t n = static_cast<std::size_t>(side_) * side_;
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = real_buf_[i] * scale;
  }
}

void Fft2::forward(const Eigen::MatrixXd& grid, Eigen::VectorXcd& spectrum) {
  spectrum.resize(spectrum_size());
  forward(grid.data(), spectrum.data());
}

void Fft2::inverse(const Eigen::VectorXcd& spectrum, Eigen::MatrixXd& grid) {
  grid.resize(side_, side_);
  inverse(spectrum.data(), grid.data());
}

}  // namespace vsa
