#pragma once

// Complex phasor vector algebra: random codeword generation, fractional power
// encoding with periodic kernels, binding (Hadamard product), bundling
// (weighted superposition), similarity, and amplitude normalization.

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vsa {

using Complex = std::complex<double>;

// Superpositions and scene vectors; component moduli are unconstrained.
using ComplexVector = Eigen::VectorXcd;

class FpeBase;

// Vector whose components all lie on the complex unit circle.
// Immutable after construction; the checked constructor rejects any
// component whose modulus deviates from 1 by more than 1e-9.
class PhasorVector {
 public:
  static constexpr double kUnitModulusTol = 1e-9;

  explicit PhasorVector(ComplexVector values);
  static PhasorVector from_phases(const Eigen::VectorXd& phases);

  Eigen::Index dim() const { return values_.size(); }
  const ComplexVector& values() const { return values_; }
  Complex operator[](Eigen::Index i) const { return values_(i); }

 private:
  struct Unchecked {};
  PhasorVector(ComplexVector values, Unchecked) : values_(std::move(values)) {}

  friend PhasorVector normalize(const ComplexVector& a);
  friend PhasorVector fpe_power(const FpeBase& base, std::int64_t x);
  friend PhasorVector bind(const PhasorVector& a, const PhasorVector& b);
  friend PhasorVector conjugate(const PhasorVector& a);
  friend class Codebook;

  ComplexVector values_;
};

// Fractional power encoding base with phases restricted to the period-th
// roots of unity. Phases are stored as integer multiples of 2*pi/period so
// wraparound is exact: fpe_power(base, x) and fpe_power(base, x + period)
// are bit-identical.
class FpeBase {
 public:
  FpeBase(std::vector<std::uint32_t> phase_indices, std::uint32_t period);

  Eigen::Index dim() const { return static_cast<Eigen::Index>(indices_.size()); }
  std::uint32_t period() const { return period_; }
  const std::vector<std::uint32_t>& phase_indices() const { return indices_; }
  // The period-th roots of unity, roots()[k] = exp(2*pi*i*k/period).
  const std::vector<Complex>& roots() const { return roots_; }

 private:
  std::vector<std::uint32_t> indices_;
  std::uint32_t period_;
  std::vector<Complex> roots_;
};

// Ordered collection of phasor codewords sharing one dimension, stored as a
// dim x size complex matrix (one column per entry) plus unique labels.
class Codebook {
 public:
  Codebook(Eigen::MatrixXcd entries, std::vector<std::string> labels);

  Eigen::Index dim() const { return entries_.rows(); }
  Eigen::Index size() const { return entries_.cols(); }
  const Eigen::MatrixXcd& matrix() const { return entries_; }
  PhasorVector entry(Eigen::Index i) const;
  const std::string& label(Eigen::Index i) const { return labels_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  Eigen::MatrixXcd entries_;
  std::vector<std::string> labels_;
};

// Random codeword with phases i.i.d. uniform on [-pi, pi).
PhasorVector random_phasor(Eigen::Index dim, std::mt19937_64& rng);

// Random FPE base; each phase index drawn uniformly from {0, ..., period-1}.
FpeBase fpe_base(Eigen::Index dim, std::uint32_t period, std::mt19937_64& rng);

// Component d of the result is exp(i * omega_d * x); computed via modular
// index arithmetic so periodicity holds exactly for any integer x.
PhasorVector fpe_power(const FpeBase& base, std::int64_t x);

// Component-wise complex product.
PhasorVector bind(const PhasorVector& a, const PhasorVector& b);
ComplexVector bind(const ComplexVector& a, const ComplexVector& b);
ComplexVector bind(const PhasorVector& a, const ComplexVector& b);
ComplexVector bind(const ComplexVector& a, const PhasorVector& b);

// Component-wise complex conjugate; inverts binding for phasor vectors.
PhasorVector conjugate(const PhasorVector& a);
ComplexVector conjugate(const ComplexVector& a);

// Weighted component-wise sum.
ComplexVector bundle(const std::vector<std::pair<double, ComplexVector>>& terms);

// Hermitian inner product normalized by the dimension:
// similarity(a, b) = (1/D) * sum_d a_d * conj(b_d).
// Self-similarity of a phasor vector is 1.
Complex similarity(const PhasorVector& a, const PhasorVector& b);
Complex similarity(const ComplexVector& a, const ComplexVector& b);
Complex similarity(const PhasorVector& a, const ComplexVector& b);
Complex similarity(const ComplexVector& a, const PhasorVector& b);

// Divides every component by its modulus. Zero components map to 1+0i, a
// fixed convention so downstream dynamics stay deterministic.
PhasorVector normalize(const ComplexVector& a);

}  // namespace vsa
