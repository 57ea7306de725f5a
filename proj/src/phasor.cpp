#include "vsa/phasor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace vsa {

namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a) +
                                " vs " + std::to_string(b));
  }
}

}  // namespace

PhasorVector::PhasorVector(ComplexVector values) : values_(std::move(values)) {
  if (values_.size() == 0) {
    throw std::invalid_argument("PhasorVector: dimension must be >= 1");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (std::abs(std::abs(values_(i)) - 1.0) > kUnitModulusTol) {
      throw std::invalid_argument(
          "PhasorVector: component " + std::to_string(i) +
          " is not unit modulus (|c| = " + std::to_string(std::abs(values_(i))) + ")");
    }
  }
}

PhasorVector PhasorVector::from_phases(const Eigen::VectorXd& phases) {
  ComplexVector v(phases.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    v(i) = std::polar(1.0, phases(i));
  }
  return PhasorVector(std::move(v), Unchecked{});
}

FpeBase::FpeBase(std::vector<std::uint32_t> phase_indices, std::uint32_t period)
    : indices_(std::move(phase_indices)), period_(period) {
  if (period_ == 0) {
    throw std::invalid_argument("FpeBase: period must be >= 1");
  }
  if (indices_.empty()) {
    throw std::invalid_argument("FpeBase: dimension must be >= 1");
  }
  for (std::uint32_t k : indices_) {
    if (k >= period_) {
      throw std::invalid_argument("FpeBase: phase index out of range");
    }
  }
  roots_.resize(period_);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(period_);
  for (std::uint32_t k = 0; k < period_; ++k) {
    roots_[k] = std::polar(1.0, step * static_cast<double>(k));
  }
}

Codebook::Codebook(Eigen::MatrixXcd entries, std::vector<std::string> labels)
    : entries_(std::move(entries)), labels_(std::move(labels)) {
  if (entries_.cols() < 1) {
    throw std::invalid_argument("Codebook: must contain at least one entry");
  }
  if (static_cast<Eigen::Index>(labels_.size()) != entries_.cols()) {
    throw std::invalid_argument("Codebook: label count does not match entry count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw std::invalid_argument("Codebook: duplicate label '" + l + "'");
    }
  }
  for (Eigen::Index c = 0; c < entries_.cols(); ++c) {
    for (Eigen::Index r = 0; r < entries_.rows(); ++r) {
      if (std::abs(std::abs(entries_(r, c)) - 1.0) > PhasorVector::kUnitModulusTol) {
        throw std::invalid_argument("Codebook: entry " + std::to_string(c) +
                                    " is not a phasor vector");
      }
    }
  }
}

PhasorVector Codebook::entry(Eigen::Index i) const {
  if (i < 0 || i >= size()) {
    throw std::invalid_argument("Codebook: entry index out of range");
  }
  return PhasorVector(entries_.col(i), PhasorVector::Unchecked{});
}

PhasorVector random_phasor(Eigen::Index dim, std::mt19937_64& rng) {
  if (dim < 1) {
    throw std::invalid_argument("random_phasor: dim must be >= 1");
  }
  std::uniform_real_distribution<double> dist(-std::numbers::pi, std::numbers::pi);
  Eigen::VectorXd phases(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    phases(i) = dist(rng);
  }
  return PhasorVector::from_phases(phases);
}

FpeBase fpe_base(Eigen::Index dim, std::uint32_t period, std::mt19937_64& rng) {
  if (dim < 1) {
    throw std::invalid_argument("fpe_base: dim must be >= 1");
  }
  if (period == 0) {
    throw std::invalid_argument("fpe_base: period must be >= 1");
  }
  std::uniform_int_distribution<std::uint32_t> dist(0, period - 1);
  std::vector<std::uint32_t> indices(static_cast<std::size_t>(dim));
  for (auto& k : indices) {
    k = dist(rng);
  }
  return FpeBase(std::move(indices), period);
}

PhasorVector fpe_power(const FpeBase& base, std::int64_t x) {
  const std::int64_t period = static_cast<std::int64_t>(base.period());
  std::int64_t r = x % period;
  if (r < 0) {
    r += period;
  }
  ComplexVector v(base.dim());
  const auto& roots = base.roots();
  const auto& idx = base.phase_indices();
  for (Eigen::Index d = 0; d < base.dim(); ++d) {
    const std::int64_t k = static_cast<std::int64_t>(idx[static_cast<std::size_t>(d)]);
    v(d) = roots[static_cast<std::size_t>((k * r) % period)];
  }
  return PhasorVector(std::move(v), PhasorVector::Unchecked{});
}

PhasorVector bind(const PhasorVector& a, const PhasorVector& b) {
  require_same_dim(a.dim(), b.dim());
  return PhasorVector(a.values().cwiseProduct(b.values()), PhasorVector::Unchecked{});
}

ComplexVector bind(const ComplexVector& a, const ComplexVector& b) {
  require_same_dim(a.size(), b.size());
  return a.cwiseProduct(b);
}

ComplexVector bind(const PhasorVector& a, const ComplexVector& b) {
  require_same_dim(a.dim(), b.size());
  return a.values().cwiseProduct(b);
}

ComplexVector bind(const ComplexVector& a, const PhasorVector& b) {
  require_same_dim(a.size(), b.dim());
  return a.cwiseProduct(b.values());
}

PhasorVector conjugate(const PhasorVector& a) {
  return PhasorVector(a.values().conjugate(), PhasorVector::Unchecked{});
}

ComplexVector conjugate(const ComplexVector& a) { return a.conjugate(); }

ComplexVector bundle(const std::vector<std::pair<double, ComplexVector>>& terms) {
  if (terms.empty()) {
    throw std::invalid_argument("bundle: empty term list");
  }
  const Eigen::Index dim = terms.front().second.size();
  ComplexVector acc = ComplexVector::Zero(dim);
  for (const auto& [w, v] : terms) {
    require_same_dim(dim, v.size());
    acc += w * v;
  }
  return acc;
}

Complex similarity(const ComplexVector& a, const ComplexVector& b) {
  require_same_dim(a.size(), b.size());
  // Eigen's dot conjugates its first argument, so b.dot(a) = sum a_d conj(b_d).
  return b.dot(a) / static_cast<double>(a.size());
}

Complex similarity(const PhasorVector& a, const PhasorVector& b) {
  return similarity(a.values(), b.values());
}

Complex similarity(const PhasorVector& a, const ComplexVector& b) {
  return similarity(a.values(), b);
}

Complex similarity(const ComplexVector& a, const PhasorVector& b) {
  return similarity(a, b.values());
}

PhasorVector normalize(const ComplexVector& a) {
  ComplexVector v(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double m = std::abs(a(i));
    v(i) = (m == 0.0) ? Complex(1.0, 0.0) : a(i) / m;
  }
  return PhasorVector(std::move(v), PhasorVector::Unchecked{});
}

}  // namespace vsa
