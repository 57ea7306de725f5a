#pragma once

// Convolutional sparse coding: toroidal reconstruction from a filter
// dictionary, the L1-regularized objective, FISTA coefficient inference, and
// alternating dictionary learning with unit-norm filter projection.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vsa/image.hpp"

namespace vsa {

// n real filters of size patch x patch. Storage per filter is
// (row = v, col = u), matching Image's (row = y, col = x). Unit Euclidean
// norm is a post-learning constraint, not a construction invariant;
// inference only requires finite filters.
class Dictionary {
 public:
  explicit Dictionary(std::vector<Eigen::MatrixXd> filters);

  int count() const { return static_cast<int>(filters_.size()); }
  int patch() const { return static_cast<int>(filters_.front().rows()); }
  const Eigen::MatrixXd& filter(int j) const { return filters_.at(static_cast<std::size_t>(j)); }
  const std::vector<Eigen::MatrixXd>& filters() const { return filters_; }

 private:
  std::vector<Eigen::MatrixXd> filters_;
};

// n real coefficient maps of size side x side, one per dictionary filter.
class FeatureMaps {
 public:
  explicit FeatureMaps(std::vector<Eigen::MatrixXd> maps);
  static FeatureMaps zeros(int count, int side);

  int count() const { return static_cast<int>(maps_.size()); }
  int side() const { return static_cast<int>(maps_.front().rows()); }
  const Eigen::MatrixXd& map(int j) const { return maps_.at(static_cast<std::size_t>(j)); }
  Eigen::MatrixXd& map(int j) { return maps_.at(static_cast<std::size_t>(j)); }
  double at(int j, int x, int y) const { return maps_[static_cast<std::size_t>(j)](y, x); }
  double& at(int j, int x, int y) { return maps_[static_cast<std::size_t>(j)](y, x); }

 private:
  std::vector<Eigen::MatrixXd> maps_;
};

struct SparseConfig {
  double lambda = 0.1;  // L1 penalty weight
  int max_iters = 200;
  double step = 0.0;  // gradient step; <= 0 selects 1/Lipschitz automatically
  double tol = 1e-4;  // relative objective change at which inference stops
  bool momentum = true;  // false runs plain ISTA (monotone descent)
};

struct LearnConfig {
  SparseConfig inference;
  int rounds = 50;  // one inference pass + one filter gradient pass each
  std::uint64_t seed = 1;  // filter initialization
  int threads = 0;  // parallel inference across images; 0 = hardware
};

// 2-D circular (toroidal) convolution of an L x L map with a P x P filter,
// P <= L. A unit coefficient at (x0, y0) stamps the filter with its (0, 0)
// corner at (x0, y0).
Eigen::MatrixXd convolve_circular(const Eigen::MatrixXd& map, const Eigen::MatrixXd& filter);

// sum_j convolve_circular(maps[j], filters[j]); not clipped to [0, 1].
Image reconstruct(const Dictionary& dict, const FeatureMaps& maps);

// 0.5 * ||image - reconstruct(dict, maps)||_2^2 + lambda * sum_j ||maps[j]||_1
double objective(const Dictionary& dict, const FeatureMaps& maps, const Image& image,
                 double lambda);

// Proximal operator of theta * |x|: sign(x) * max(|x| - theta, 0).
double soft_threshold(double x, double theta);

// Largest eigenvalue of the normal operator A -> adjoint(forward(A)) of the
// convolutional synthesis operator at the given map side, estimated by power
// iteration. Deterministic (fixed internal start vector).
double operator_lipschitz(const Dictionary& dict, int side);

// FISTA on the objective above (restart on objective increase; returns the
// best iterate seen, so the result never scores worse than the start point).
// With cfg.momentum = false this is plain ISTA. objective_trace, when given,
// receives the objective value after every iteration.
FeatureMaps infer_maps(const Image& image, const Dictionary& dict, const SparseConfig& cfg,
                       std::vector<double>* objective_trace = nullptr);
FeatureMaps infer_maps(const Image& image, const Dictionary& dict, const SparseConfig& cfg,
                       const FeatureMaps& init, std::vector<double>* objective_trace = nullptr);

// Alternating minimization: per round, coefficients are re-inferred with the
// dictionary fixed (warm-started from the previous round), then every filter
// takes one projected gradient step followed by renormalization to unit norm.
// The training objective is non-increasing across rounds; a filter step that
// would raise it is shrunk and, if necessary, discarded. round_objectives,
// when given, receives the post-inference total objective per round.
Dictionary learn_dictionary(const std::vector<Image>& images, int n, int patch,
                            const LearnConfig& cfg,
                            std::vector<double>* round_objectives = nullptr);

}  // namespace vsa
