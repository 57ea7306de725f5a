#include "vsa/multi_object.hpp"

#include <cmath>
#include <stdexcept>

namespace vsa {

ComplexVector explain_away(const ComplexVector& z, const ComplexVector& z_hat) {
  if (z.size() != z_hat.size()) {
    throw std::invalid_argument("explain_away: dimension mismatch");
  }
  const double coef = std::abs(z_hat.dot(z)) / static_cast<double>(z.size());
  return z - coef * z_hat;
}

std::vector<FactorizationResult> factorize_multi(const ComplexVector& z,
                                                 const SceneCodebooks& codebooks, int m,
                                                 const StoppingCriterion& criterion,
                                                 std::mt19937_64& rng,
                                                 const MultiObjectOptions& options) {
  if (m < 1) {
    throw std::invalid_argument("factorize_multi: m must be >= 1");
  }
  std::vector<FactorizationResult> results;
  results.reserve(static_cast<std::size_t>(m));
  ComplexVector residual = z;
  for (int r = 0; r < m; ++r) {
    FactorizationResult res = run(residual, codebooks, criterion, rng, nullptr, options.order);
    ComplexVector estimate =
        options.use_cleaned_estimate
            ? compose_query(res.x_index, res.y_index, res.k_index, codebooks)
            : res.final_estimate;
    residual = explain_away(residual, estimate);
    results.push_back(std::move(res));
  }
  return results;
}

namespace {

// Augmenting-path bipartite matching; sizes here are tiny (m <= a handful).
bool try_assign(int truth_i, const std::vector<std::vector<int>>& edges,
                std::vector<int>& result_owner, std::vector<bool>& visited) {
  for (int r : edges[static_cast<std::size_t>(truth_i)]) {
    if (visited[static_cast<std::size_t>(r)]) {
      continue;
    }
    visited[static_cast<std::size_t>(r)] = true;
    if (result_owner[static_cast<std::size_t>(r)] < 0 ||
        try_assign(result_owner[static_cast<std::size_t>(r)], edges, result_owner, visited)) {
      result_owner[static_cast<std::size_t>(r)] = truth_i;
      return true;
    }
  }
  return false;
}

}  // namespace

double graded_accuracy(const std::vector<FactorizationResult>& results,
                       const MultiSceneTruth& truth, int position_tolerance, int period) {
  if (truth.placements.empty()) {
    return 0.0;
  }
  if (position_tolerance > 0 && period <= 0) {
    throw std::invalid_argument("graded_accuracy: tolerant matching requires the period");
  }
  auto close = [&](Eigen::Index a, Eigen::Index b) {
    if (position_tolerance == 0) {
      return a == b;
    }
    const int d = static_cast<int>(std::abs(static_cast<long>(a - b))) % period;
    return std::min(d, period - d) <= position_tolerance;
  };

  const int n_truth = truth.count();
  std::vector<std::vector<int>> edges(static_cast<std::size_t>(n_truth));
  for (int ti = 0; ti < n_truth; ++ti) {
    const auto& p = truth.placements[static_cast<std::size_t>(ti)];
    for (int ri = 0; ri < static_cast<int>(results.size()); ++ri) {
      const auto& r = results[static_cast<std::size_t>(ri)];
      if (r.k_index == p.k && close(r.x_index, p.x) && close(r.y_index, p.y)) {
        edges[static_cast<std::size_t>(ti)].push_back(ri);
      }
    }
  }
  std::vector<int> result_owner(results.size(), -1);
  int matched = 0;
  for (int ti = 0; ti < n_truth; ++ti) {
    std::vector<bool> visited(results.size(), false);
    if (try_assign(ti, edges, result_owner, visited)) {
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(n_truth);
}

}  // namespace vsa
