#pragma once

// Sequential factorization of multi-object scenes: run the resonator, then
// subtract the found object's vector contribution from the scene vector
// (explaining away) and repeat. Scoring is graded: the fraction of
// ground-truth (object, x, y) triples matched by the extractions.

#include <random>
#include <vector>

#include "vsa/encoder.hpp"
#include "vsa/resonator.hpp"

namespace vsa {

struct ScenePlacement {
  Eigen::Index k = 0;  // object index into the O codebook
  Eigen::Index x = 0;
  Eigen::Index y = 0;
};

struct MultiSceneTruth {
  std::vector<ScenePlacement> placements;
  int count() const { return static_cast<int>(placements.size()); }
};

// z_next = z - (|<z_hat, z>| / D) * z_hat.
ComplexVector explain_away(const ComplexVector& z, const ComplexVector& z_hat);

struct MultiObjectOptions {
  // false subtracts the resonator's raw output (product of the three phasor
  // estimates); true subtracts the product of the decoded codebook entries.
  bool use_cleaned_estimate = false;
  UpdateOrder order = kDefaultUpdateOrder;
};

// m resonator runs, each followed by explain_away on that run's output.
// Results are returned in extraction order.
std::vector<FactorizationResult> factorize_multi(const ComplexVector& z,
                                                 const SceneCodebooks& codebooks, int m,
                                                 const StoppingCriterion& criterion,
                                                 std::mt19937_64& rng,
                                                 const MultiObjectOptions& options = {});

// Fraction of ground-truth triples matched by at least one result, each
// result consumed at most once (maximum bipartite matching). With
// position_tolerance > 0 a result matches when the object agrees and both
// toroidal coordinate distances (modulo period) are within the tolerance.
double graded_accuracy(const std::vector<FactorizationResult>& results,
                       const MultiSceneTruth& truth, int position_tolerance = 0,
                       int period = 0);

}  // namespace vsa
