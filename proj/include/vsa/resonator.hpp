#pragma once

// Resonator network: factorizes a scene vector into horizontal position,
// vertical position and object identity by iterated unbind-project-normalize
// updates against the three codebooks, with fixed-point or confidence-based
// stopping and per-factor confidence reporting.

#include <array>
#include <random>
#include <vector>

#include "vsa/encoder.hpp"
#include "vsa/phasor.hpp"

namespace vsa {

enum class Factor { kH = 0, kV = 1, kO = 2 };
using UpdateOrder = std::array<Factor, 3>;
inline constexpr UpdateOrder kDefaultUpdateOrder{Factor::kH, Factor::kV, Factor::kO};

struct ResonatorState {
  PhasorVector est_h;
  PhasorVector est_v;
  PhasorVector est_o;
  int iteration = 0;
  // One confidence value per completed iteration, per factor (H, V, O).
  std::array<std::vector<double>, 3> confidence_trace;
};

enum class StoppingKind { kFixedPoint, kConfidence, kMaxItersOnly };

struct StoppingCriterion {
  StoppingKind kind = StoppingKind::kFixedPoint;
  double epsilon = 0.01;      // fixed-point distance threshold
  double conf_threshold = 0.6;
  int max_iters = 100;
};

struct FactorizationResult {
  Eigen::Index x_index = 0;
  Eigen::Index y_index = 0;
  Eigen::Index k_index = 0;
  bool converged = false;
  int iterations = 0;
  std::array<double, 3> final_confidences{0.0, 0.0, 0.0};
  ComplexVector final_estimate;  // est_h o est_v o est_o at the stop point
};

// Per-iteration snapshot recorded by run() when a trace sink is supplied.
struct IterationTrace {
  int t = 0;
  std::array<Eigen::Index, 3> decoded{0, 0, 0};
  std::array<double, 3> confidences{0.0, 0.0, 0.0};
  double fp_distance = 0.0;
};

// One full sweep: updates the H, V, O estimates in the given order, each
// update unbinding z by the conjugates of the freshest other two estimates,
// projecting through the codebook (M applied to M-adjoint times the vector)
// and renormalizing amplitudes. Increments the iteration counter by one.
ResonatorState resonator_step(const ResonatorState& state, const ComplexVector& z,
                              const Codebook& h, const Codebook& v, const Codebook& o,
                              const UpdateOrder& order = kDefaultUpdateOrder);

// |similarity| against every entry of the codebook.
Eigen::VectorXd similarity_magnitudes(const Codebook& codebook, const PhasorVector& estimate);

// (a - b) / a where a and b are the largest and second largest
// |similarity| against the codebook. Returns 0 when a == 0 and 1 for a
// single-entry codebook with a > 0.
double confidence(const Codebook& codebook, const PhasorVector& estimate);

// Mean absolute component difference over the three concatenated estimates.
double fixed_point_distance(const ResonatorState& prev, const ResonatorState& cur);

// Index of the entry with largest |similarity| and that magnitude; ties go to
// the lowest index.
std::pair<Eigen::Index, double> decode(const PhasorVector& estimate, const Codebook& codebook);

// Random initialization (draw order: H, V, O estimates), then sweeps until
// the criterion fires or max_iters is reached. Decodes each factor against
// its codebook at the stop point. When trace is non-null every iteration's
// decoded indices, confidences and fixed-point distance are appended to it.
FactorizationResult run(const ComplexVector& z, const SceneCodebooks& codebooks,
                        const StoppingCriterion& criterion, std::mt19937_64& rng,
                        std::vector<IterationTrace>* trace = nullptr,
                        const UpdateOrder& order = kDefaultUpdateOrder);

}  // namespace vsa
