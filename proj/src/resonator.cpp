#include "vsa/resonator.hpp"

#include <cmath>
#include <stdexcept>

namespace vsa {

namespace {

void require_dims(const ComplexVector& z, const Codebook& h, const Codebook& v,
                  const Codebook& o) {
  if (h.dim() != z.size() || v.dim() != z.size() || o.dim() != z.size()) {
    throw std::invalid_argument("resonator: codebook dimension does not match input vector");
  }
}

PhasorVector project_update(const ComplexVector& unbound, const Codebook& book) {
  // M (M-adjoint u), then amplitude normalization.
  const Eigen::VectorXcd proj = book.matrix().adjoint() * unbound;
  return normalize(book.matrix() * proj);
}

}  // namespace

ResonatorState resonator_step(const ResonatorState& state, const ComplexVector& z,
                              const Codebook& h, const Codebook& v, const Codebook& o,
                              const UpdateOrder& order) {
  require_dims(z, h, v, o);
  if (state.est_h.dim() != z.size() || state.est_v.dim() != z.size() ||
      state.est_o.dim() != z.size()) {
    throw std::invalid_argument("resonator_step: state dimension mismatch");
  }
  ResonatorState next = state;
  for (Factor f : order) {
    switch (f) {
      case Factor::kH: {
        const ComplexVector unbound =
            z.cwiseProduct(next.est_v.values().conjugate())
                .cwiseProduct(next.est_o.values().conjugate());
        next.est_h = project_update(unbound, h);
        break;
      }
      case Factor::kV: {
        const ComplexVector unbound =
            z.cwiseProduct(next.est_h.values().conjugate())
                .cwiseProduct(next.est_o.values().conjugate());
        next.est_v = project_update(unbound, v);
        break;
      }
      case Factor::kO: {
        const ComplexVector unbound =
            z.cwiseProduct(next.est_h.values().conjugate())
                .cwiseProduct(next.est_v.values().conjugate());
        next.est_o = project_update(unbound, o);
        break;
      }
    }
  }
  next.iteration = state.iteration + 1;
  return next;
}

Eigen::VectorXd similarity_magnitudes(const Codebook& codebook, const PhasorVector& estimate) {
  if (codebook.dim() != estimate.dim()) {
    throw std::invalid_argument("similarity_magnitudes: dimension mismatch");
  }
  return (codebook.matrix().adjoint() * estimate.values()).cwiseAbs() /
         static_cast<double>(codebook.dim());
}

namespace {

double confidence_from_sims(const Eigen::VectorXd& sims) {
  Eigen::Index best_i = 0;
  double best = -1.0;
  double second = -1.0;
  for (Eigen::Index i = 0; i < sims.size(); ++i) {
    if (sims(i) > best) {
      second = best;
      best = sims(i);
      best_i = i;
    } else if (sims(i) > second) {
      second = sims(i);
    }
  }
  (void)best_i;
  if (best <= 0.0) {
    return 0.0;
  }
  if (sims.size() == 1) {
    return 1.0;
  }
  return (best - second) / best;
}

std::pair<Eigen::Index, double> decode_from_sims(const Eigen::VectorXd& sims) {
  Eigen::Index best_i = 0;
  double best = sims(0);
  for (Eigen::Index i = 1; i < sims.size(); ++i) {
    if (sims(i) > best) {  // strict: ties keep the lowest index
      best = sims(i);
      best_i = i;
    }
  }
  return {best_i, best};
}

}  // namespace

double confidence(const Codebook& codebook, const PhasorVector& estimate) {
  return confidence_from_sims(similarity_magnitudes(codebook, estimate));
}

double fixed_point_distance(const ResonatorState& prev, const ResonatorState& cur) {
  if (prev.est_h.dim() != cur.est_h.dim()) {
    throw std::invalid_argument("fixed_point_distance: dimension mismatch");
  }
  const double d = static_cast<double>(prev.est_h.dim());
  const double sum = (prev.est_h.values() - cur.est_h.values()).cwiseAbs().sum() +
                     (prev.est_v.values() - cur.est_v.values()).cwiseAbs().sum() +
                     (prev.est_o.values() - cur.est_o.values()).cwiseAbs().sum();
  return sum / (3.0 * d);
}

std::pair<Eigen::Index, double> decode(const PhasorVector& estimate, const Codebook& codebook) {
  return decode_from_sims(similarity_magnitudes(codebook, estimate));
}

FactorizationResult run(const ComplexVector& z, const SceneCodebooks& codebooks,
                        const StoppingCriterion& criterion, std::mt19937_64& rng,
                        std::vector<IterationTrace>* trace, const UpdateOrder& order) {
  require_dims(z, codebooks.h, codebooks.v, codebooks.o);
  if (criterion.max_iters < 0) {
    throw std::invalid_argument("run: max_iters must be >= 0");
  }

  const Eigen::Index dim = z.size();
  ResonatorState state{random_phasor(dim, rng), random_phasor(dim, rng),
                       random_phasor(dim, rng)};

  auto sims_of = [&](const ResonatorState& s, Factor f) {
    switch (f) {
      case Factor::kH:
        return similarity_magnitudes(codebooks.h, s.est_h);
      case Factor::kV:
        return similarity_magnitudes(codebooks.v, s.est_v);
      default:
        return similarity_magnitudes(codebooks.o, s.est_o);
    }
  };

  std::array<Eigen::VectorXd, 3> sims{sims_of(state, Factor::kH), sims_of(state, Factor::kV),
                                      sims_of(state, Factor::kO)};
  bool converged = false;

  for (int t = 0; t < criterion.max_iters; ++t) {
    ResonatorState next = resonator_step(state, z, codebooks.h, codebooks.v, codebooks.o, order);
    const double dist = fixed_point_distance(state, next);
    for (int f = 0; f < 3; ++f) {
      sims[static_cast<std::size_t>(f)] = sims_of(next, static_cast<Factor>(f));
      next.confidence_trace[static_cast<std::size_t>(f)].push_back(
          confidence_from_sims(sims[static_cast<std::size_t>(f)]));
    }
    state = std::move(next);

    if (trace != nullptr) {
      IterationTrace row;
      row.t = state.iteration;
      for (int f = 0; f < 3; ++f) {
        row.decoded[static_cast<std::size_t>(f)] =
            decode_from_sims(sims[static_cast<std::size_t>(f)]).first;
        row.confidences[static_cast<std::size_t>(f)] =
            state.confidence_trace[static_cast<std::size_t>(f)].back();
      }
      row.fp_distance = dist;
      trace->push_back(row);
    }

    if (criterion.kind == StoppingKind::kFixedPoint && dist < criterion.epsilon) {
      converged = true;
      break;
    }
    if (criterion.kind == StoppingKind::kConfidence) {
      bool all = true;
      for (int f = 0; f < 3; ++f) {
        if (state.confidence_trace[static_cast<std::size_t>(f)].back() <
            criterion.conf_threshold) {
          all = false;
          break;
        }
      }
      if (all) {
        converged = true;
        break;
      }
    }
  }

  FactorizationResult result;
  result.x_index = decode_from_sims(sims[0]).first;
  result.y_index = decode_from_sims(sims[1]).first;
  result.k_index = decode_from_sims(sims[2]).first;
  result.converged = converged;
  result.iterations = state.iteration;
  for (int f = 0; f < 3; ++f) {
    result.final_confidences[static_cast<std::size_t>(f)] =
        confidence_from_sims(sims[static_cast<std::size_t>(f)]);
  }
  result.final_estimate = state.est_h.values()
                              .cwiseProduct(state.est_v.values())
                              .cwiseProduct(state.est_o.values());
  return result;
}

}  // namespace vsa
