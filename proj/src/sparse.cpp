#include "vsa/sparse.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vsa/errors.hpp"
#include "vsa/fft.hpp"
#include "vsa/parallel.hpp"
#include "vsa/rng.hpp"

namespace vsa {

namespace {

void validate_sparse_config(const SparseConfig& cfg) {
  if (cfg.lambda < 0.0) {
    throw std::invalid_argument("SparseConfig: lambda must be >= 0");
  }
  if (cfg.max_iters < 1) {
    throw std::invalid_argument("SparseConfig: max_iters must be >= 1");
  }
  if (cfg.tol <= 0.0) {
    throw std::invalid_argument("SparseConfig: tol must be > 0");
  }
}

// FFT workspace bound to one (dictionary, side): padded filter spectra plus
// the Parseval weights of the non-redundant half plane.
class ConvBasis {
 public:
  ConvBasis(const Dictionary& dict, int side)
      : side_(side), count_(dict.count()), fft_(side) {
    if (dict.patch() > side) {
      throw std::invalid_argument("filter patch " + std::to_string(dict.patch()) +
                                  " exceeds grid side " + std::to_string(side));
    }
    const int patch = dict.patch();
    filter_spec_.resize(static_cast<std::size_t>(count_));
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(side, side);
    for (int j = 0; j < count_; ++j) {
      padded.setZero();
      padded.block(0, 0, patch, patch) = dict.filter(j);
      fft_.forward(padded, filter_spec_[static_cast<std::size_t>(j)]);
    }
    // Bins on the self-conjugate columns of the r2c half plane count once,
    // all others twice.
    const int half = side / 2 + 1;
    weights_.resize(fft_.spectrum_size());
    for (int i0 = 0; i0 < side; ++i0) {
      for (int i1 = 0; i1 < half; ++i1) {
        const bool self_conj = (i1 == 0) || (side % 2 == 0 && i1 == side / 2);
        weights_(i0 * half + i1) = self_conj ? 1.0 : 2.0;
      }
    }
  }

  int side() const { return side_; }
  int count() const { return count_; }
  Fft2& fft() { return fft_; }
  const Eigen::VectorXcd& filter_spectrum(int j) const {
    return filter_spec_[static_cast<std::size_t>(j)];
  }

  // ||spatial||_2^2 from a half-plane spectrum.
  double parseval_sq_norm(const Eigen::VectorXcd& spectrum) const {
    const double scale = 1.0 / (static_cast<double>(side_) * side_);
    return scale * (weights_.array() * spectrum.array().abs2()).sum();
  }

  // Spectrum of sum_j filter_j (*) maps_j given the map spectra.
  Eigen::VectorXcd synthesize(const std::vector<Eigen::VectorXcd>& map_spectra) const {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(filter_spec_.front().size());
    for (int j = 0; j < count_; ++j) {
      acc.array() += filter_spec_[static_cast<std::size_t>(j)].array() *
                     map_spectra[static_cast<std::size_t>(j)].array();
    }
    return acc;
  }

 private:
  int side_;
  int count_;
  Fft2 fft_;
  std::vector<Eigen::VectorXcd> filter_spec_;
  Eigen::VectorXd weights_;
};

double l1_norm(const std::vector<Eigen::MatrixXd>& maps) {
  double acc = 0.0;
  for (const auto& m : maps) {
    acc += m.cwiseAbs().sum();
  }
  return acc;
}

double lipschitz_impl(ConvBasis& basis) {
  const int side = basis.side();
  const int n = basis.count();
  // Deterministic start vector; no caller-visible randomness.
  std::uint64_t state = 0x5EEDBA5Eu;
  std::vector<Eigen::MatrixXd> v(static_cast<std::size_t>(n));
  double norm_sq = 0.0;
  for (auto& grid : v) {
    grid.resize(side, side);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      grid.data()[i] = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 - 0.5;
    }
    norm_sq += grid.squaredNorm();
  }
  double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (auto& grid : v) {
    grid *= inv_norm;
  }

  std::vector<Eigen::VectorXcd> spec(static_cast<std::size_t>(n));
  Eigen::MatrixXd scratch(side, side);
  double eigenvalue = 0.0;
  for (int iter = 0; iter < 40; ++iter) {
    for (int j = 0; j < n; ++j) {
      basis.fft().forward(v[static_cast<std::size_t>(j)], spec[static_cast<std::size_t>(j)]);
    }
    Eigen::VectorXcd synth = basis.synthesize(spec);
    double rayleigh = 0.0;
    norm_sq = 0.0;
    std::vector<Eigen::MatrixXd> w(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXcd back = basis.filter_spectrum(j).conjugate().cwiseProduct(synth);
      basis.fft().inverse(back, scratch);
      rayleigh += (scratch.array() * v[static_cast<std::size_t>(j)].array()).sum();
      norm_sq += scratch.squaredNorm();
      w[static_cast<std::size_t>(j)] = scratch;
    }
    eigenvalue = rayleigh;
    if (norm_sq <= 0.0) {
      return 0.0;
    }
    inv_norm = 1.0 / std::sqrt(norm_sq);
    for (int j = 0; j < n; ++j) {
      v[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(j)] * inv_norm;
    }
  }
  return eigenvalue;
}

FeatureMaps infer_impl(const Image& image, const Dictionary& dict, const SparseConfig& cfg,
                       const FeatureMaps& init, std::vector<double>* objective_trace) {
  validate_sparse_config(cfg);
  const int side = image.side();
  const int n = dict.count();
  if (init.count() != n) {
    throw std::invalid_argument("infer_maps: init map count does not match dictionary");
  }
  if (init.side() != side) {
    throw std::invalid_argument("infer_maps: init map side does not match image");
  }
  for (int j = 0; j < n; ++j) {
    if (!dict.filter(j).allFinite()) {
      throw std::invalid_argument("infer_maps: dictionary contains non-finite filter");
    }
  }

  ConvBasis basis(dict, side);
  const double step =
      cfg.step > 0.0 ? cfg.step : 1.0 / (1.05 * std::max(lipschitz_impl(basis), 1e-12));

  Eigen::VectorXcd img_spec;
  basis.fft().forward(image.grid(), img_spec);

  const auto idx = [](int j) { return static_cast<std::size_t>(j); };

  std::vector<Eigen::MatrixXd> cur(idx(n));
  for (int j = 0; j < n; ++j) {
    cur[idx(j)] = init.map(j);
  }
  std::vector<Eigen::MatrixXd> prev = cur;
  std::vector<Eigen::VectorXcd> cur_spec(idx(n)), prev_spec(idx(n));
  for (int j = 0; j < n; ++j) {
    basis.fft().forward(cur[idx(j)], cur_spec[idx(j)]);
    prev_spec[idx(j)] = cur_spec[idx(j)];
  }

  auto quadratic = [&](const std::vector<Eigen::VectorXcd>& spectra) {
    Eigen::VectorXcd resid = basis.synthesize(spectra) - img_spec;
    return 0.5 * basis.parseval_sq_norm(resid);
  };

  double energy = quadratic(cur_spec) + cfg.lambda * l1_norm(cur);
  if (!std::isfinite(energy)) {
    throw NumericError("infer_maps: non-finite objective at start");
  }
  double best_energy = energy;
  std::vector<Eigen::MatrixXd> best = cur;

  double t_cur = 1.0;
  double t_prev = 1.0;
  Eigen::MatrixXd scratch(side, side);
  Eigen::VectorXcd y_spec(basis.fft().spectrum_size());
  Eigen::VectorXcd recon_spec;
  std::vector<Eigen::VectorXcd> y_spectra(idx(n));

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const double beta = cfg.momentum ? (t_prev - 1.0) / t_cur : 0.0;
    for (int j = 0; j < n; ++j) {
      y_spectra[idx(j)] = (1.0 + beta) * cur_spec[idx(j)] - beta * prev_spec[idx(j)];
    }
    recon_spec = basis.synthesize(y_spectra);
    recon_spec -= img_spec;  // residual spectrum at the momentum point

    std::vector<Eigen::MatrixXd> next(idx(n));
    for (int j = 0; j < n; ++j) {
      y_spec = basis.filter_spectrum(j).conjugate().cwiseProduct(recon_spec);
      basis.fft().inverse(y_spec, scratch);  // gradient of the quadratic term
      next[idx(j)].resize(side, side);
      const Eigen::MatrixXd y_spatial =
          (1.0 + beta) * cur[idx(j)] - beta * prev[idx(j)];
      const double theta = step * cfg.lambda;
      for (Eigen::Index i = 0; i < scratch.size(); ++i) {
        next[idx(j)].data()[i] =
            soft_threshold(y_spatial.data()[i] - step * scratch.data()[i], theta);
      }
    }

    std::vector<Eigen::VectorXcd> next_spec(idx(n));
    for (int j = 0; j < n; ++j) {
      basis.fft().forward(next[idx(j)], next_spec[idx(j)]);
    }
    const double next_energy = quadratic(next_spec) + cfg.lambda * l1_norm(next);
    if (!std::isfinite(next_energy)) {
      throw NumericError("infer_maps: non-finite objective at iteration " +
                         std::to_string(iter + 1));
    }

    const double t_next = cfg.momentum ? 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_cur * t_cur)) : 1.0;
    t_prev = t_cur;
    t_cur = t_next;
    if (next_energy > energy) {
      t_prev = 1.0;  // restart momentum after an objective increase
      t_cur = 1.0;
    }

    prev = std::move(cur);
    prev_spec = std::move(cur_spec);
    cur = std::move(next);
    cur_spec = std::move(next_spec);

    if (next_energy < best_energy) {
      best_energy = next_energy;
      best = cur;
    }
    if (objective_trace != nullptr) {
      objective_trace->push_back(next_energy);
    }

    const double change = std::abs(energy - next_energy);
    energy = next_energy;
    if (change <= cfg.tol * std::max(energy, 1e-12)) {
      break;
    }
  }

  return FeatureMaps(std::move(best));
}

}  // namespace

Dictionary::Dictionary(std::vector<Eigen::MatrixXd> filters) : filters_(std::move(filters)) {
  if (filters_.empty()) {
    throw std::invalid_argument("Dictionary: must contain at least one filter");
  }
  const Eigen::Index patch = filters_.front().rows();
  if (patch < 1) {
    throw std::invalid_argument("Dictionary: filters must be non-empty");
  }
  for (const auto& f : filters_) {
    if (f.rows() != patch || f.cols() != patch) {
      throw std::invalid_argument("Dictionary: filters must all be square with equal size");
    }
    if (!f.allFinite()) {
      throw std::invalid_argument("Dictionary: filter contains non-finite values");
    }
  }
}

FeatureMaps::FeatureMaps(std::vector<Eigen::MatrixXd> maps) : maps_(std::move(maps)) {
  if (maps_.empty()) {
    throw std::invalid_argument("FeatureMaps: must contain at least one map");
  }
  const Eigen::Index side = maps_.front().rows();
  for (const auto& m : maps_) {
    if (m.rows() != side || m.cols() != side) {
      throw std::invalid_argument("FeatureMaps: maps must all be square with equal size");
    }
    if (!m.allFinite()) {
      throw std::invalid_argument("FeatureMaps: map contains non-finite values");
    }
  }
}

FeatureMaps FeatureMaps::zeros(int count, int side) {
  std::vector<Eigen::MatrixXd> maps(static_cast<std::size_t>(count),
                                    Eigen::MatrixXd::Zero(side, side));
  return FeatureMaps(std::move(maps));
}

Eigen::MatrixXd convolve_circular(const Eigen::MatrixXd& map, const Eigen::MatrixXd& filter) {
  if (map.rows() != map.cols() || filter.rows() != filter.cols()) {
    throw std::invalid_argument("convolve_circular: grids must be square");
  }
  if (filter.rows() > map.rows()) {
    throw std::invalid_argument("convolve_circular: filter larger than map");
  }
  const int side = static_cast<int>(map.rows());
  const int patch = static_cast<int>(filter.rows());
  Fft2 fft(side);
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(side, side);
  padded.block(0, 0, patch, patch) = filter;
  Eigen::VectorXcd map_spec, filt_spec;
  fft.forward(map, map_spec);
  fft.forward(padded, filt_spec);
  map_spec.array() *= filt_spec.array();
  Eigen::MatrixXd out;
  fft.inverse(map_spec, out);
  return out;
}

Image reconstruct(const Dictionary& dict, const FeatureMaps& maps) {
  if (maps.count() != dict.count()) {
    throw std::invalid_argument("reconstruct: map count does not match dictionary");
  }
  const int side = maps.side();
  ConvBasis basis(dict, side);
  std::vector<Eigen::VectorXcd> spectra(static_cast<std::size_t>(maps.count()));
  for (int j = 0; j < maps.count(); ++j) {
    basis.fft().forward(maps.map(j), spectra[static_cast<std::size_t>(j)]);
  }
  Eigen::VectorXcd synth = basis.synthesize(spectra);
  Eigen::MatrixXd out;
  basis.fft().inverse(synth, out);
  return Image(out);
}

double objective(const Dictionary& dict, const FeatureMaps& maps, const Image& image,
                 double lambda) {
  if (maps.side() != image.side()) {
    throw std::invalid_argument("objective: map side does not match image");
  }
  const Image recon = reconstruct(dict, maps);
  double quad = 0.5 * (image.grid() - recon.grid()).squaredNorm();
  double l1 = 0.0;
  for (int j = 0; j < maps.count(); ++j) {
    l1 += maps.map(j).cwiseAbs().sum();
  }
  return quad + lambda * l1;
}

double soft_threshold(double x, double theta) {
  const double shrunk = std::abs(x) - theta;
  if (shrunk <= 0.0) {
    return 0.0;
  }
  return x > 0.0 ? shrunk : -shrunk;
}

double operator_lipschitz(const Dictionary& dict, int side) {
  ConvBasis basis(dict, side);
  return lipschitz_impl(basis);
}

FeatureMaps infer_maps(const Image& image, const Dictionary& dict, const SparseConfig& cfg,
                       std::vector<double>* objective_trace) {
  return infer_impl(image, dict, cfg, FeatureMaps::zeros(dict.count(), image.side()),
                    objective_trace);
}

FeatureMaps infer_maps(const Image& image, const Dictionary& dict, const SparseConfig& cfg,
                       const FeatureMaps& init, std::vector<double>* objective_trace) {
  return infer_impl(image, dict, cfg, init, objective_trace);
}

Dictionary learn_dictionary(const std::vector<Image>& images, int n, int patch,
                            const LearnConfig& cfg, std::vector<double>* round_objectives) {
  if (images.empty()) {
    throw std::invalid_argument("learn_dictionary: empty training set");
  }
  if (n < 1) {
    throw std::invalid_argument("learn_dictionary: filter count must be >= 1");
  }
  const int side = images.front().side();
  for (const auto& img : images) {
    if (img.side() != side) {
      throw std::invalid_argument("learn_dictionary: images must share one side");
    }
  }
  if (patch < 1 || patch > side) {
    throw std::invalid_argument("learn_dictionary: patch must be in [1, image side]");
  }
  if (cfg.rounds < 1) {
    throw std::invalid_argument("learn_dictionary: rounds must be >= 1");
  }

  const auto idx = [](int j) { return static_cast<std::size_t>(j); };

  // Zero-mean unit-norm random filters.
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::MatrixXd> filters(idx(n));
  for (int j = 0; j < n; ++j) {
    filters[idx(j)].resize(patch, patch);
    for (Eigen::Index i = 0; i < filters[idx(j)].size(); ++i) {
      filters[idx(j)].data()[i] = gauss(rng);
    }
    filters[idx(j)].array() -= filters[idx(j)].mean();
    const double norm = filters[idx(j)].norm();
    if (norm > 0.0) {
      filters[idx(j)] /= norm;
    }
  }

  std::vector<FeatureMaps> maps(images.size(), FeatureMaps::zeros(n, side));
  const double lambda = cfg.inference.lambda;
  // The curvature bound below is loose; remember how far backtracking let us
  // go last round and start there.
  double step_scale = 1.0;

  for (int round = 0; round < cfg.rounds; ++round) {
    Dictionary dict(filters);

    // Coefficient pass; warm-started per image, safe to run in parallel.
    SparseConfig inf_cfg = cfg.inference;
    if (inf_cfg.step <= 0.0) {
      inf_cfg.step = 1.0 / (1.05 * std::max(operator_lipschitz(dict, side), 1e-12));
    }
    parallel_for(images.size(), cfg.threads, [&](std::size_t i) {
      maps[i] = infer_maps(images[i], dict, inf_cfg, maps[i]);
    });

    // Filter gradient pass (spectral accumulation over the whole set).
    ConvBasis basis(dict, side);
    const int spec_size = basis.fft().spectrum_size();
    std::vector<Eigen::VectorXcd> grad_spec(idx(n), Eigen::VectorXcd::Zero(spec_size));
    std::vector<std::vector<Eigen::VectorXcd>> map_spectra(images.size());
    std::vector<Eigen::VectorXcd> img_spectra(images.size());
    double total_l1 = 0.0;
    double quad_before = 0.0;
    // Curvature bound for the filter subproblem: sum over images of the
    // largest per-frequency total coefficient power.
    double curvature = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      map_spectra[i].resize(idx(n));
      Eigen::VectorXd img_power = Eigen::VectorXd::Zero(spec_size);
      for (int j = 0; j < n; ++j) {
        basis.fft().forward(maps[i].map(j), map_spectra[i][idx(j)]);
        img_power.array() += map_spectra[i][idx(j)].array().abs2();
        total_l1 += maps[i].map(j).cwiseAbs().sum();
      }
      curvature += img_power.maxCoeff();
      basis.fft().forward(images[i].grid(), img_spectra[i]);
      Eigen::VectorXcd resid = basis.synthesize(map_spectra[i]) - img_spectra[i];
      quad_before += 0.5 * basis.parseval_sq_norm(resid);
      for (int j = 0; j < n; ++j) {
        grad_spec[idx(j)].array() += map_spectra[i][idx(j)].array().conjugate() * resid.array();
      }
    }
    const double energy_before = quad_before + lambda * total_l1;
    if (round_objectives != nullptr) {
      round_objectives->push_back(energy_before);
    }
    if (curvature <= 0.0) {
      continue;  // all coefficients zero; nothing to update
    }

    std::vector<Eigen::MatrixXd> grad(idx(n));
    Eigen::MatrixXd full(side, side);
    for (int j = 0; j < n; ++j) {
      basis.fft().inverse(grad_spec[idx(j)], full);
      grad[idx(j)] = full.block(0, 0, patch, patch);
    }

    // Backtracking projected step: shrink until the training objective does
    // not increase, else keep the previous filters.
    double step = step_scale / curvature;
    bool accepted = false;
    int attempts_used = 0;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      attempts_used = attempt + 1;
      std::vector<Eigen::MatrixXd> candidate(idx(n));
      bool degenerate = false;
      for (int j = 0; j < n; ++j) {
        candidate[idx(j)] = filters[idx(j)] - step * grad[idx(j)];
        const double norm = candidate[idx(j)].norm();
        if (norm <= 0.0) {
          degenerate = true;
          break;
        }
        candidate[idx(j)] /= norm;
      }
      if (!degenerate) {
        // Candidate filter spectra; coefficient spectra are already cached.
        std::vector<Eigen::VectorXcd> cand_spec(idx(n));
        Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(side, side);
        for (int j = 0; j < n; ++j) {
          padded.setZero();
          padded.block(0, 0, patch, patch) = candidate[idx(j)];
          basis.fft().forward(padded, cand_spec[idx(j)]);
        }
        double quad_after = 0.0;
        for (std::size_t i = 0; i < images.size(); ++i) {
          Eigen::VectorXcd resid = -img_spectra[i];
          for (int j = 0; j < n; ++j) {
            resid.array() += cand_spec[idx(j)].array() * map_spectra[i][idx(j)].array();
          }
          quad_after += 0.5 * basis.parseval_sq_norm(resid);
        }
        if (quad_after + lambda * total_l1 <= energy_before + 1e-12) {
          filters = std::move(candidate);
          accepted = true;
        }
      }
      step *= 0.5;
    }
    if (accepted && attempts_used == 1) {
      step_scale = std::min(step_scale * 2.0, 65536.0);
    } else if (attempts_used > 1) {
      step_scale = std::max(step_scale * std::pow(0.5, attempts_used - 1), 1e-6);
    }
  }

  return Dictionary(filters);
}

}  // namespace vsa
