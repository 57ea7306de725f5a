#pragma once

// Scene-vector formation: feature maps or raw pixels are bundled into one
// high-dimensional complex vector by binding per-position FPE phasors with
// per-filter codewords. Also builds the position/object codebooks and the
// canonical object template vectors the factorizer searches over.

#include <random>
#include <string>
#include <vector>

#include "vsa/image.hpp"
#include "vsa/phasor.hpp"
#include "vsa/sparse.hpp"

namespace vsa {

enum class EncodingMode { kSparse, kPixel };

// Shared randomness for one experiment: both FPE bases (period = scene side)
// plus the per-filter random codewords b(j). Power tables for every position
// are materialized once; h_power(x) is column x.
class EncoderContext {
 public:
  // Draw order from rng: horizontal base, vertical base, then the filter
  // codewords b(0), ..., b(n-1).
  static EncoderContext create(Eigen::Index dim, std::uint32_t period, int filter_count,
                               std::mt19937_64& rng);

  Eigen::Index dim() const { return h_power_.rows(); }
  std::uint32_t period() const { return h_base_.period(); }
  int filter_count() const { return static_cast<int>(basis_.size()); }
  const FpeBase& h_base() const { return h_base_; }
  const FpeBase& v_base() const { return v_base_; }
  const Codebook& basis_codebook() const { return basis_; }
  const Eigen::MatrixXcd& h_power_table() const { return h_power_; }
  const Eigen::MatrixXcd& v_power_table() const { return v_power_; }

 private:
  EncoderContext(FpeBase h, FpeBase v, Codebook basis, Eigen::MatrixXcd hp,
                 Eigen::MatrixXcd vp);

  FpeBase h_base_;
  FpeBase v_base_;
  Codebook basis_;
  Eigen::MatrixXcd h_power_;  // dim x period
  Eigen::MatrixXcd v_power_;
};

// z = sum over active coefficients of A_j(x, y) * h(x) o v(y) o b(j).
// Coefficients with |A| <= 1e-8 are skipped.
ComplexVector encode_sparse(const FeatureMaps& maps, const EncoderContext& ctx);

// z = sum over pixels of I(x, y) * h(x) o v(y).
ComplexVector encode_pixel(const Image& image, const EncoderContext& ctx);

// Canonical object: its image in the reference frame plus the raw (not
// phase-normalized) bundle encoding it.
struct ObjectTemplate {
  std::string id;
  Image canonical_image;
  ComplexVector template_vector;
};

// Sparse mode runs coefficient inference on the canonical image first; pixel
// mode encodes the pixels directly. An all-zero object image (or one whose
// encoding is the zero vector) is rejected as degenerate.
ObjectTemplate make_object_template(const std::string& id, const Image& object_image,
                                    const Dictionary& dict, const EncoderContext& ctx,
                                    const SparseConfig& cfg, EncodingMode mode);

struct SceneCodebooks {
  Codebook h;
  Codebook v;
  Codebook o;
};

// H and V enumerate fpe powers 0 .. period-1; O holds the phase-normalized
// template bundles in input order.
SceneCodebooks build_codebooks(const EncoderContext& ctx,
                               const std::vector<ObjectTemplate>& templates);

// q = h(x) o v(y) o o(k).
ComplexVector compose_query(Eigen::Index x, Eigen::Index y, Eigen::Index k,
                            const SceneCodebooks& codebooks);

}  // namespace vsa
