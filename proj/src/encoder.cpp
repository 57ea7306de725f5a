#include "vsa/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace vsa {

namespace {
constexpr double kCoefficientFloor = 1e-8;
}

EncoderContext::EncoderContext(FpeBase h, FpeBase v, Codebook basis, Eigen::MatrixXcd hp,
                               Eigen::MatrixXcd vp)
    : h_base_(std::move(h)),
      v_base_(std::move(v)),
      basis_(std::move(basis)),
      h_power_(std::move(hp)),
      v_power_(std::move(vp)) {}

EncoderContext EncoderContext::create(Eigen::Index dim, std::uint32_t period,
                                      int filter_count, std::mt19937_64& rng) {
  if (filter_count < 1) {
    throw std::invalid_argument("EncoderContext: filter count must be >= 1");
  }
  FpeBase h = fpe_base(dim, period, rng);
  FpeBase v = fpe_base(dim, period, rng);
  Eigen::MatrixXcd basis_mat(dim, filter_count);
  std::vector<std::string> labels(static_cast<std::size_t>(filter_count));
  for (int j = 0; j < filter_count; ++j) {
    basis_mat.col(j) = random_phasor(dim, rng).values();
    labels[static_cast<std::size_t>(j)] = "b" + std::to_string(j);
  }
  Eigen::MatrixXcd hp(dim, period);
  Eigen::MatrixXcd vp(dim, period);
  for (std::uint32_t x = 0; x < period; ++x) {
    hp.col(x) = fpe_power(h, x).values();
    vp.col(x) = fpe_power(v, x).values();
  }
  return EncoderContext(std::move(h), std::move(v),
                        Codebook(std::move(basis_mat), std::move(labels)), std::move(hp),
                        std::move(vp));
}

ComplexVector encode_sparse(const FeatureMaps& maps, const EncoderContext& ctx) {
  const int side = maps.side();
  if (static_cast<std::uint32_t>(side) != ctx.period()) {
    throw std::invalid_argument("encode_sparse: map side does not match FPE period");
  }
  if (maps.count() != ctx.filter_count()) {
    throw std::invalid_argument("encode_sparse: map count does not match basis codebook");
  }
  ComplexVector z = ComplexVector::Zero(ctx.dim());
  for (int j = 0; j < maps.count(); ++j) {
    const auto b = ctx.basis_codebook().matrix().col(j);
    const auto& grid = maps.map(j);
    for (int x = 0; x < side; ++x) {
      const auto h = ctx.h_power_table().col(x);
      for (int y = 0; y < side; ++y) {
        const double c = grid(y, x);
        if (std::abs(c) <= kCoefficientFloor) {
          continue;
        }
        z.array() += c * (h.array() * ctx.v_power_table().col(y).array() * b.array());
      }
    }
  }
  return z;
}

ComplexVector encode_pixel(const Image& image, const EncoderContext& ctx) {
  const int side = image.side();
  if (static_cast<std::uint32_t>(side) != ctx.period()) {
    throw std::invalid_argument("encode_pixel: image side does not match FPE period");
  }
  ComplexVector z = ComplexVector::Zero(ctx.dim());
  for (int x = 0; x < side; ++x) {
    const auto h = ctx.h_power_table().col(x);
    for (int y = 0; y < side; ++y) {
      const double c = image.at(x, y);
      if (std::abs(c) <= kCoefficientFloor) {
        continue;
      }
      z.array() += c * (h.array() * ctx.v_power_table().col(y).array());
    }
  }
  return z;
}

ObjectTemplate make_object_template(const std::string& id, const Image& object_image,
                                    const Dictionary& dict, const EncoderContext& ctx,
                                    const SparseConfig& cfg, EncodingMode mode) {
  ComplexVector vec;
  if (mode == EncodingMode::kSparse) {
    const FeatureMaps maps = infer_maps(object_image, dict, cfg);
    vec = encode_sparse(maps, ctx);
  } else {
    vec = encode_pixel(object_image, ctx);
  }
  if (vec.norm() <= 0.0) {
    throw std::invalid_argument("make_object_template: degenerate (zero) template for '" +
                                id + "'");
  }
  return ObjectTemplate{id, object_image, std::move(vec)};
}

SceneCodebooks build_codebooks(const EncoderContext& ctx,
                               const std::vector<ObjectTemplate>& templates) {
  if (templates.empty()) {
    throw std::invalid_argument("build_codebooks: need at least one template");
  }
  const Eigen::Index dim = ctx.dim();
  const auto period = static_cast<Eigen::Index>(ctx.period());
  std::vector<std::string> pos_labels(static_cast<std::size_t>(period));
  for (Eigen::Index x = 0; x < period; ++x) {
    pos_labels[static_cast<std::size_t>(x)] = std::to_string(x);
  }
  Codebook h(ctx.h_power_table(), pos_labels);
  Codebook v(ctx.v_power_table(), pos_labels);

  Eigen::MatrixXcd o_mat(dim, static_cast<Eigen::Index>(templates.size()));
  std::vector<std::string> o_labels;
  o_labels.reserve(templates.size());
  for (std::size_t k = 0; k < templates.size(); ++k) {
    if (templates[k].template_vector.size() != dim) {
      throw std::invalid_argument("build_codebooks: template dim mismatch");
    }
    o_mat.col(static_cast<Eigen::Index>(k)) = normalize(templates[k].template_vector).values();
    o_labels.push_back(templates[k].id);
  }
  return SceneCodebooks{std::move(h), std::move(v), Codebook(std::move(o_mat), std::move(o_labels))};
}

ComplexVector compose_query(Eigen::Index x, Eigen::Index y, Eigen::Index k,
                            const SceneCodebooks& codebooks) {
  if (x < 0 || x >= codebooks.h.size()) {
    throw std::invalid_argument("compose_query: x index out of range");
  }
  if (y < 0 || y >= codebooks.v.size()) {
    throw std::invalid_argument("compose_query: y index out of range");
  }
  if (k < 0 || k >= codebooks.o.size()) {
    throw std::invalid_argument("compose_query: k index out of range");
  }
  return codebooks.h.matrix().col(x).cwiseProduct(codebooks.v.matrix().col(y))
      .cwiseProduct(codebooks.o.matrix().col(k));
}

}  // namespace vsa
