#include "vsa/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "vsa/containers.hpp"
#include "vsa/datasets.hpp"
#include "vsa/errors.hpp"
#include "vsa/multi_object.hpp"
#include "vsa/parallel.hpp"
#include "vsa/rng.hpp"
#include "vsa/whitening.hpp"

namespace vsa {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Substream roles for seed derivation; documented in docs/determinism.md.
constexpr std::uint64_t kMaterialsStream = 0xA;
constexpr std::uint64_t kSceneStream = 0xB;
constexpr std::uint64_t kRunStream = 0xC;

std::uint64_t kind_id(ExperimentKind kind) { return static_cast<std::uint64_t>(kind); }

std::mt19937_64 materials_rng(const ExperimentConfig& cfg, std::uint64_t sweep_idx) {
  return make_rng(derive_seed(cfg.seed, {kind_id(cfg.kind), kMaterialsStream, sweep_idx}));
}

std::mt19937_64 scene_rng(const ExperimentConfig& cfg, std::uint64_t sweep_idx,
                          std::uint64_t trial) {
  return make_rng(derive_seed(cfg.seed, {kind_id(cfg.kind), kSceneStream, sweep_idx, trial}));
}

std::mt19937_64 run_rng(const ExperimentConfig& cfg, std::uint64_t sweep_idx,
                        std::uint64_t trial, std::uint64_t encoding, std::uint64_t arm = 0) {
  return make_rng(
      derive_seed(cfg.seed, {kind_id(cfg.kind), kRunStream, sweep_idx, trial, encoding, arm}));
}

SparseConfig scene_inference_config(const ExperimentConfig& cfg, double step) {
  SparseConfig sc;
  sc.lambda = cfg.lambda;
  sc.max_iters = cfg.inference_max_iters;
  sc.tol = cfg.inference_tol;
  sc.step = step;
  return sc;
}

double mean_confidence(const std::array<double, 3>& conf) {
  return (conf[0] + conf[1] + conf[2]) / 3.0;
}

// ---------------------------------------------------------------------------
// Materials shared by every trial of one sweep point.

struct Materials {
  std::optional<EncoderContext> ctx;
  std::optional<Dictionary> dict;
  std::vector<BarsShape> shapes;            // bars experiments
  std::vector<Image> canonical_images;      // image experiments (mnist/letters)
  std::vector<FeatureMaps> canonical_maps;  // sparse canonical codes
  std::optional<SceneCodebooks> books_sparse;
  std::optional<SceneCodebooks> books_pixel;
  std::optional<SceneCodebooks> books_sparse_whitened;
  std::optional<SceneCodebooks> books_pixel_whitened;
  double solver_step = 0.0;  // scene-inference step at this side
};

const SceneCodebooks& books_for(const Materials& m, EncodingMode enc, bool whitened = false) {
  if (enc == EncodingMode::kSparse) {
    return whitened ? *m.books_sparse_whitened : *m.books_sparse;
  }
  return whitened ? *m.books_pixel_whitened : *m.books_pixel;
}

// Bars: the encoder context (and with it the H/V codebooks) is fixed per
// sweep point; the shape set is redrawn per trial, matching the protocol of
// repeating the whole experiment, shape pick included.
struct BarsContext {
  EncoderContext ctx;
  Codebook h;
  Codebook v;
};

BarsContext build_bars_context(const ExperimentConfig& cfg, std::uint64_t sweep_idx) {
  auto rng = materials_rng(cfg, sweep_idx);
  EncoderContext ctx =
      EncoderContext::create(cfg.dim, static_cast<std::uint32_t>(cfg.side), 2, rng);
  std::vector<std::string> pos_labels(static_cast<std::size_t>(cfg.side));
  for (int x = 0; x < cfg.side; ++x) {
    pos_labels[static_cast<std::size_t>(x)] = std::to_string(x);
  }
  Codebook h(ctx.h_power_table(), pos_labels);
  Codebook v(ctx.v_power_table(), pos_labels);
  return BarsContext{std::move(ctx), std::move(h), std::move(v)};
}

struct BarsObjects {
  std::vector<BarsShape> shapes;
  SceneCodebooks books_sparse;
  SceneCodebooks books_pixel;
};

BarsObjects draw_bars_objects(const BarsContext& bc, const ExperimentConfig& cfg,
                              int shape_count, std::mt19937_64& rng) {
  BarsConfig bars_cfg;
  bars_cfg.min_bars = cfg.bars_per_shape;
  bars_cfg.max_bars = cfg.bars_per_shape;
  auto shapes = gen_bars_shapes(shape_count, rng, bars_cfg);

  const Eigen::Index dim = bc.ctx.dim();
  Eigen::MatrixXcd o_sparse(dim, shape_count);
  Eigen::MatrixXcd o_pixel(dim, shape_count);
  std::vector<std::string> labels(static_cast<std::size_t>(shape_count));
  for (int k = 0; k < shape_count; ++k) {
    const auto& shape = shapes[static_cast<std::size_t>(k)];
    FeatureMaps canon = FeatureMaps::zeros(2, cfg.side);
    for (int j = 0; j < 2; ++j) {
      canon.map(j).block(0, 0, kBarsFrame, kBarsFrame) = shape.ground_truth_maps.map(j);
    }
    Image canon_img = Image::zeros(cfg.side);
    canon_img.grid().block(0, 0, kBarsFrame, kBarsFrame) = shape.grid.grid();
    o_sparse.col(k) = normalize(encode_sparse(canon, bc.ctx)).values();
    o_pixel.col(k) = normalize(encode_pixel(canon_img, bc.ctx)).values();
    labels[static_cast<std::size_t>(k)] = "shape" + std::to_string(k);
  }
  SceneCodebooks sparse{bc.h, bc.v, Codebook(std::move(o_sparse), labels)};
  SceneCodebooks pixel{bc.h, bc.v, Codebook(std::move(o_pixel), labels)};
  return BarsObjects{std::move(shapes), std::move(sparse), std::move(pixel)};
}

std::vector<std::pair<std::string, Image>> load_class_images(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, Image>> out;
  if (cfg.kind == ExperimentKind::kLetters) {
    if (cfg.letters_dir.empty()) {
      throw ConfigError("letters experiment requires letters_dir");
    }
    for (auto& [label, img] : load_letter_assets(cfg.letters_dir)) {
      out.emplace_back(std::string(1, label), std::move(img));
    }
    return out;
  }
  if (cfg.digits_path.empty() || cfg.labels_path.empty()) {
    throw ConfigError("experiment requires digits and labels IDX paths");
  }
  const auto images = load_idx_images(cfg.digits_path);
  const auto labels = load_idx_labels(cfg.labels_path);
  if (images.size() != labels.size()) {
    throw ConfigError("digit image and label counts differ");
  }
  // First occurrence of each class, classes 0 .. class_count-1.
  for (int c = 0; c < cfg.class_count; ++c) {
    bool found = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) {
        out.emplace_back("digit" + std::to_string(c), images[i]);
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError("no example of digit class " + std::to_string(c) + " in " +
                        cfg.digits_path);
    }
  }
  return out;
}

// MNIST-style experiments: canonical templates from class exemplars, learned
// dictionary, honest per-scene inference. with_whitening also fits and
// applies the SVD whitening transforms to the templates (never to scenes).
Materials build_image_materials(const ExperimentConfig& cfg, int side, std::uint64_t sweep_idx,
                                bool with_whitening) {
  if (cfg.dict_path.empty()) {
    throw ConfigError("experiment requires a learned dictionary (dict path)");
  }
  Materials m;
  m.dict = load_dictionary(cfg.dict_path);
  auto rng = materials_rng(cfg, sweep_idx);
  m.ctx = EncoderContext::create(cfg.dim, static_cast<std::uint32_t>(side), m.dict->count(), rng);

  const auto class_images = load_class_images(cfg);
  const int n_classes = static_cast<int>(class_images.size());
  m.solver_step = 1.0 / (1.05 * std::max(operator_lipschitz(*m.dict, side), 1e-12));
  const SparseConfig inf_cfg = scene_inference_config(cfg, m.solver_step);

  m.canonical_images.reserve(static_cast<std::size_t>(n_classes));
  for (const auto& [id, img] : class_images) {
    m.canonical_images.push_back(canonicalize(img, side));
  }
  m.canonical_maps.resize(static_cast<std::size_t>(n_classes),
                          FeatureMaps::zeros(m.dict->count(), side));
  parallel_for(static_cast<std::size_t>(n_classes), cfg.threads, [&](std::size_t i) {
    m.canonical_maps[i] = infer_maps(m.canonical_images[i], *m.dict, inf_cfg);
  });

  std::vector<ObjectTemplate> sparse_templates;
  std::vector<ObjectTemplate> pixel_templates;
  for (int k = 0; k < n_classes; ++k) {
    const std::string& id = class_images[static_cast<std::size_t>(k)].first;
    sparse_templates.push_back(
        ObjectTemplate{id, m.canonical_images[static_cast<std::size_t>(k)],
                       encode_sparse(m.canonical_maps[static_cast<std::size_t>(k)], *m.ctx)});
    pixel_templates.push_back(
        ObjectTemplate{id, m.canonical_images[static_cast<std::size_t>(k)],
                       encode_pixel(m.canonical_images[static_cast<std::size_t>(k)], *m.ctx)});
  }
  m.books_sparse = build_codebooks(*m.ctx, sparse_templates);
  m.books_pixel = build_codebooks(*m.ctx, pixel_templates);

  if (with_whitening) {
    std::vector<Eigen::VectorXd> pixel_flat;
    std::vector<Eigen::VectorXd> coef_flat;
    for (int k = 0; k < n_classes; ++k) {
      pixel_flat.push_back(flatten(m.canonical_images[static_cast<std::size_t>(k)]));
      coef_flat.push_back(flatten(m.canonical_maps[static_cast<std::size_t>(k)]));
    }
    const WhiteningTransform wt_pixel =
        fit_whitening(pixel_flat, cfg.whiten_epsilon, GridShape{1, side});
    const WhiteningTransform wt_coef =
        fit_whitening(coef_flat, cfg.whiten_epsilon, GridShape{m.dict->count(), side});
    std::vector<ObjectTemplate> sparse_w;
    std::vector<ObjectTemplate> pixel_w;
    for (int k = 0; k < n_classes; ++k) {
      const std::string& id = class_images[static_cast<std::size_t>(k)].first;
      const FeatureMaps wmaps =
          apply_whitening_centered(wt_coef, m.canonical_maps[static_cast<std::size_t>(k)]);
      const Image wimg =
          apply_whitening_centered(wt_pixel, m.canonical_images[static_cast<std::size_t>(k)]);
      sparse_w.push_back(ObjectTemplate{id, m.canonical_images[static_cast<std::size_t>(k)],
                                        encode_sparse(wmaps, *m.ctx)});
      pixel_w.push_back(ObjectTemplate{id, m.canonical_images[static_cast<std::size_t>(k)],
                                       encode_pixel(wimg, *m.ctx)});
    }
    m.books_sparse_whitened = build_codebooks(*m.ctx, sparse_w);
    m.books_pixel_whitened = build_codebooks(*m.ctx, pixel_w);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Scene construction.

struct BarsScene {
  FeatureMaps maps;   // ground-truth scene code (coefficient-wise max)
  Image image;        // pixel-wise max composition
  MultiSceneTruth truth;
};

BarsScene compose_bars_scene(const std::vector<BarsShape>& shapes, int side,
                             const std::vector<ScenePlacement>& placements) {
  BarsScene scene{FeatureMaps::zeros(2, side), Image::zeros(side), {}};
  auto wrap = [side](Eigen::Index v) {
    Eigen::Index r = v % side;
    return r < 0 ? r + side : r;
  };
  for (const auto& p : placements) {
    const auto& shape = shapes[static_cast<std::size_t>(p.k)];
    for (const auto& bar : shape.placements) {
      const int j = bar.horizontal ? 1 : 0;
      const Eigen::Index cx = wrap(bar.x + p.x);
      const Eigen::Index cy = wrap(bar.y + p.y);
      double& c = scene.maps.at(j, static_cast<int>(cx), static_cast<int>(cy));
      c = std::max(c, std::sqrt(static_cast<double>(kBarsFrame)));
    }
    for (int y = 0; y < kBarsFrame; ++y) {
      for (int x = 0; x < kBarsFrame; ++x) {
        if (shape.grid.at(x, y) > 0.0) {
          double& px = scene.image.at(static_cast<int>(wrap(x + p.x)),
                                      static_cast<int>(wrap(y + p.y)));
          px = std::max(px, 1.0);
        }
      }
    }
    scene.truth.placements.push_back({p.k, wrap(p.x), wrap(p.y)});
  }
  return scene;
}

bool triple_correct(const FactorizationResult& r, const ScenePlacement& truth) {
  return r.x_index == truth.x && r.y_index == truth.y && r.k_index == truth.k;
}

// Stopping-rule readout of a full max-iterations trace (the dynamics do not
// depend on the stopping rule, so one traced run serves several rules).
struct Readout {
  Eigen::Index x = 0, y = 0, k = 0;
  bool converged = false;
  int iterations = 0;
  std::array<double, 3> confidences{0.0, 0.0, 0.0};
};

Readout readout_trace(const std::vector<IterationTrace>& trace,
                      const StoppingCriterion& criterion) {
  Readout out;
  for (const auto& row : trace) {
    out.x = row.decoded[0];
    out.y = row.decoded[1];
    out.k = row.decoded[2];
    out.iterations = row.t;
    out.confidences = row.confidences;
    const bool fired =
        (criterion.kind == StoppingKind::kFixedPoint && row.fp_distance < criterion.epsilon) ||
        (criterion.kind == StoppingKind::kConfidence &&
         row.confidences[0] >= criterion.conf_threshold &&
         row.confidences[1] >= criterion.conf_threshold &&
         row.confidences[2] >= criterion.conf_threshold);
    if (fired && row.t <= criterion.max_iters) {
      out.converged = true;
      return out;
    }
    if (row.t >= criterion.max_iters) {
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment drivers.

std::vector<EncodingMode> checked_encodings(const ExperimentConfig& cfg) {
  if (cfg.encodings.empty()) {
    throw ConfigError("at least one encoding mode is required");
  }
  return cfg.encodings;
}

ExperimentOutput run_bars_scaling(const ExperimentConfig& cfg) {
  const auto encodings = checked_encodings(cfg);
  ExperimentOutput out;
  for (std::size_t si = 0; si < cfg.sweep.size(); ++si) {
    const int shape_count = cfg.sweep[si];
    const BarsContext bc = build_bars_context(cfg, si);
    const std::string label = "K=" + std::to_string(shape_count);

    std::vector<std::vector<TrialRecord>> rows(static_cast<std::size_t>(cfg.trials));
    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
      auto srng = scene_rng(cfg, si, t);
      const BarsObjects objects = draw_bars_objects(bc, cfg, shape_count, srng);
      std::uniform_int_distribution<Eigen::Index> pick_k(0, shape_count - 1);
      std::uniform_int_distribution<Eigen::Index> pick_pos(0, cfg.side - 1);
      const Eigen::Index k = pick_k(srng);
      const Eigen::Index x = pick_pos(srng);
      const Eigen::Index y = pick_pos(srng);
      const BarsScene scene = compose_bars_scene(objects.shapes, cfg.side, {{k, x, y}});

      for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
        const EncodingMode enc = encodings[ei];
        const auto start = std::chrono::steady_clock::now();
        const ComplexVector z = enc == EncodingMode::kSparse
                                    ? encode_sparse(scene.maps, bc.ctx)
                                    : encode_pixel(scene.image, bc.ctx);
        const SceneCodebooks& books =
            enc == EncodingMode::kSparse ? objects.books_sparse : objects.books_pixel;
        auto rrng = run_rng(cfg, si, t, ei);
        const FactorizationResult res = run(z, books, cfg.stopping, rrng);
        TrialRecord rec;
        rec.sweep_label = label;
        rec.encoding = enc;
        rec.trial = static_cast<int>(t);
        rec.correct = triple_correct(res, scene.truth.placements[0]) ? 1.0 : 0.0;
        rec.iterations = res.iterations;
        rec.converged = res.converged;
        rec.final_confidences = res.final_confidences;
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        rows[t].push_back(std::move(rec));
      }
    });
    for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
      for (std::size_t t = 0; t < rows.size(); ++t) {
        out.records.push_back(rows[t][ei]);
      }
    }
  }
  out.summary = summarize(out.records);
  return out;
}

ExperimentOutput run_multi_object(const ExperimentConfig& cfg) {
  const auto encodings = checked_encodings(cfg);
  // One encoder context for every m, so the sweep isolates the object count;
  // the shape set is redrawn per trial like the scaling experiment.
  const BarsContext bc = build_bars_context(cfg, 0);
  MultiObjectOptions options;
  options.use_cleaned_estimate = cfg.multi_cleaned;

  ExperimentOutput out;
  for (std::size_t si = 0; si < cfg.sweep.size(); ++si) {
    const int object_count = cfg.sweep[si];
    if (object_count < 1) {
      throw ConfigError("multi_object sweep values must be >= 1");
    }
    const std::string label = "m=" + std::to_string(object_count);
    std::vector<std::vector<TrialRecord>> rows(static_cast<std::size_t>(cfg.trials));
    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
      auto srng = scene_rng(cfg, si, t);
      const BarsObjects objects = draw_bars_objects(bc, cfg, cfg.class_count, srng);
      std::uniform_int_distribution<Eigen::Index> pick_k(0, cfg.class_count - 1);
      std::uniform_int_distribution<Eigen::Index> pick_pos(0, cfg.side - 1);
      std::vector<ScenePlacement> placements;
      for (int i = 0; i < object_count; ++i) {
        const Eigen::Index k = pick_k(srng);
        const Eigen::Index x = pick_pos(srng);
        const Eigen::Index y = pick_pos(srng);
        placements.push_back({k, x, y});
      }
      const BarsScene scene = compose_bars_scene(objects.shapes, cfg.side, placements);

      for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
        const EncodingMode enc = encodings[ei];
        const auto start = std::chrono::steady_clock::now();
        const ComplexVector z = enc == EncodingMode::kSparse
                                    ? encode_sparse(scene.maps, bc.ctx)
                                    : encode_pixel(scene.image, bc.ctx);
        const SceneCodebooks& books =
            enc == EncodingMode::kSparse ? objects.books_sparse : objects.books_pixel;
        auto rrng = run_rng(cfg, si, t, ei);
        const auto results =
            factorize_multi(z, books, object_count, cfg.stopping, rrng, options);
        TrialRecord rec;
        rec.sweep_label = label;
        rec.encoding = enc;
        rec.trial = static_cast<int>(t);
        rec.correct = graded_accuracy(results, scene.truth, cfg.position_tolerance, cfg.side);
        int total_iters = 0;
        bool all_converged = true;
        for (const auto& r : results) {
          total_iters += r.iterations;
          all_converged = all_converged && r.converged;
        }
        rec.iterations = total_iters;
        rec.converged = all_converged;
        rec.final_confidences = results.back().final_confidences;
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        rows[t].push_back(std::move(rec));
      }
    });
    for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
      for (std::size_t t = 0; t < rows.size(); ++t) {
        out.records.push_back(rows[t][ei]);
      }
    }
  }
  out.summary = summarize(out.records);
  return out;
}

// Shared by mnist_scaling and letters: sweep over scene sides.
ExperimentOutput run_image_scaling(const ExperimentConfig& cfg) {
  const auto encodings = checked_encodings(cfg);
  ExperimentOutput out;
  for (std::size_t si = 0; si < cfg.sweep.size(); ++si) {
    const int side = cfg.sweep[si];
    const Materials m = build_image_materials(cfg, side, si, false);
    const SparseConfig inf_cfg = scene_inference_config(cfg, m.solver_step);
    const int n_classes = static_cast<int>(m.canonical_images.size());
    const std::string label = "L=" + std::to_string(side);

    std::vector<std::vector<TrialRecord>> rows(static_cast<std::size_t>(cfg.trials));
    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
      auto srng = scene_rng(cfg, si, t);
      std::uniform_int_distribution<Eigen::Index> pick_k(0, n_classes - 1);
      std::uniform_int_distribution<Eigen::Index> pick_pos(0, side - 1);
      const Eigen::Index k = pick_k(srng);
      const Eigen::Index x = pick_pos(srng);
      const Eigen::Index y = pick_pos(srng);
      const Image scene = circular_shift(m.canonical_images[static_cast<std::size_t>(k)],
                                         static_cast<int>(x), static_cast<int>(y));
      const ScenePlacement truth{k, x, y};

      for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
        const EncodingMode enc = encodings[ei];
        const auto start = std::chrono::steady_clock::now();
        ComplexVector z;
        if (enc == EncodingMode::kSparse) {
          z = encode_sparse(infer_maps(scene, *m.dict, inf_cfg), *m.ctx);
        } else {
          z = encode_pixel(scene, *m.ctx);
        }
        auto rrng = run_rng(cfg, si, t, ei);
        const FactorizationResult res = run(z, books_for(m, enc), cfg.stopping, rrng);
        TrialRecord rec;
        rec.sweep_label = label;
        rec.encoding = enc;
        rec.trial = static_cast<int>(t);
        rec.correct = triple_correct(res, truth) ? 1.0 : 0.0;
        rec.iterations = res.iterations;
        rec.converged = res.converged;
        rec.final_confidences = res.final_confidences;
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        rows[t].push_back(std::move(rec));
      }
    });
    for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
      for (std::size_t t = 0; t < rows.size(); ++t) {
        out.records.push_back(rows[t][ei]);
      }
    }
  }
  out.summary = summarize(out.records);
  return out;
}

// One traced max-iterations run per (trial, encoding); both stopping rules
// are then read out of the same trajectory, which keeps the comparison
// exactly paired.
ExperimentOutput run_confidence(const ExperimentConfig& cfg) {
  const auto encodings = checked_encodings(cfg);
  const Materials m = build_image_materials(cfg, cfg.side, 0, false);
  const SparseConfig inf_cfg = scene_inference_config(cfg, m.solver_step);
  const int n_classes = static_cast<int>(m.canonical_images.size());

  StoppingCriterion traced;
  traced.kind = StoppingKind::kMaxItersOnly;
  traced.max_iters = cfg.stopping.max_iters;

  struct ArmPair {
    TrialRecord fixed_point;
    TrialRecord confidence;
  };
  std::vector<std::vector<ArmPair>> rows(static_cast<std::size_t>(cfg.trials));
  parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
    auto srng = scene_rng(cfg, 0, t);
    std::uniform_int_distribution<Eigen::Index> pick_k(0, n_classes - 1);
    std::uniform_int_distribution<Eigen::Index> pick_pos(0, cfg.side - 1);
    const Eigen::Index k = pick_k(srng);
    const Eigen::Index x = pick_pos(srng);
    const Eigen::Index y = pick_pos(srng);
    const Image scene = circular_shift(m.canonical_images[static_cast<std::size_t>(k)],
                                       static_cast<int>(x), static_cast<int>(y));
    const ScenePlacement truth{k, x, y};

    for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
      const EncodingMode enc = encodings[ei];
      const auto start = std::chrono::steady_clock::now();
      ComplexVector z;
      if (enc == EncodingMode::kSparse) {
        z = encode_sparse(infer_maps(scene, *m.dict, inf_cfg), *m.ctx);
      } else {
        z = encode_pixel(scene, *m.ctx);
      }
      auto rrng = run_rng(cfg, 0, t, ei);
      std::vector<IterationTrace> trace;
      (void)run(z, books_for(m, enc), traced, rrng, &trace);
      const double wall = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();

      StoppingCriterion fp;
      fp.kind = StoppingKind::kFixedPoint;
      fp.epsilon = cfg.stopping.epsilon;
      fp.max_iters = cfg.stopping.max_iters;
      StoppingCriterion conf;
      conf.kind = StoppingKind::kConfidence;
      conf.conf_threshold = enc == EncodingMode::kSparse ? cfg.conf_threshold_sparse
                                                         : cfg.conf_threshold_pixel;
      conf.max_iters = cfg.stopping.max_iters;

      auto to_record = [&](const Readout& r, const std::string& label) {
        TrialRecord rec;
        rec.sweep_label = label;
        rec.encoding = enc;
        rec.trial = static_cast<int>(t);
        rec.correct = (r.x == truth.x && r.y == truth.y && r.k == truth.k) ? 1.0 : 0.0;
        rec.iterations = r.iterations;
        rec.converged = r.converged;
        rec.final_confidences = r.confidences;
        rec.wall_ms = wall;
        return rec;
      };
      ArmPair pair{to_record(readout_trace(trace, fp), "fixed_point"),
                   to_record(readout_trace(trace, conf), "confidence")};
      rows[t].push_back(std::move(pair));
    }
  });

  ExperimentOutput out;
  for (const std::string& label : {std::string("fixed_point"), std::string("confidence")}) {
    for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
      for (std::size_t t = 0; t < rows.size(); ++t) {
        out.records.push_back(label == "fixed_point" ? rows[t][ei].fixed_point
                                                     : rows[t][ei].confidence);
      }
    }
  }
  out.summary = summarize(out.records);
  return out;
}

ExperimentOutput run_whitening(const ExperimentConfig& cfg) {
  const auto encodings = checked_encodings(cfg);
  const Materials m = build_image_materials(cfg, cfg.side, 0, true);
  const SparseConfig inf_cfg = scene_inference_config(cfg, m.solver_step);
  const int n_classes = static_cast<int>(m.canonical_images.size());

  std::vector<std::vector<TrialRecord>> rows(static_cast<std::size_t>(cfg.trials));
  parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
    auto srng = scene_rng(cfg, 0, t);
    std::uniform_int_distribution<Eigen::Index> pick_k(0, n_classes - 1);
    std::uniform_int_distribution<Eigen::Index> pick_pos(0, cfg.side - 1);
    const Eigen::Index k = pick_k(srng);
    const Eigen::Index x = pick_pos(srng);
    const Eigen::Index y = pick_pos(srng);
    const Image scene = circular_shift(m.canonical_images[static_cast<std::size_t>(k)],
                                       static_cast<int>(x), static_cast<int>(y));
    const ScenePlacement truth{k, x, y};

    for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
      const EncodingMode enc = encodings[ei];
      const auto start = std::chrono::steady_clock::now();
      ComplexVector z;
      if (enc == EncodingMode::kSparse) {
        z = encode_sparse(infer_maps(scene, *m.dict, inf_cfg), *m.ctx);
      } else {
        z = encode_pixel(scene, *m.ctx);
      }
      const double enc_wall = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
      for (int arm = 0; arm < 2; ++arm) {
        const bool whitened = arm == 1;
        auto rrng = run_rng(cfg, 0, t, ei, static_cast<std::uint64_t>(arm));
        const FactorizationResult res =
            run(z, books_for(m, enc, whitened), cfg.stopping, rrng);
        TrialRecord rec;
        rec.sweep_label = whitened ? "whitened" : "unwhitened";
        rec.encoding = enc;
        rec.trial = static_cast<int>(t);
        rec.correct = triple_correct(res, truth) ? 1.0 : 0.0;
        rec.iterations = res.iterations;
        rec.converged = res.converged;
        rec.final_confidences = res.final_confidences;
        rec.wall_ms = enc_wall;
        rows[t].push_back(std::move(rec));
      }
    }
  });

  ExperimentOutput out;
  for (int arm = 0; arm < 2; ++arm) {
    const std::string label = arm == 1 ? "whitened" : "unwhitened";
    for (std::size_t ei = 0; ei < encodings.size(); ++ei) {
      for (std::size_t t = 0; t < rows.size(); ++t) {
        out.records.push_back(rows[t][ei * 2 + static_cast<std::size_t>(arm)]);
      }
    }
  }
  out.summary = summarize(out.records);
  return out;
}

int nearest_rank(const std::vector<int>& sorted, double pct) {
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "bars_scaling") return ExperimentKind::kBarsScaling;
  if (name == "mnist_scaling") return ExperimentKind::kMnistScaling;
  if (name == "letters") return ExperimentKind::kLetters;
  if (name == "multi_object") return ExperimentKind::kMultiObject;
  if (name == "confidence") return ExperimentKind::kConfidence;
  if (name == "whitening") return ExperimentKind::kWhitening;
  throw ConfigError("unknown experiment kind: " + name);
}

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kBarsScaling: return "bars_scaling";
    case ExperimentKind::kMnistScaling: return "mnist_scaling";
    case ExperimentKind::kLetters: return "letters";
    case ExperimentKind::kMultiObject: return "multi_object";
    case ExperimentKind::kConfidence: return "confidence";
    case ExperimentKind::kWhitening: return "whitening";
  }
  return "unknown";
}

std::string encoding_name(EncodingMode mode) {
  return mode == EncodingMode::kSparse ? "sparse" : "pixel";
}

void ExperimentConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (side < 1) throw ConfigError("side must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (lambda < 0) throw ConfigError("lambda must be >= 0");
  if (class_count < 1) throw ConfigError("class_count must be >= 1");
  if (stopping.max_iters < 0) throw ConfigError("max_iters must be >= 0");
  if (stopping.epsilon <= 0) throw ConfigError("epsilon must be > 0");
  if (conf_threshold_sparse < 0 || conf_threshold_sparse > 1 || conf_threshold_pixel < 0 ||
      conf_threshold_pixel > 1) {
    throw ConfigError("confidence thresholds must lie in [0, 1]");
  }
  if (encodings.empty()) throw ConfigError("at least one encoding is required");
  if (inference_max_iters < 1) throw ConfigError("inference_max_iters must be >= 1");
  if (inference_tol <= 0) throw ConfigError("inference_tol must be > 0");
  if (whiten_epsilon < 0) throw ConfigError("whiten_epsilon must be >= 0");
  if (bars_per_shape < 1 || bars_per_shape > 3) {
    throw ConfigError("bars_per_shape must be in [1, 3]");
  }
  const bool needs_sweep = kind == ExperimentKind::kBarsScaling ||
                           kind == ExperimentKind::kMnistScaling ||
                           kind == ExperimentKind::kLetters ||
                           kind == ExperimentKind::kMultiObject;
  if (needs_sweep && sweep.empty()) throw ConfigError("sweep must be non-empty");
  for (int v : sweep) {
    if (v < 1) throw ConfigError("sweep values must be >= 1");
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ExperimentKind::kBarsScaling:
      cfg.dim = 2500;
      cfg.side = 100;
      cfg.sweep = {5, 15, 30, 50};
      cfg.lambda = 0.1;
      cfg.stopping = {StoppingKind::kFixedPoint, 0.01, 0.6, 100};
      break;
    case ExperimentKind::kMultiObject:
      cfg.dim = 2500;
      cfg.side = 100;
      cfg.sweep = {1, 2, 3, 4, 5};
      cfg.class_count = 10;
      cfg.lambda = 0.1;
      cfg.stopping = {StoppingKind::kFixedPoint, 0.01, 0.6, 100};
      break;
    case ExperimentKind::kMnistScaling:
      cfg.dim = 5000;
      cfg.sweep = {60, 120};
      cfg.side = 120;
      cfg.class_count = 10;
      cfg.lambda = 0.2;
      cfg.stopping = {StoppingKind::kFixedPoint, 0.05, 0.6, 20};
      break;
    case ExperimentKind::kLetters:
      cfg.dim = 5000;
      cfg.sweep = {120};
      cfg.side = 120;
      cfg.class_count = 26;
      cfg.lambda = 0.2;
      cfg.stopping = {StoppingKind::kFixedPoint, 0.05, 0.6, 20};
      break;
    case ExperimentKind::kConfidence:
      cfg.dim = 5000;
      cfg.side = 120;
      cfg.class_count = 10;
      cfg.lambda = 0.2;
      cfg.stopping = {StoppingKind::kFixedPoint, 0.05, 0.6, 20};
      break;
    case ExperimentKind::kWhitening:
      cfg.dim = 2500;
      cfg.side = 60;
      cfg.class_count = 10;
      cfg.lambda = 0.2;
      cfg.trials = 300;
      cfg.stopping = {StoppingKind::kFixedPoint, 0.05, 0.6, 20};
      break;
  }
  return cfg;
}

namespace {

std::vector<int> parse_int_list(const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(std::stoi(item));
    }
  }
  return out;
}

}  // namespace

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " has no '=': " + line);
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto it = kv.find("kind");
  if (it == kv.end()) {
    throw ConfigError("config file must set 'kind'");
  }
  ExperimentConfig cfg = default_config(parse_experiment_kind(it->second));
  kv.erase(it);

  for (const auto& [key, value] : kv) {
    try {
      if (key == "dim") cfg.dim = std::stol(value);
      else if (key == "side") cfg.side = std::stoi(value);
      else if (key == "sweep") cfg.sweep = parse_int_list(value);
      else if (key == "class_count") cfg.class_count = std::stoi(value);
      else if (key == "lambda") cfg.lambda = std::stod(value);
      else if (key == "trials") cfg.trials = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "stopping") {
        if (value == "fixed_point") cfg.stopping.kind = StoppingKind::kFixedPoint;
        else if (value == "confidence") cfg.stopping.kind = StoppingKind::kConfidence;
        else if (value == "max_iters_only") cfg.stopping.kind = StoppingKind::kMaxItersOnly;
        else throw ConfigError("unknown stopping kind: " + value);
      }
      else if (key == "epsilon") cfg.stopping.epsilon = std::stod(value);
      else if (key == "max_iters") cfg.stopping.max_iters = std::stoi(value);
      else if (key == "conf_threshold_sparse") cfg.conf_threshold_sparse = std::stod(value);
      else if (key == "conf_threshold_pixel") cfg.conf_threshold_pixel = std::stod(value);
      else if (key == "encodings") {
        cfg.encodings.clear();
        std::stringstream ss(value);
        std::string enc;
        while (std::getline(ss, enc, ',')) {
          if (enc == "sparse") cfg.encodings.push_back(EncodingMode::kSparse);
          else if (enc == "pixel") cfg.encodings.push_back(EncodingMode::kPixel);
          else throw ConfigError("unknown encoding: " + enc);
        }
      }
      else if (key == "output") cfg.output_path = value;
      else if (key == "dict") cfg.dict_path = value;
      else if (key == "digits") cfg.digits_path = value;
      else if (key == "labels") cfg.labels_path = value;
      else if (key == "letters_dir") cfg.letters_dir = value;
      else if (key == "threads") cfg.threads = std::stoi(value);
      else if (key == "bars_per_shape") cfg.bars_per_shape = std::stoi(value);
      else if (key == "multi_cleaned") cfg.multi_cleaned = value == "1" || value == "true";
      else if (key == "inference_max_iters") cfg.inference_max_iters = std::stoi(value);
      else if (key == "inference_tol") cfg.inference_tol = std::stod(value);
      else if (key == "whiten_epsilon") cfg.whiten_epsilon = std::stod(value);
      else if (key == "position_tolerance") cfg.position_tolerance = std::stoi(value);
      else throw ConfigError("unknown config key: " + key);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad value for config key '" + key + "': " + value);
    }
  }
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  if (const char* env = std::getenv("RESONATOR_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("RESONATOR_SEED is not an integer: ") + env);
    }
  }
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("summarize: empty record list");
  }
  std::vector<std::pair<std::string, EncodingMode>> order;
  std::map<std::pair<std::string, int>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.sweep_label, static_cast<int>(r.encoding));
    if (groups.find(key) == groups.end()) {
      order.emplace_back(r.sweep_label, r.encoding);
    }
    groups[key].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [label, enc] : order) {
    const auto& group = groups[{label, static_cast<int>(enc)}];
    SummaryRow row;
    row.sweep_label = label;
    row.encoding = enc;
    row.trials = static_cast<int>(group.size());
    std::vector<int> iters;
    double acc = 0.0;
    double conv = 0.0;
    double conf_correct = 0.0;
    double conf_incorrect = 0.0;
    double iter_sum = 0.0;
    for (const auto* r : group) {
      acc += r->correct;
      conv += r->converged ? 1.0 : 0.0;
      iters.push_back(r->iterations);
      iter_sum += r->iterations;
      const double mc = mean_confidence(r->final_confidences);
      if (r->correct >= 1.0) {
        conf_correct += mc;
        ++row.n_correct;
      } else {
        conf_incorrect += mc;
        ++row.n_incorrect;
      }
    }
    std::sort(iters.begin(), iters.end());
    row.accuracy = acc / static_cast<double>(group.size());
    row.convergence_rate = conv / static_cast<double>(group.size());
    row.iterations_median = nearest_rank(iters, 50.0);
    row.iterations_q25 = nearest_rank(iters, 25.0);
    row.iterations_q75 = nearest_rank(iters, 75.0);
    row.iterations_mean = iter_sum / static_cast<double>(group.size());
    row.mean_conf_correct = row.n_correct > 0 ? conf_correct / row.n_correct : 0.0;
    row.mean_conf_incorrect = row.n_incorrect > 0 ? conf_incorrect / row.n_incorrect : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentOutput out;
  switch (cfg.kind) {
    case ExperimentKind::kBarsScaling:
      out = run_bars_scaling(cfg);
      break;
    case ExperimentKind::kMultiObject:
      out = run_multi_object(cfg);
      break;
    case ExperimentKind::kMnistScaling:
    case ExperimentKind::kLetters:
      out = run_image_scaling(cfg);
      break;
    case ExperimentKind::kConfidence:
      out = run_confidence(cfg);
      break;
    case ExperimentKind::kWhitening:
      out = run_whitening(cfg);
      break;
  }
  if (!cfg.output_path.empty()) {
    write_trials_csv(cfg.output_path + ".csv", out.records);
    write_summary_csv(cfg.output_path + "_summary.csv", out.summary);
  }
  return out;
}

void write_trials_csv(const std::filesystem::path& path,
                      const std::vector<TrialRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write trials CSV: " + path.string());
  }
  out << "sweep,encoding,trial,correct,iterations,converged,conf_h,conf_v,conf_o\n";
  for (const auto& r : records) {
    out << r.sweep_label << ',' << encoding_name(r.encoding) << ',' << r.trial << ','
        << fmt(r.correct) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
        << fmt(r.final_confidences[0]) << ',' << fmt(r.final_confidences[1]) << ','
        << fmt(r.final_confidences[2]) << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write summary CSV: " + path.string());
  }
  out << "sweep,encoding,trials,accuracy,iterations_median,iterations_q25,iterations_q75,"
         "iterations_mean,convergence_rate,mean_conf_correct,mean_conf_incorrect\n";
  for (const auto& r : rows) {
    out << r.sweep_label << ',' << encoding_name(r.encoding) << ',' << r.trials << ','
        << fmt(r.accuracy) << ',' << r.iterations_median << ',' << r.iterations_q25 << ','
        << r.iterations_q75 << ',' << fmt(r.iterations_mean) << ',' << fmt(r.convergence_rate)
        << ',' << fmt(r.mean_conf_correct) << ',' << fmt(r.mean_conf_incorrect) << '\n';
  }
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-14s %-8s %7s %9s %8s %8s %8s %9s\n", "sweep", "encoding",
                "trials", "accuracy", "it_med", "it_q25", "it_q75", "conv_rate");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-14s %-8s %7d %9.4f %8d %8d %8d %9.3f\n",
                  r.sweep_label.c_str(), encoding_name(r.encoding).c_str(), r.trials, r.accuracy,
                  r.iterations_median, r.iterations_q25, r.iterations_q75, r.convergence_rate);
    os << buf;
  }
  return os.str();
}

Dictionary train_dictionary_from_idx(const std::filesystem::path& digits_path, int n, int patch,
                                     int max_images, const LearnConfig& cfg) {
  auto images = load_idx_images(digits_path);
  if (max_images > 0 && static_cast<int>(images.size()) > max_images) {
    images.erase(images.begin() + max_images, images.end());
  }
  return learn_dictionary(images, n, patch, cfg);
}

}  // namespace vsa
