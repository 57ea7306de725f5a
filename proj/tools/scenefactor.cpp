// Command-line driver: dataset generation, dictionary training, scene
// encoding, single-scene factorization and the experiment harness.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vsa/containers.hpp"
#include "vsa/datasets.hpp"
#include "vsa/encoder.hpp"
#include "vsa/errors.hpp"
#include "vsa/harness.hpp"
#include "vsa/multi_object.hpp"
#include "vsa/resonator.hpp"
#include "vsa/rng.hpp"

namespace fs = std::filesystem;
using namespace vsa;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

StoppingCriterion make_stopping(const std::string& kind, double epsilon, double conf_threshold,
                                int max_iters) {
  StoppingCriterion crit;
  if (kind == "fixed_point") {
    crit.kind = StoppingKind::kFixedPoint;
  } else if (kind == "confidence") {
    crit.kind = StoppingKind::kConfidence;
  } else if (kind == "max_iters_only") {
    crit.kind = StoppingKind::kMaxItersOnly;
  } else {
    throw ConfigError("unknown stopping kind: " + kind);
  }
  crit.epsilon = epsilon;
  crit.conf_threshold = conf_threshold;
  crit.max_iters = max_iters;
  return crit;
}

int cmd_gen_bars(int count, int bars, std::uint64_t seed, int scenes, int objects, int side,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto rng = make_rng(seed);
  BarsConfig cfg;
  cfg.min_bars = bars;
  cfg.max_bars = bars;
  const auto shapes = gen_bars_shapes(count, rng, cfg);
  const Dictionary dict = bars_dictionary();
  save_dictionary(fs::path(out_dir) / "bars_dictionary.cscd", dict);
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const std::string stem = "shape_" + std::to_string(k);
    save_pgm(fs::path(out_dir) / (stem + ".pgm"), shapes[k].grid);
    save_feature_maps(fs::path(out_dir) / (stem + ".csca"), shapes[k].ground_truth_maps);
  }
  std::vector<MultiSceneTruth> truths;
  for (int s = 0; s < scenes; ++s) {
    std::uniform_int_distribution<Eigen::Index> pick_k(0, count - 1);
    std::uniform_int_distribution<int> pick_pos(0, side - 1);
    std::vector<PlacedObject> placed;
    for (int i = 0; i < objects; ++i) {
      const Eigen::Index k = pick_k(rng);
      placed.push_back(
          {shapes[static_cast<std::size_t>(k)].grid, k, pick_pos(rng), pick_pos(rng)});
    }
    const SceneSpec scene = place_scene(placed, side);
    save_pgm(fs::path(out_dir) / ("scene_" + std::to_string(s) + ".pgm"), scene.image);
    truths.push_back(scene.truth);
  }
  if (scenes > 0) {
    save_truth_csv(fs::path(out_dir) / "truth.csv", truths);
  }
  std::cout << "wrote " << count << " shapes and " << scenes << " scenes to " << out_dir << "\n";
  return 0;
}

int cmd_train_dict(const std::string& images, int n, int patch, double lambda, int rounds,
                   int max_images, int fista_iters, std::uint64_t seed, int threads,
                   const std::string& out) {
  LearnConfig cfg;
  cfg.inference.lambda = lambda;
  cfg.inference.max_iters = fista_iters;
  cfg.inference.tol = 1e-3;
  cfg.rounds = rounds;
  cfg.seed = seed;
  cfg.threads = threads;
  const Dictionary dict = train_dictionary_from_idx(images, n, patch, max_images, cfg);
  save_dictionary(out, dict);
  std::cout << "trained " << n << " filters of size " << patch << "x" << patch << " -> " << out
            << "\n";
  return 0;
}

EncoderContext context_for(Eigen::Index dim, std::uint32_t period, int filters,
                           std::uint64_t seed) {
  auto rng = make_rng(seed);
  return EncoderContext::create(dim, period, filters, rng);
}

int cmd_encode(const std::string& image_path, const std::string& mode, Eigen::Index dim,
               std::uint64_t seed, const std::string& dict_path, double lambda, int fista_iters,
               const std::string& maps_out, const std::string& out) {
  const Image image = load_pgm(image_path);
  const auto period = static_cast<std::uint32_t>(image.side());
  ComplexVector z;
  if (mode == "sparse") {
    if (dict_path.empty()) {
      throw ConfigError("sparse encoding requires --dict");
    }
    const Dictionary dict = load_dictionary(dict_path);
    const EncoderContext ctx = context_for(dim, period, dict.count(), seed);
    SparseConfig cfg;
    cfg.lambda = lambda;
    cfg.max_iters = fista_iters;
    const FeatureMaps maps = infer_maps(image, dict, cfg);
    if (!maps_out.empty()) {
      save_feature_maps(maps_out, maps);
    }
    z = encode_sparse(maps, ctx);
  } else if (mode == "pixel") {
    const EncoderContext ctx = context_for(dim, period, 1, seed);
    z = encode_pixel(image, ctx);
  } else {
    throw ConfigError("unknown encoding mode: " + mode);
  }
  save_complex_vector(out, z);
  std::cout << "encoded " << image_path << " (" << mode << ", D=" << dim << ") -> " << out
            << "\n";
  return 0;
}

int cmd_factorize(const std::string& scene_path, const std::string& mode, Eigen::Index dim,
                  std::uint64_t seed, const std::string& dict_path,
                  const std::string& templates_dir, int bars_count, int m, double lambda,
                  int fista_iters, const std::string& stopping, double epsilon,
                  double conf_threshold, int max_iters, bool cleaned,
                  const std::string& trace_path) {
  const Image scene = load_pgm(scene_path);
  const auto period = static_cast<std::uint32_t>(scene.side());
  const StoppingCriterion crit = make_stopping(stopping, epsilon, conf_threshold, max_iters);
  if (!trace_path.empty() && m != 1) {
    throw ConfigError("--trace requires a single extraction (--m 1)");
  }

  auto rng = make_rng(seed);
  std::optional<Dictionary> dict;
  std::optional<EncoderContext> ctx;
  SparseConfig inf_cfg;
  inf_cfg.lambda = lambda;
  inf_cfg.max_iters = fista_iters;

  // Object set: either a directory of PGM templates or generated bars shapes.
  std::vector<std::pair<std::string, Image>> objects;
  if (!templates_dir.empty()) {
    for (const auto& entry : fs::directory_iterator(templates_dir)) {
      if (entry.path().extension() == ".pgm") {
        objects.emplace_back(entry.path().stem().string(), load_pgm(entry.path()));
      }
    }
    std::sort(objects.begin(), objects.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (objects.empty()) {
      throw ConfigError("no .pgm templates in " + templates_dir);
    }
  }

  if (mode == "sparse") {
    if (dict_path.empty()) {
      throw ConfigError("sparse factorization requires --dict");
    }
    dict = load_dictionary(dict_path);
    ctx = EncoderContext::create(dim, period, dict->count(), rng);
  } else if (mode == "pixel") {
    ctx = EncoderContext::create(dim, period, 1, rng);
  } else {
    throw ConfigError("unknown encoding mode: " + mode);
  }

  std::vector<ObjectTemplate> templates;
  if (!templates_dir.empty()) {
    // Pixel mode never touches the dictionary; pass a stand-in when absent.
    const Dictionary template_dict = dict ? *dict : bars_dictionary();
    for (const auto& [id, img] : objects) {
      const Image canonical = canonicalize(img, scene.side());
      templates.push_back(make_object_template(
          id, canonical, template_dict, *ctx, inf_cfg,
          mode == "sparse" ? EncodingMode::kSparse : EncodingMode::kPixel));
    }
  } else {
    const auto shapes = gen_bars_shapes(bars_count, rng);
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      Image canonical = Image::zeros(scene.side());
      canonical.grid().block(0, 0, kBarsFrame, kBarsFrame) = shapes[k].grid.grid();
      const std::string id = "shape" + std::to_string(k);
      if (mode == "sparse") {
        FeatureMaps canon = FeatureMaps::zeros(2, scene.side());
        for (int j = 0; j < 2; ++j) {
          canon.map(j).block(0, 0, kBarsFrame, kBarsFrame) = shapes[k].ground_truth_maps.map(j);
        }
        templates.push_back(ObjectTemplate{id, canonical, encode_sparse(canon, *ctx)});
      } else {
        templates.push_back(ObjectTemplate{id, canonical, encode_pixel(canonical, *ctx)});
      }
    }
  }

  const SceneCodebooks books = build_codebooks(*ctx, templates);
  ComplexVector z = mode == "sparse"
                        ? encode_sparse(infer_maps(scene, *dict, inf_cfg), *ctx)
                        : encode_pixel(scene, *ctx);

  if (m == 1 && !trace_path.empty()) {
    std::vector<IterationTrace> trace;
    const FactorizationResult res = run(z, books, crit, rng, &trace);
    std::ofstream out(trace_path);
    if (!out) {
      throw ConfigError("cannot write trace CSV: " + trace_path);
    }
    out << "t,conf_h,conf_v,conf_o,fixed_point_distance\n";
    char buf[160];
    for (const auto& row : trace) {
      std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n", row.t,
                    row.confidences[0], row.confidences[1], row.confidences[2],
                    row.fp_distance);
      out << buf;
    }
    std::printf("x=%ld y=%ld object=%s converged=%d iterations=%d conf=(%.3f, %.3f, %.3f)\n",
                static_cast<long>(res.x_index), static_cast<long>(res.y_index),
                books.o.label(res.k_index).c_str(), res.converged ? 1 : 0, res.iterations,
                res.final_confidences[0], res.final_confidences[1], res.final_confidences[2]);
    return 0;
  }

  MultiObjectOptions options;
  options.use_cleaned_estimate = cleaned;
  const auto results = factorize_multi(z, books, m, crit, rng, options);
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    std::printf(
        "extraction %zu: x=%ld y=%ld object=%s converged=%d iterations=%d conf=(%.3f, %.3f, "
        "%.3f)\n",
        r, static_cast<long>(res.x_index), static_cast<long>(res.y_index),
        books.o.label(res.k_index).c_str(), res.converged ? 1 : 0, res.iterations,
        res.final_confidences[0], res.final_confidences[1], res.final_confidences[2]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual scene encoding and resonator factorization toolkit"};
  app.require_subcommand(1);

  // gen-bars
  auto* gen = app.add_subcommand("gen-bars", "Generate bars shapes and scenes");
  int gen_count = 10, gen_bars = 2, gen_scenes = 0, gen_objects = 1, gen_side = 100;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "bars_out";
  gen->add_option("--count", gen_count, "number of shapes");
  gen->add_option("--bars", gen_bars, "bars per shape (1-3)");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--scenes", gen_scenes, "number of scenes to render");
  gen->add_option("--objects", gen_objects, "objects per scene");
  gen->add_option("--side", gen_side, "scene side");
  gen->add_option("--out", gen_out, "output directory");

  // train-dict
  auto* train = app.add_subcommand("train-dict", "Learn a convolutional dictionary");
  std::string train_images, train_out = "dictionary.cscd";
  int train_n = 16, train_patch = 12, train_rounds = 40, train_max = 600, train_fista = 60,
      train_threads = 0;
  double train_lambda = 0.2;
  std::uint64_t train_seed = 1;
  train->add_option("--images", train_images, "IDX image file")->required();
  train->add_option("--n", train_n, "filter count");
  train->add_option("--patch", train_patch, "filter side");
  train->add_option("--lambda", train_lambda, "sparsity penalty");
  train->add_option("--rounds", train_rounds, "alternation rounds");
  train->add_option("--max-images", train_max, "training subset size (0 = all)");
  train->add_option("--fista-iters", train_fista, "inference iterations per image");
  train->add_option("--seed", train_seed, "filter init seed");
  train->add_option("--threads", train_threads, "worker threads (0 = hardware)");
  train->add_option("--out", train_out, "output CSCD path");

  // encode
  auto* enc = app.add_subcommand("encode", "Encode an image into a scene vector");
  std::string enc_image, enc_mode = "sparse", enc_dict, enc_maps_out, enc_out = "scene.vsac";
  long enc_dim = 2500;
  double enc_lambda = 0.2;
  int enc_fista = 150;
  std::uint64_t enc_seed = 1;
  enc->add_option("--image", enc_image, "PGM image")->required();
  enc->add_option("--mode", enc_mode, "sparse | pixel");
  enc->add_option("--dim", enc_dim, "vector dimension D");
  enc->add_option("--seed", enc_seed, "codeword seed");
  enc->add_option("--dict", enc_dict, "dictionary (sparse mode)");
  enc->add_option("--lambda", enc_lambda, "sparsity penalty");
  enc->add_option("--fista-iters", enc_fista, "inference iterations");
  enc->add_option("--maps-out", enc_maps_out, "dump inferred maps (CSCA)");
  enc->add_option("--out", enc_out, "output VSAC path");

  // factorize
  auto* fac = app.add_subcommand("factorize", "Factorize a scene image");
  std::string fac_scene, fac_mode = "sparse", fac_dict, fac_templates, fac_stopping =
      "fixed_point", fac_trace;
  long fac_dim = 2500;
  int fac_bars = 10, fac_m = 1, fac_max_iters = 100, fac_fista = 150;
  double fac_lambda = 0.2, fac_epsilon = 0.01, fac_conf = 0.6;
  bool fac_cleaned = false;
  std::uint64_t fac_seed = 1;
  fac->add_option("--scene", fac_scene, "PGM scene image")->required();
  fac->add_option("--mode", fac_mode, "sparse | pixel");
  fac->add_option("--dim", fac_dim, "vector dimension D");
  fac->add_option("--seed", fac_seed, "codeword / init seed");
  fac->add_option("--dict", fac_dict, "dictionary (sparse mode)");
  fac->add_option("--templates", fac_templates, "directory of object PGM templates");
  fac->add_option("--bars", fac_bars, "generate this many bars shapes as the object set");
  fac->add_option("--m", fac_m, "number of objects to extract");
  fac->add_option("--lambda", fac_lambda, "sparsity penalty");
  fac->add_option("--fista-iters", fac_fista, "inference iterations");
  fac->add_option("--stopping", fac_stopping, "fixed_point | confidence | max_iters_only");
  fac->add_option("--epsilon", fac_epsilon, "fixed-point threshold");
  fac->add_option("--conf-threshold", fac_conf, "confidence threshold");
  fac->add_option("--max-iters", fac_max_iters, "iteration cap");
  fac->add_flag("--cleaned", fac_cleaned, "explain away decoded codebook entries");
  fac->add_option("--trace", fac_trace, "per-iteration trace CSV (requires --m 1)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a full experiment protocol");
  std::string exp_config, exp_kind, exp_output, exp_dict, exp_digits, exp_labels,
      exp_letters, exp_sweep;
  long exp_dim = -1;
  int exp_trials = -1, exp_threads = -1, exp_side = -1;
  std::int64_t exp_seed = -1;
  exp->add_option("--config", exp_config, "key=value config file");
  exp->add_option("--kind", exp_kind,
                  "bars_scaling | mnist_scaling | letters | multi_object | confidence | "
                  "whitening");
  exp->add_option("--output", exp_output, "CSV base path");
  exp->add_option("--dict", exp_dict, "dictionary path");
  exp->add_option("--digits", exp_digits, "IDX digit images");
  exp->add_option("--labels", exp_labels, "IDX digit labels");
  exp->add_option("--letters-dir", exp_letters, "letter asset directory");
  exp->add_option("--sweep", exp_sweep, "comma-separated sweep values");
  exp->add_option("--dim", exp_dim, "vector dimension D");
  exp->add_option("--side", exp_side, "scene side");
  exp->add_option("--trials", exp_trials, "trials per sweep point");
  exp->add_option("--seed", exp_seed, "experiment seed");
  exp->add_option("--threads", exp_threads, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_bars(gen_count, gen_bars, gen_seed, gen_scenes, gen_objects, gen_side,
                          gen_out);
    }
    if (train->parsed()) {
      return cmd_train_dict(train_images, train_n, train_patch, train_lambda, train_rounds,
                            train_max, train_fista, train_seed, train_threads, train_out);
    }
    if (enc->parsed()) {
      return cmd_encode(enc_image, enc_mode, enc_dim, enc_seed, enc_dict, enc_lambda, enc_fista,
                        enc_maps_out, enc_out);
    }
    if (fac->parsed()) {
      return cmd_factorize(fac_scene, fac_mode, fac_dim, fac_seed, fac_dict, fac_templates,
                           fac_bars, fac_m, fac_lambda, fac_fista, fac_stopping, fac_epsilon,
                           fac_conf, fac_max_iters, fac_cleaned, fac_trace);
    }
    if (exp->parsed()) {
      ExperimentConfig cfg;
      if (!exp_config.empty()) {
        cfg = load_config_file(exp_config);
      } else if (!exp_kind.empty()) {
        cfg = default_config(parse_experiment_kind(exp_kind));
      } else {
        throw ConfigError("experiment requires --config or --kind");
      }
      if (!exp_kind.empty() && !exp_config.empty() &&
          parse_experiment_kind(exp_kind) != cfg.kind) {
        throw ConfigError("--kind conflicts with the config file");
      }
      if (!exp_output.empty()) cfg.output_path = exp_output;
      if (!exp_dict.empty()) cfg.dict_path = exp_dict;
      if (!exp_digits.empty()) cfg.digits_path = exp_digits;
      if (!exp_labels.empty()) cfg.labels_path = exp_labels;
      if (!exp_letters.empty()) cfg.letters_dir = exp_letters;
      if (!exp_sweep.empty()) {
        cfg.sweep.clear();
        std::stringstream ss(exp_sweep);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) cfg.sweep.push_back(std::stoi(item));
        }
      }
      if (exp_dim > 0) cfg.dim = exp_dim;
      if (exp_side > 0) cfg.side = exp_side;
      if (exp_trials > 0) cfg.trials = exp_trials;
      if (exp_seed >= 0) cfg.seed = static_cast<std::uint64_t>(exp_seed);
      if (exp_threads >= 0) cfg.threads = exp_threads;
      apply_env_overrides(cfg);
      cfg.validate();
      const ExperimentOutput out = run_experiment(cfg);
      std::cout << summary_table(out.summary);
      if (!cfg.output_path.empty()) {
        std::cout << "trials: " << cfg.output_path << ".csv\nsummary: " << cfg.output_path
                  << "_summary.csv\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
