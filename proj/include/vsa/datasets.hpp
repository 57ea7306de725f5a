#pragma once

// Dataset generation and ingestion: the Random Bars shapes with exact
// ground-truth sparse codes, toroidal scene placement with recorded truth,
// IDX image/label files, PGM rasters and the letters fixture set.

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vsa/image.hpp"
#include "vsa/multi_object.hpp"
#include "vsa/sparse.hpp"

namespace vsa {

inline constexpr int kBarsFrame = 8;

struct BarPlacement {
  bool horizontal = false;
  int x = 0;  // column of a vertical bar; 0 for horizontal bars
  int y = 0;  // row of a horizontal bar; 0 for vertical bars
};

// One bars object: binary frame image, its bar list, and the exact
// coefficient maps over the two-filter bars dictionary. The image equals the
// reconstruction clipped to 1 (bars crossing at a pixel saturate).
struct BarsShape {
  Image grid;
  std::vector<BarPlacement> placements;
  FeatureMaps ground_truth_maps;
};

// Filter 0: vertical one-pixel-wide bar spanning the frame; filter 1: the
// horizontal counterpart. Both unit norm.
Dictionary bars_dictionary();

struct BarsConfig {
  int min_bars = 3;
  int max_bars = 3;  // configurable 1..3
};

// count distinct shapes (by canonical image). Shapes with two or more bars
// carry at least one bar of each orientation (one vertical plus one
// horizontal, then random extras); single-bar shapes have a random
// orientation. Shapes are canonical: the occupied rows/columns are shifted
// so the lowest used index is zero.
std::vector<BarsShape> gen_bars_shapes(int count, std::mt19937_64& rng,
                                       const BarsConfig& cfg = {});

struct PlacedObject {
  Image image;          // canonical object image (any side <= scene side)
  Eigen::Index object_index = 0;
  int x = 0;
  int y = 0;
};

struct SceneSpec {
  int side = 0;
  MultiSceneTruth truth;
  Image image;
};

// Stamps each object at its (x, y) with toroidal wrap. Overlaps combine by
// pixel-wise max (sum-then-clip behind the flag).
SceneSpec place_scene(const std::vector<PlacedObject>& objects, int side,
                      bool sum_clip = false);

// IDX image file (magic 0x00000803): u8 pixels scaled to [0, 1].
std::vector<Image> load_idx_images(const std::filesystem::path& path);
// IDX label file (magic 0x00000801).
std::vector<int> load_idx_labels(const std::filesystem::path& path);

Image load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const Image& image);

// Expects A.pgm .. Z.pgm; fails listing every absent letter. Non-square
// rasters are padded to square with black.
std::vector<std::pair<char, Image>> load_letter_assets(const std::filesystem::path& dir);

// Embeds src at the top-left of a side x side frame and circularly shifts it
// so the bounding box of pixels above the threshold starts at (0, 0).
Image canonicalize(const Image& src, int side, double threshold = 0.05);

// Writes one row per placement: scene_id,k,x,y.
void save_truth_csv(const std::filesystem::path& path,
                    const std::vector<MultiSceneTruth>& truths);

}  // namespace vsa
