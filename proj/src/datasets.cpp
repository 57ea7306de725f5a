#include "vsa/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "vsa/errors.hpp"

namespace vsa {

namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

std::uint32_t read_u32_be(std::istream& in, std::uint64_t& offset, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (in.gcount() != 4) {
    throw ParseError(std::string("truncated file while reading ") + what + " at byte offset " +
                     std::to_string(offset));
  }
  offset += 4;
  return (static_cast<std::uint32_t>(bytes[0]) << 24) |
         (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace

Dictionary bars_dictionary() {
  const double v = 1.0 / std::sqrt(static_cast<double>(kBarsFrame));
  Eigen::MatrixXd vertical = Eigen::MatrixXd::Zero(kBarsFrame, kBarsFrame);
  Eigen::MatrixXd horizontal = Eigen::MatrixXd::Zero(kBarsFrame, kBarsFrame);
  for (int i = 0; i < kBarsFrame; ++i) {
    vertical(i, 0) = v;    // column u = 0
    horizontal(0, i) = v;  // row v = 0
  }
  return Dictionary({vertical, horizontal});
}

namespace {

// Bar amplitude such that a reconstructed bar pixel has value 1.
double bar_coefficient() { return std::sqrt(static_cast<double>(kBarsFrame)); }

BarsShape shape_from_placements(std::vector<BarPlacement> bars) {
  // Canonicalize: lowest used vertical column and horizontal row shift to 0.
  int min_col = kBarsFrame;
  int min_row = kBarsFrame;
  bool has_v = false;
  bool has_h = false;
  for (const auto& b : bars) {
    if (b.horizontal) {
      has_h = true;
      min_row = std::min(min_row, b.y);
    } else {
      has_v = true;
      min_col = std::min(min_col, b.x);
    }
  }
  // A horizontal bar spans every column (and a vertical bar every row), so
  // the bounding box already touches that axis's origin.
  const int dx = (has_h || !has_v) ? 0 : min_col;
  const int dy = (has_v || !has_h) ? 0 : min_row;
  for (auto& b : bars) {
    if (b.horizontal) {
      b.y -= dy;
    } else {
      b.x -= dx;
    }
  }

  FeatureMaps maps = FeatureMaps::zeros(2, kBarsFrame);
  for (const auto& b : bars) {
    if (b.horizontal) {
      maps.at(1, 0, b.y) = bar_coefficient();
    } else {
      maps.at(0, b.x, 0) = bar_coefficient();
    }
  }
  Image grid = Image::zeros(kBarsFrame);
  for (const auto& b : bars) {
    for (int i = 0; i < kBarsFrame; ++i) {
      if (b.horizontal) {
        grid.at(i, b.y) = 1.0;
      } else {
        grid.at(b.x, i) = 1.0;
      }
    }
  }
  return BarsShape{std::move(grid), std::move(bars), std::move(maps)};
}

}  // namespace

std::vector<BarsShape> gen_bars_shapes(int count, std::mt19937_64& rng, const BarsConfig& cfg) {
  if (count < 1) {
    throw std::invalid_argument("gen_bars_shapes: count must be >= 1");
  }
  if (cfg.min_bars < 1 || cfg.max_bars > 3 || cfg.min_bars > cfg.max_bars) {
    throw std::invalid_argument("gen_bars_shapes: bars per shape must satisfy 1 <= min <= max <= 3");
  }
  std::uniform_int_distribution<int> bar_count(cfg.min_bars, cfg.max_bars);
  std::uniform_int_distribution<int> orient(0, 1);
  std::uniform_int_distribution<int> offset(0, kBarsFrame - 1);

  std::vector<BarsShape> shapes;
  std::set<std::vector<std::pair<int, int>>> seen;  // canonical (orientation, offset) sets
  const int max_attempts = 10000 * count;
  int attempts = 0;
  while (static_cast<int>(shapes.size()) < count) {
    if (++attempts > max_attempts) {
      throw std::invalid_argument(
          "gen_bars_shapes: could not generate enough distinct shapes for the configured "
          "bars-per-shape range");
    }
    const int n = bar_count(rng);
    std::vector<BarPlacement> bars;
    bool duplicate_bar = false;
    // Multi-bar shapes get one bar of each orientation before random extras;
    // a shape whose bars all share one orientation canonicalizes onto the
    // frame edge and every such shape then reuses the same code cell.
    for (int i = 0; i < n; ++i) {
      BarPlacement b;
      if (n >= 2 && i == 0) {
        b.horizontal = false;
      } else if (n >= 2 && i == 1) {
        b.horizontal = true;
      } else {
        b.horizontal = orient(rng) == 1;
      }
      if (b.horizontal) {
        b.y = offset(rng);
      } else {
        b.x = offset(rng);
      }
      for (const auto& prev : bars) {
        if (prev.horizontal == b.horizontal && prev.x == b.x && prev.y == b.y) {
          duplicate_bar = true;
        }
      }
      bars.push_back(b);
    }
    if (duplicate_bar) {
      continue;
    }
    BarsShape shape = shape_from_placements(std::move(bars));
    std::vector<std::pair<int, int>> key;
    key.reserve(shape.placements.size());
    for (const auto& b : shape.placements) {
      key.emplace_back(b.horizontal ? 1 : 0, b.horizontal ? b.y : b.x);
    }
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) {
      continue;  // same canonical image; resample
    }
    shapes.push_back(std::move(shape));
  }
  return shapes;
}

SceneSpec place_scene(const std::vector<PlacedObject>& objects, int side, bool sum_clip) {
  if (side < 1) {
    throw std::invalid_argument("place_scene: side must be >= 1");
  }
  Image scene = Image::zeros(side);
  MultiSceneTruth truth;
  for (const auto& obj : objects) {
    if (obj.image.side() > side) {
      throw std::invalid_argument("place_scene: object larger than scene");
    }
    auto wrap = [side](int v) {
      int r = v % side;
      return r < 0 ? r + side : r;
    };
    const int ox = wrap(obj.x);
    const int oy = wrap(obj.y);
    for (int y = 0; y < obj.image.side(); ++y) {
      for (int x = 0; x < obj.image.side(); ++x) {
        const double val = obj.image.at(x, y);
        if (val == 0.0) {
          continue;
        }
        double& dst = scene.at(wrap(ox + x), wrap(oy + y));
        dst = sum_clip ? std::min(dst + val, 1.0) : std::max(dst, val);
      }
    }
    truth.placements.push_back({obj.object_index, ox, oy});
  }
  return SceneSpec{side, std::move(truth), std::move(scene)};
}

std::vector<Image> load_idx_images(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open IDX file: " + path.string());
  }
  std::uint64_t offset = 0;
  const std::uint32_t magic = read_u32_be(in, offset, "magic");
  if (magic != 0x00000803u) {
    throw ParseError("bad IDX image magic at byte offset 0: expected 0x00000803, got " +
                     hex32(magic));
  }
  const std::uint32_t count = read_u32_be(in, offset, "image count");
  const std::uint32_t rows = read_u32_be(in, offset, "row count");
  const std::uint32_t cols = read_u32_be(in, offset, "column count");
  const std::uint64_t payload =
      static_cast<std::uint64_t>(count) * rows * cols;
  if (rows == 0 || cols == 0 || payload > (1ULL << 33)) {
    throw ParseError("IDX dimensions overflow sane limits: count=" + std::to_string(count) +
                     " rows=" + std::to_string(rows) + " cols=" + std::to_string(cols));
  }
  std::vector<unsigned char> bytes(payload);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(payload));
  const std::uint64_t got = static_cast<std::uint64_t>(in.gcount());
  if (got != payload) {
    throw ParseError("truncated IDX payload at byte offset " + std::to_string(offset + got) +
                     ": expected " + std::to_string(payload) + " pixel bytes, missing " +
                     std::to_string(payload - got));
  }
  const int side = static_cast<int>(std::max(rows, cols));
  std::vector<Image> images;
  images.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    // Pad non-square frames to square with black.
    Image img = Image::zeros(side);
    const std::uint64_t base = static_cast<std::uint64_t>(i) * rows * cols;
    for (std::uint32_t y = 0; y < rows; ++y) {
      for (std::uint32_t x = 0; x < cols; ++x) {
        img.at(static_cast<int>(x), static_cast<int>(y)) =
            static_cast<double>(bytes[base + static_cast<std::uint64_t>(y) * cols + x]) / 255.0;
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open IDX file: " + path.string());
  }
  std::uint64_t offset = 0;
  const std::uint32_t magic = read_u32_be(in, offset, "magic");
  if (magic != 0x00000801u) {
    throw ParseError("bad IDX label magic at byte offset 0: expected 0x00000801, got " +
                     hex32(magic));
  }
  const std::uint32_t count = read_u32_be(in, offset, "label count");
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
  const std::uint64_t got = static_cast<std::uint64_t>(in.gcount());
  if (got != count) {
    throw ParseError("truncated IDX payload at byte offset " + std::to_string(offset + got) +
                     ": expected " + std::to_string(count) + " label bytes, missing " +
                     std::to_string(count - got));
  }
  return std::vector<int>(bytes.begin(), bytes.end());
}

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open PGM file: " + path.string());
  }
  std::string magic;
  in >> magic;
  if (magic != "P5") {
    throw ParseError("bad PGM magic in " + path.string() + ": expected P5, got '" + magic + "'");
  }
  auto next_token = [&in, &path]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw ParseError("truncated PGM header in " + path.string());
  };
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (width < 1 || height < 1) {
    throw ParseError("bad PGM dimensions in " + path.string());
  }
  if (maxval < 1 || maxval > 255) {
    throw ParseError("unsupported PGM maxval " + std::to_string(maxval) + " in " +
                     path.string() + " (8-bit required)");
  }
  in.get();  // single whitespace byte after the header
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw ParseError("truncated PGM payload in " + path.string());
  }
  const int side = std::max(width, height);
  Image img = Image::zeros(side);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at(x, y) = static_cast<double>(bytes[static_cast<std::size_t>(y) * width + x]) /
                     static_cast<double>(maxval);
    }
  }
  return img;
}

void save_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot write PGM file: " + path.string());
  }
  const int side = image.side();
  out << "P5\n" << side << " " << side << "\n255\n";
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double v = std::clamp(image.at(x, y), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

std::vector<std::pair<char, Image>> load_letter_assets(const std::filesystem::path& dir) {
  std::vector<char> missing;
  std::vector<std::pair<char, Image>> out;
  for (char c = 'A'; c <= 'Z'; ++c) {
    const auto path = dir / (std::string(1, c) + ".pgm");
    if (!std::filesystem::exists(path)) {
      missing.push_back(c);
      continue;
    }
    out.emplace_back(c, load_pgm(path));
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "letter assets missing from " << dir.string() << ":";
    for (char c : missing) {
      msg << ' ' << c;
    }
    throw ParseError(msg.str());
  }
  return out;
}

Image canonicalize(const Image& src, int side, double threshold) {
  if (src.side() > side) {
    throw std::invalid_argument("canonicalize: source larger than target frame");
  }
  Image framed = Image::zeros(side);
  framed.grid().block(0, 0, src.side(), src.side()) = src.grid();
  int min_x = side;
  int min_y = side;
  for (int y = 0; y < src.side(); ++y) {
    for (int x = 0; x < src.side(); ++x) {
      if (src.at(x, y) > threshold) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
      }
    }
  }
  if (min_x == side) {
    return framed;  // nothing above threshold; leave as-is
  }
  return circular_shift(framed, -min_x, -min_y);
}

void save_truth_csv(const std::filesystem::path& path,
                    const std::vector<MultiSceneTruth>& truths) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError("cannot write truth CSV: " + path.string());
  }
  out << "scene_id,k,x,y\n";
  for (std::size_t i = 0; i < truths.size(); ++i) {
    for (const auto& p : truths[i].placements) {
      out << i << ',' << p.k << ',' << p.x << ',' << p.y << '\n';
    }
  }
}

}  // namespace vsa
