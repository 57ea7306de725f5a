#include "vsa/containers.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "vsa/errors.hpp"

namespace vsa {

namespace {

static_assert(std::endian::native == std::endian::little,
              "container IO assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) {
      throw ParseError("cannot open for writing: " + path.string());
    }
  }
  void magic(const char m[4]) { out_.write(m, 4); }
  void u16(std::uint16_t v) { out_.write(reinterpret_cast<const char*>(&v), 2); }
  void u32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
  void f64(double v) { out_.write(reinterpret_cast<const char*>(&v), 8); }
  void f64_array(const double* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(8 * n));
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : path_(path.string()), in_(path, std::ios::binary) {
    if (!in_) {
      throw ParseError("cannot open: " + path_);
    }
  }
  void expect_magic(const char expected[4]) {
    char m[5] = {0, 0, 0, 0, 0};
    read(m, 4, "magic");
    if (std::memcmp(m, expected, 4) != 0) {
      throw ParseError("bad magic in " + path_ + " at byte offset 0: expected '" +
                       std::string(expected, 4) + "', got '" + std::string(m, 4) + "'");
    }
  }
  std::uint16_t u16(const char* what) {
    std::uint16_t v;
    read(reinterpret_cast<char*>(&v), 2, what);
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    read(reinterpret_cast<char*>(&v), 4, what);
    return v;
  }
  double f64(const char* what) {
    double v;
    read(reinterpret_cast<char*>(&v), 8, what);
    return v;
  }
  void f64_array(double* data, std::size_t n, const char* what) {
    read(reinterpret_cast<char*>(data), 8 * n, what);
  }
  std::uint64_t offset() const { return offset_; }

 private:
  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ParseError("truncated " + path_ + " while reading " + what + " at byte offset " +
                       std::to_string(offset_ + static_cast<std::uint64_t>(in_.gcount())) +
                       " (missing " + std::to_string(n - static_cast<std::size_t>(in_.gcount())) +
                       " bytes)");
    }
    offset_ += n;
  }
  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

void check_version(std::uint16_t v, const std::string& what) {
  if (v != kContainerVersion) {
    throw ParseError("unsupported " + what + " container version " + std::to_string(v));
  }
}

void write_complex_payload(Writer& w, const Eigen::MatrixXcd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      w.f64(m(r, c).real());
      w.f64(m(r, c).imag());
    }
  }
}

Eigen::MatrixXcd read_complex_payload(Reader& rd, std::uint32_t dim, std::uint32_t count) {
  Eigen::MatrixXcd m(dim, count);
  for (std::uint32_t c = 0; c < count; ++c) {
    for (std::uint32_t r = 0; r < dim; ++r) {
      const double re = rd.f64("component real part");
      const double im = rd.f64("component imaginary part");
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

}  // namespace

void save_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  Writer w(path);
  w.magic("VSAC");
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(codebook.dim()));
  w.u32(static_cast<std::uint32_t>(codebook.size()));
  w.u32(0);
  write_complex_payload(w, codebook.matrix());
}

Codebook load_codebook(const std::filesystem::path& path) {
  Reader rd(path);
  rd.expect_magic("VSAC");
  check_version(rd.u16("version"), "VSAC");
  const std::uint32_t dim = rd.u32("dim");
  const std::uint32_t count = rd.u32("count");
  const std::uint32_t period = rd.u32("period");
  if (period != 0) {
    throw ParseError("expected a complex-payload VSAC container in " + path.string() +
                     ", found an FPE base (period " + std::to_string(period) + ")");
  }
  Eigen::MatrixXcd m = read_complex_payload(rd, dim, count);
  std::vector<std::string> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    labels[i] = std::to_string(i);
  }
  return Codebook(std::move(m), std::move(labels));
}

void save_complex_vector(const std::filesystem::path& path, const ComplexVector& v) {
  Writer w(path);
  w.magic("VSAC");
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(v.size()));
  w.u32(1);
  w.u32(0);
  write_complex_payload(w, v);
}

ComplexVector load_complex_vector(const std::filesystem::path& path) {
  Reader rd(path);
  rd.expect_magic("VSAC");
  check_version(rd.u16("version"), "VSAC");
  const std::uint32_t dim = rd.u32("dim");
  const std::uint32_t count = rd.u32("count");
  const std::uint32_t period = rd.u32("period");
  if (period != 0 || count != 1) {
    throw ParseError("expected a single complex vector in " + path.string());
  }
  return read_complex_payload(rd, dim, 1).col(0);
}

void save_fpe_base(const std::filesystem::path& path, const FpeBase& base) {
  Writer w(path);
  w.magic("VSAC");
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(base.dim()));
  w.u32(1);
  w.u32(base.period());
  for (std::uint32_t k : base.phase_indices()) {
    w.u32(k);
  }
}

FpeBase load_fpe_base(const std::filesystem::path& path) {
  Reader rd(path);
  rd.expect_magic("VSAC");
  check_version(rd.u16("version"), "VSAC");
  const std::uint32_t dim = rd.u32("dim");
  const std::uint32_t count = rd.u32("count");
  const std::uint32_t period = rd.u32("period");
  if (period == 0 || count != 1) {
    throw ParseError("expected an FPE base in " + path.string());
  }
  std::vector<std::uint32_t> indices(dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    indices[i] = rd.u32("phase index");
  }
  return FpeBase(std::move(indices), period);
}

void save_dictionary(const std::filesystem::path& path, const Dictionary& dict) {
  Writer w(path);
  w.magic("CSCD");
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(dict.count()));
  w.u32(static_cast<std::uint32_t>(dict.patch()));
  const int patch = dict.patch();
  for (int j = 0; j < dict.count(); ++j) {
    for (int v = 0; v < patch; ++v) {
      for (int u = 0; u < patch; ++u) {
        w.f64(dict.filter(j)(v, u));
      }
    }
  }
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  Reader rd(path);
  rd.expect_magic("CSCD");
  check_version(rd.u16("version"), "CSCD");
  const std::uint32_t n = rd.u32("filter count");
  const std::uint32_t patch = rd.u32("patch size");
  std::vector<Eigen::MatrixXd> filters(n, Eigen::MatrixXd(patch, patch));
  for (std::uint32_t j = 0; j < n; ++j) {
    for (std::uint32_t v = 0; v < patch; ++v) {
      for (std::uint32_t u = 0; u < patch; ++u) {
        filters[j](v, u) = rd.f64("filter value");
      }
    }
  }
  return Dictionary(std::move(filters));
}

void save_feature_maps(const std::filesystem::path& path, const FeatureMaps& maps) {
  Writer w(path);
  w.magic("CSCA");
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(maps.count()));
  w.u32(static_cast<std::uint32_t>(maps.side()));
  const int side = maps.side();
  for (int j = 0; j < maps.count(); ++j) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        w.f64(maps.at(j, x, y));
      }
    }
  }
}

FeatureMaps load_feature_maps(const std::filesystem::path& path) {
  Reader rd(path);
  rd.expect_magic("CSCA");
  check_version(rd.u16("version"), "CSCA");
  const std::uint32_t n = rd.u32("map count");
  const std::uint32_t side = rd.u32("map side");
  FeatureMaps maps = FeatureMaps::zeros(static_cast<int>(n), static_cast<int>(side));
  for (std::uint32_t j = 0; j < n; ++j) {
    for (std::uint32_t y = 0; y < side; ++y) {
      for (std::uint32_t x = 0; x < side; ++x) {
        maps.at(static_cast<int>(j), static_cast<int>(x), static_cast<int>(y)) =
            rd.f64("coefficient");
      }
    }
  }
  return maps;
}

void save_whitening(const std::filesystem::path& path, const WhiteningTransform& wt) {
  Writer w(path);
  w.magic("VSAW");
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(wt.flat_size()));
  w.u32(static_cast<std::uint32_t>(wt.inv_scale().size()));
  w.u32(static_cast<std::uint32_t>(wt.source_shape().count));
  w.u32(static_cast<std::uint32_t>(wt.source_shape().side));
  w.f64(wt.epsilon());
  w.f64_array(wt.basis().data(), static_cast<std::size_t>(wt.basis().size()));
  w.f64_array(wt.inv_scale().data(), static_cast<std::size_t>(wt.inv_scale().size()));
  w.f64_array(wt.mean().data(), static_cast<std::size_t>(wt.mean().size()));
}

WhiteningTransform load_whitening(const std::filesystem::path& path) {
  Reader rd(path);
  rd.expect_magic("VSAW");
  check_version(rd.u16("version"), "VSAW");
  const std::uint32_t flat = rd.u32("flat size");
  const std::uint32_t rank = rd.u32("rank");
  GridShape shape;
  shape.count = static_cast<int>(rd.u32("shape count"));
  shape.side = static_cast<int>(rd.u32("shape side"));
  const double epsilon = rd.f64("epsilon");
  Eigen::MatrixXd basis(flat, rank);
  rd.f64_array(basis.data(), static_cast<std::size_t>(basis.size()), "basis");
  Eigen::VectorXd inv_scale(rank);
  rd.f64_array(inv_scale.data(), static_cast<std::size_t>(inv_scale.size()), "inverse scales");
  Eigen::VectorXd mean(flat);
  rd.f64_array(mean.data(), static_cast<std::size_t>(mean.size()), "mean");
  return WhiteningTransform(std::move(basis), std::move(inv_scale), std::move(mean), epsilon,
                            shape);
}

void save_metadata(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError("cannot write metadata file: " + path.string());
  }
  for (const auto& [k, v] : pairs) {
    out << k << '=' << v << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> load_metadata(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open metadata file: " + path.string());
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("metadata line without '=' in " + path.string() + ": " + line);
    }
    pairs.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return pairs;
}

}  // namespace vsa
