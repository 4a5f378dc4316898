#include "mfnet/data.hpp"

#include "mfnet/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace mfnet {

namespace {

bool read_u32_be(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
      std::uint32_t{b[3]};
  return true;
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

// Upper bound on payload size accepted from a header (4 GiB).
constexpr std::uint64_t kMaxIdxPayload = std::uint64_t{1} << 32;

}  // namespace

IdxTensor read_idx(std::istream& in) {
  IdxTensor t;
  if (!read_u32_be(in, t.magic)) throw FormatError("IDX: missing magic number");
  std::size_t ndims = 0;
  if (t.magic == kIdxImagesMagic) {
    ndims = 3;
  } else if (t.magic == kIdxLabelsMagic) {
    ndims = 1;
  } else {
    throw FormatError("IDX: bad magic " + std::to_string(t.magic) + " (expected 2049 or 2051)");
  }
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    std::uint32_t d = 0;
    if (!read_u32_be(in, d)) throw FormatError("IDX: truncated header");
    t.dims.push_back(d);
    total *= d;
    if (total > kMaxIdxPayload) throw FormatError("IDX: dimensions overflow");
  }
  t.data.resize(static_cast<std::size_t>(total));
  if (total > 0 && !in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(total))) {
    throw FormatError("IDX: truncated payload (expected " + std::to_string(total) + " bytes)");
  }
  return t;
}

IdxTensor load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open IDX file " + path.string());
  return read_idx(in);
}

void write_idx(std::ostream& out, const IdxTensor& t) {
  write_u32_be(out, t.magic);
  for (auto d : t.dims) write_u32_be(out, d);
  out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size()));
}

ImageSet load_idx_images(const std::filesystem::path& path) {
  IdxTensor t = load_idx(path);
  if (t.magic != kIdxImagesMagic) throw FormatError("IDX: " + path.string() + " is not an image file");
  ImageSet s;
  s.rows = static_cast<int>(t.dims[1]);
  s.cols = static_cast<int>(t.dims[2]);
  const int n = static_cast<int>(t.dims[0]);
  const int px = s.rows * s.cols;
  s.pixels.resize(n, px);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < px; ++j) {
      s.pixels(i, j) = static_cast<double>(t.data[static_cast<std::size_t>(i) * px + j]) / 255.0;
    }
  return s;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  IdxTensor t = load_idx(path);
  if (t.magic != kIdxLabelsMagic) throw FormatError("IDX: " + path.string() + " is not a label file");
  return std::vector<int>(t.data.begin(), t.data.end());
}

void check_pairing(const ImageSet& images, std::span<const int> labels) {
  if (static_cast<std::size_t>(images.count()) != labels.size()) {
    throw InvalidArgument("image/label count mismatch: " + std::to_string(images.count()) + " vs " +
                          std::to_string(labels.size()));
  }
}

Matrix read_csv_vectors(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      std::string field = line.substr(pos, comma - pos);
      // Trim spaces around the number.
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      field = b == std::string::npos ? "" : field.substr(b, e - b + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw FormatError("CSV line " + std::to_string(lineno) + ": bad number '" + field + "'");
      }
      row.push_back(v);
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("CSV line " + std::to_string(lineno) + ": expected " +
                        std::to_string(rows.front().size()) + " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix read_csv_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open CSV file " + path.string());
  return read_csv_vectors(in);
}

std::vector<LabeledSequence> synth_spd_sequences(std::span<const double> orientations_deg,
                                                 int per_class, int frames, int dim, double noise,
                                                 std::uint64_t seed) {
  if (dim < 2) throw InvalidArgument("synthetic SPD dim must be >= 2");
  if (frames < 2) throw InvalidArgument("synthetic SPD frames must be >= 2");
  if (per_class < 1) throw InvalidArgument("per_class must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidArgument("noise must be >= 0");
  if (orientations_deg.empty()) throw InvalidArgument("need at least one orientation class");
  for (std::size_t i = 0; i < orientations_deg.size(); ++i)
    for (std::size_t j = i + 1; j < orientations_deg.size(); ++j)
      if (orientations_deg[i] == orientations_deg[j]) throw InvalidArgument("orientations must be distinct");

  Matrix d = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) d(i, i) = static_cast<double>(dim - i);
  const Manifold spd = Manifold::spd();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<LabeledSequence> out;
  for (std::size_t c = 0; c < orientations_deg.size(); ++c) {
    const double a = orientations_deg[c] * std::numbers::pi / 180.0;
    for (int s = 0; s < per_class; ++s) {
      LabeledSequence seq;
      seq.label = static_cast<int>(c);
      for (int t = 0; t < frames; ++t) {
        Matrix r = Matrix::Identity(dim, dim);
        const double ang = t * a;
        r(0, 0) = std::cos(ang);
        r(0, 1) = -std::sin(ang);
        r(1, 0) = std::sin(ang);
        r(1, 1) = std::cos(ang);
        Matrix x = r * d * r.transpose();
        if (noise > 0.0) {
          for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) {
              const double e = noise * normal(rng);
              x(i, j) += e;
              if (j != i) x(j, i) += e;
            }
        }
        seq.frames.push_back(project_to_manifold(spd, x));
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

Matrix gaussian_samples(const Matrix& basis, std::span<const double> variances, int count,
                        std::mt19937_64& rng) {
  const int n = static_cast<int>(basis.rows());
  if (basis.cols() != n || static_cast<int>(variances.size()) != n) {
    throw InvalidArgument("gaussian_samples: basis must be n x n with n variances");
  }
  Vector sd(n);
  for (int i = 0; i < n; ++i) {
    if (!(variances[i] >= 0.0)) throw InvalidArgument("variances must be nonnegative");
    sd(i) = std::sqrt(variances[i]);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(count, n);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = normal(rng) * sd(j);
  return z * basis.transpose();
}

}  // namespace mfnet
