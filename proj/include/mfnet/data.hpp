#pragma once

// Data ingestion: MNIST IDX files, comma-separated vector files, and the
// synthetic generators used by the experiments.

#include "mfnet/manifold.hpp"
#include "mfnet/spd_tcn.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace mfnet {

inline constexpr std::uint32_t kIdxImagesMagic = 2051;
inline constexpr std::uint32_t kIdxLabelsMagic = 2049;

// Raw IDX tensor of unsigned bytes: big-endian magic, then one big-endian
// uint32 per dimension, then the payload.
struct IdxTensor {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

// Throws FormatError on unknown magic, truncated payload or a dimension
// product that does not fit in memory.
IdxTensor load_idx(const std::filesystem::path& path);
IdxTensor read_idx(std::istream& in);
void write_idx(std::ostream& out, const IdxTensor& t);

struct ImageSet {
  int rows = 0;
  int cols = 0;
  Matrix pixels;  // count x (rows*cols), scaled to [0, 1]
  int count() const { return static_cast<int>(pixels.rows()); }
};

ImageSet load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);
// Throws InvalidArgument when the counts differ.
void check_pairing(const ImageSet& images, std::span<const int> labels);

// One vector per line, comma-separated, no header. Throws FormatError on
// ragged or non-numeric rows.
Matrix read_csv_vectors(std::istream& in);
Matrix read_csv_vectors(const std::filesystem::path& path);

// Class with orientation a (degrees) has frame t = R(t a) D R(t a)ᵀ + noise,
// D = diag(C, C-1, ..., 1), R a rotation in the first two coordinates,
// noise symmetric with N(0, σ²) entries, projected back onto SPD.
std::vector<LabeledSequence> synth_spd_sequences(std::span<const double> orientations_deg,
                                                 int per_class, int frames, int dim, double noise,
                                                 std::uint64_t seed);

// N x n zero-mean Gaussian samples whose covariance has eigenvalues
// `variances` along the columns of `basis` (n x n orthogonal).
Matrix gaussian_samples(const Matrix& basis, std::span<const double> variances, int count,
                        std::mt19937_64& rng);

}  // namespace mfnet
