#include "doctest.h"

#include "mfnet/data.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/linalg.hpp"

#include <sstream>

#ifndef MFNET_DATA_DIR
#error "MFNET_DATA_DIR must point at the data directory"
#endif

using namespace mfnet;

namespace {

std::string header(std::uint32_t magic, std::vector<std::uint32_t> dims) {
  std::ostringstream os;
  IdxTensor t{magic, std::move(dims), {}};
  write_idx(os, t);
  return os.str();
}

}  // namespace

TEST_CASE("idx round trip is bit exact") {
  IdxTensor t{kIdxImagesMagic, {2, 3, 2}, {}};
  for (int i = 0; i < 12; ++i) t.data.push_back(static_cast<std::uint8_t>(i * 21));
  std::ostringstream os;
  write_idx(os, t);
  const std::string bytes = os.str();
  CHECK(bytes.size() == 16 + 12);
  CHECK(static_cast<unsigned char>(bytes[3]) == 0x03);  // big-endian 2051 = 00 00 08 03
  CHECK(static_cast<unsigned char>(bytes[2]) == 0x08);
  std::istringstream is(bytes);
  IdxTensor back = read_idx(is);
  CHECK(back.magic == t.magic);
  CHECK(back.dims == t.dims);
  CHECK(back.data == t.data);
  std::ostringstream again;
  write_idx(again, back);
  CHECK(again.str() == bytes);
}

TEST_CASE("idx errors") {
  std::istringstream bad_magic(header(1234, {}));
  CHECK_THROWS_AS(read_idx(bad_magic), FormatError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_idx(empty), FormatError);
  std::istringstream short_header(header(kIdxImagesMagic, {5, 28}));
  CHECK_THROWS_AS(read_idx(short_header), FormatError);
  std::istringstream truncated(header(kIdxLabelsMagic, {10}) + "abc");
  CHECK_THROWS_AS(read_idx(truncated), FormatError);
  std::istringstream huge(header(kIdxImagesMagic, {0xFFFFFFFFu, 0xFFFFu, 0xFFFFu}));
  CHECK_THROWS_AS(read_idx(huge), FormatError);
  CHECK_THROWS_AS(load_idx("/nonexistent/file"), InvalidArgument);
}

TEST_CASE("bundled mnist subset") {
  const std::string dir = MFNET_DATA_DIR;
  IdxTensor raw = load_idx(dir + "/mnist-1k-images-idx3-ubyte");
  CHECK(raw.dims == std::vector<std::uint32_t>{1000, 28, 28});
  ImageSet images = load_idx_images(dir + "/mnist-1k-images-idx3-ubyte");
  auto labels = load_idx_labels(dir + "/mnist-1k-labels-idx1-ubyte");
  CHECK(images.count() == 1000);
  CHECK(images.pixels.cols() == 784);
  CHECK(images.pixels.minCoeff() >= 0.0);
  CHECK(images.pixels.maxCoeff() <= 1.0);
  CHECK_NOTHROW(check_pairing(images, labels));
  std::vector<int> counts(10, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) CHECK(c == 100);

  labels.pop_back();
  CHECK_THROWS_AS(check_pairing(images, labels), InvalidArgument);
  CHECK_THROWS_AS(load_idx_images(dir + "/mnist-1k-labels-idx1-ubyte"), FormatError);
  CHECK_THROWS_AS(load_idx_labels(dir + "/mnist-1k-images-idx3-ubyte"), FormatError);
}

TEST_CASE("csv vectors") {
  std::istringstream ok("1,2,3\n4.5, -6 ,7e-1\r\n\n");
  Matrix m = read_csv_vectors(ok);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(1, 0) == 4.5);
  CHECK(m(1, 1) == -6.0);
  CHECK(m(1, 2) == 0.7);
  std::istringstream ragged("1,2,3\n4,5\n");
  CHECK_THROWS_AS(read_csv_vectors(ragged), FormatError);
  std::istringstream text("1,x,3\n");
  CHECK_THROWS_AS(read_csv_vectors(text), FormatError);
  std::istringstream blank_field("1,,3\n");
  CHECK_THROWS_AS(read_csv_vectors(blank_field), FormatError);
  std::istringstream nan_field("1,nan,3\n");
  CHECK_THROWS_AS(read_csv_vectors(nan_field), FormatError);
}

TEST_CASE("synthetic spd sequences") {
  const double orient[] = {30.0, 60.0};
  auto a = synth_spd_sequences(orient, 3, 20, 8, 0.0, 1);
  auto b = synth_spd_sequences(orient, 3, 20, 8, 0.0, 1);
  REQUIRE(a.size() == 6);
  CHECK(a[0].label == 0);
  CHECK(a[5].label == 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t t = 0; t < 20; ++t) CHECK(as_matrix(a[i].frames[t]) == as_matrix(b[i].frames[t]));

  const double zero[] = {0.0};
  auto c = synth_spd_sequences(zero, 1, 5, 4, 0.0, 2);
  Matrix d = Matrix::Zero(4, 4);
  d.diagonal() << 4, 3, 2, 1;
  for (const auto& f : c[0].frames) CHECK((as_matrix(f) - d).cwiseAbs().maxCoeff() < 1e-12);

  // Noisy frames stay SPD and differ by seed.
  auto n1 = synth_spd_sequences(orient, 1, 6, 3, 0.5, 3);
  auto n2 = synth_spd_sequences(orient, 1, 6, 3, 0.5, 4);
  CHECK(as_matrix(n1[0].frames[2]) != as_matrix(n2[0].frames[2]));
  for (const auto& f : n1[0].frames) CHECK(linalg::min_eigenvalue(as_matrix(f)) > 0.0);

  CHECK_THROWS_AS(synth_spd_sequences(orient, 1, 20, 1, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(synth_spd_sequences(orient, 1, 1, 4, 0.0, 1), InvalidArgument);
  const double dup[] = {30.0, 30.0};
  CHECK_THROWS_AS(synth_spd_sequences(dup, 1, 20, 4, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(synth_spd_sequences(orient, 1, 20, 4, -1.0, 1), InvalidArgument);
}

TEST_CASE("gaussian samples follow the requested spectrum") {
  std::mt19937_64 rng(5);
  Matrix basis = linalg::random_orthogonal(4, rng);
  const double var[] = {4.0, 2.0, 1.0, 0.5};
  Matrix x = gaussian_samples(basis, var, 200000, rng);
  Matrix cov = x.transpose() * x / static_cast<double>(x.rows());
  Matrix want = basis * Vector(Eigen::Map<const Vector>(var, 4)).asDiagonal() * basis.transpose();
  CHECK((cov - want).cwiseAbs().maxCoeff() < 0.05);
  CHECK_THROWS_AS(gaussian_samples(basis, std::span<const double>(var, 3), 10, rng), InvalidArgument);
}
