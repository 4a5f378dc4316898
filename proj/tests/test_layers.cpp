#include "doctest.h"

#include "mfnet/errors.hpp"
#include "mfnet/layers.hpp"
#include "support.hpp"

#include <cmath>

using namespace mfnet;

namespace {

ManifoldPoint scalar(double x) { return EuclideanPoint(Vector::Constant(1, x)); }

WfmLayerParams params_of(int out, int slots, double value = 0.0) {
  WfmLayerParams p;
  p.theta = Matrix::Constant(out, slots, value);
  return p;
}

}  // namespace

TEST_CASE("weight map and penalty") {
  const double zero[] = {0.0};
  CHECK(weight_map(zero).raw()[0] == 0.5);
  const double two_zeros[] = {0.0, 0.0};
  CHECK(weight_penalty(two_zeros, 1.0) == 0.0);
  WfmLayerParams p = params_of(1, 3);
  CHECK(p.penalty() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p.weight_sum_deviation()(0) == doctest::Approx(0.5));
  // Mapped weights stay strictly positive even deep in the tail.
  const double tail[] = {-800.0, 1.0};
  CHECK(weight_map(tail).raw()[0] > 0.0);
  CHECK(sigmoid(logit(0.2)) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("covariance descriptor") {
  Matrix constant = Matrix::Constant(3, 5, 2.0);
  auto c = covariance_descriptor(std::span<const Matrix>(&constant, 1), 1e-6);
  CHECK((c[0].mat() - 1e-6 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-18);

  Matrix pm(2, 4);
  pm << 1, -1, 1, -1, 1, -1, 1, -1;
  auto d = covariance_descriptor(std::span<const Matrix>(&pm, 1), 1e-6);
  Matrix want = Matrix::Ones(2, 2) + 1e-6 * Matrix::Identity(2, 2);
  CHECK((d[0].mat() - want).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(3);
  std::vector<Matrix> frames;
  for (int i = 0; i < 20; ++i) frames.push_back(linalg::gaussian_matrix(4, 1 + i % 3, rng));
  for (const auto& s : covariance_descriptor(frames, 1e-3)) {
    CHECK(linalg::min_eigenvalue(s.mat()) >= 1e-3 - 1e-12);
  }

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(covariance_descriptor(std::span<const Matrix>(&bad, 1)), InvalidArgument);
  CHECK_THROWS_AS(covariance_descriptor(std::span<const Matrix>(&pm, 1), 0.0), InvalidArgument);
}

TEST_CASE("temporal layer shapes") {
  CHECK(TemporalWfmSpec{5, 3, 1, 4}.output_length(20) == 6);

  std::mt19937_64 rng(4);
  const auto spd = Manifold::spd();
  ChannelSequences input(1);
  for (int t = 0; t < 20; ++t) input[0].push_back(random_point_in_ball(spd, BallSpec{SpdPoint(Matrix::Identity(3, 3)), 1.0}, rng));
  TemporalWfmSpec spec{3, 2, 1, 4};
  auto out = temporal_wfm_forward(spd, input, spec, params_of(4, 3));
  REQUIRE(out.size() == 4);
  for (const auto& ch : out) CHECK(ch.size() == 9);

  // The shape law holds for every small configuration.
  for (int f = 1; f <= 32; ++f)
    for (int k = 1; k <= 8; ++k)
      for (int s = 1; s <= 4; ++s) {
        TemporalWfmSpec t{k, s, 1, 1};
        if (k > f) {
          CHECK_THROWS_AS(t.output_length(f), InvalidArgument);
        } else {
          CHECK(t.output_length(f) == (f - k) / s + 1);
        }
      }

  CHECK_THROWS_AS(temporal_wfm_forward(spd, input, TemporalWfmSpec{21, 1, 1, 1}, params_of(1, 21)),
                  InvalidArgument);
  CHECK_THROWS_AS(temporal_wfm_forward(spd, input, spec, params_of(4, 2)), InvalidArgument);
  CHECK_THROWS_AS(temporal_wfm_forward(spd, input, TemporalWfmSpec{3, 2, 2, 4}, params_of(4, 6)),
                  InvalidArgument);
}

TEST_CASE("temporal layer window order and absorption") {
  const auto e = Manifold::euclidean();
  // Two input channels, kernel 2: slot order is (c0,t0), (c0,t1), (c1,t0), (c1,t1).
  ChannelSequences input = {{scalar(1), scalar(2)}, {scalar(10), scalar(20)}};
  WfmLayerParams p = params_of(1, 4, -30.0);
  p.theta(0, 2) = 30.0;  // nearly all mass on channel 1, frame 0
  auto out = temporal_wfm_forward(e, input, TemporalWfmSpec{2, 1, 2, 1}, p);
  CHECK(std::get<EuclideanPoint>(out[0][0]).vec()(0) == doctest::Approx(10.0).epsilon(1e-9));

  std::mt19937_64 rng(5);
  const auto g = Manifold::grassmann();
  ManifoldPoint x = random_point_in_ball(g, BallSpec{testing::grassmann_center(5, 2, rng), 0.5}, rng);
  ChannelSequences same = {{x, x, x, x}};
  WfmLayerParams q = params_of(2, 3);
  q.theta(1, 0) = 2.0;
  q.theta(1, 2) = -3.0;
  auto same_out = temporal_wfm_forward(g, same, TemporalWfmSpec{3, 1, 1, 2}, q);
  for (const auto& ch : same_out)
    for (const auto& y : ch) CHECK(distance(g, x, y) < 1e-9);

  // PointSequence overload agrees with the raw one.
  std::vector<PointSequence> seqs = {PointSequence(g, same[0])};
  auto wrapped = temporal_wfm_forward(seqs, TemporalWfmSpec{3, 1, 1, 2}, q);
  CHECK(wrapped.size() == 2);
  CHECK(wrapped[0].points().size() == 2);
}

TEST_CASE("invariant layer") {
  const auto e = Manifold::euclidean();
  std::vector<ManifoldPoint> z = {scalar(0), scalar(2)};
  auto out = invariant_final_layer(e, z);
  CHECK(out.distances(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.distances(1) == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(6);
  for (auto& c : testing::random_cases(rng)) {
    CAPTURE(c.label);
    auto pts = testing::sample(c, 7, rng);
    std::vector<ManifoldPoint> equal(4, pts[0]);
    CHECK(invariant_final_layer(c.manifold, equal).distances.cwiseAbs().maxCoeff() < 1e-12);

    auto base = invariant_final_layer(c.manifold, pts).distances;
    Isometry g = random_isometry(c.manifold, pts[0], rng);
    std::vector<ManifoldPoint> moved;
    for (const auto& p : pts) moved.push_back(act(c.manifold, g, p));
    auto after = invariant_final_layer(c.manifold, moved).distances;
    CHECK((base - after).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK_THROWS_AS(invariant_final_layer(e, std::vector<ManifoldPoint>{}), InvalidArgument);
}

TEST_CASE("softmax head") {
  ClassifierHead h{Matrix::Zero(3, 4), Vector::Zero(3)};
  Vector p = fc_softmax(h, Vector::Ones(4));
  for (int i = 0; i < 3; ++i) CHECK(p(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  ClassifierHead sat{Matrix::Zero(2, 1), Vector(2)};
  sat.bias << 1000.0, 0.0;
  Vector q = fc_softmax(sat, Vector::Zero(1));
  CHECK(q(0) == doctest::Approx(1.0));
  CHECK(q(1) > 0.0);
  CHECK(std::isfinite(q(1)));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    ClassifierHead r{linalg::gaussian_matrix(4, 6, rng) * 10.0, linalg::gaussian_matrix(4, 1, rng)};
    Vector s = fc_softmax(r, linalg::gaussian_matrix(6, 1, rng));
    CHECK(std::abs(s.sum() - 1.0) < 1e-12);
    CHECK(s.minCoeff() > 0.0);
  }
  CHECK_THROWS_AS(fc_softmax(h, Vector::Ones(3)), InvalidArgument);
}

TEST_CASE("loss") {
  Vector perfect(2);
  perfect << 1.0, 0.0;
  CHECK(cross_entropy(perfect, 0) == 0.0);
  CHECK(cross_entropy(perfect, 1) == doctest::Approx(-std::log(1e-12)));
  Vector uniform = Vector::Constant(2, 0.5);
  CHECK(loss_total(uniform, 1, {}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  WfmLayerParams p = params_of(1, 3);
  CHECK(loss_total(perfect, 0, std::span<const WfmLayerParams>(&p, 1)) == doctest::Approx(0.25));
  CHECK_THROWS_AS(cross_entropy(perfect, 2), InvalidArgument);
}

TEST_CASE("finite differences") {
  const double at3[] = {3.0};
  Vector g = finite_diff_grad([](std::span<const double> x) { return x[0] * x[0]; }, at3);
  CHECK(std::abs(g(0) - 6.0) < 1e-7);
  const double lin[] = {0.3, -1.2};
  Vector gl = finite_diff_grad([](std::span<const double> x) { return 2.5 * x[0] - 0.75 * x[1] + 4.0; }, lin);
  CHECK(std::abs(gl(0) - 2.5) < 1e-9);
  CHECK(std::abs(gl(1) + 0.75) < 1e-9);
  CHECK_THROWS_AS(finite_diff_grad([](std::span<const double>) { return std::nan(""); }, at3),
                  NumericalError);
  CHECK_THROWS_AS(finite_diff_grad([](std::span<const double> x) { return x[0]; }, at3, 0.0),
                  InvalidArgument);
}

TEST_CASE("head gradient matches finite differences") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 4);
    const int d = 1 + static_cast<int>(rng() % 8);
    ClassifierHead h{linalg::gaussian_matrix(c, d, rng), linalg::gaussian_matrix(c, 1, rng)};
    Vector o = linalg::gaussian_matrix(d, 1, rng);
    const int label = static_cast<int>(rng() % c);
    HeadGradient an = head_gradient(h, o, label);

    std::vector<double> flat;
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < c; ++i) flat.push_back(h.weight(i, j));
    for (int i = 0; i < c; ++i) flat.push_back(h.bias(i));
    auto f = [&](std::span<const double> x) {
      ClassifierHead m{Matrix(c, d), Vector(c)};
      std::size_t k = 0;
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < c; ++i) m.weight(i, j) = x[k++];
      for (int i = 0; i < c; ++i) m.bias(i) = x[k++];
      return cross_entropy(fc_softmax(m, o), label);
    };
    Vector fd = finite_diff_grad(f, flat);
    Vector want(fd.size());
    std::size_t k = 0;
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < c; ++i) want(static_cast<int>(k++)) = an.weight(i, j);
    for (int i = 0; i < c; ++i) want(static_cast<int>(k++)) = an.bias(i);
    CHECK((fd - want).norm() <= 1e-6 * std::max(1.0, want.norm()));
  }
}

TEST_CASE("nonexpansive check") {
  std::mt19937_64 rng(9);
  const auto e = Manifold::euclidean();
  std::vector<ManifoldPoint> xs = {scalar(0), scalar(1)};
  std::vector<double> w = {1.0, 1.0};
  auto same = nonexpansive_check(e, xs, xs, w, w);
  CHECK(same.numerator == 0.0);

  for (auto& c : testing::random_cases(rng)) {
    CAPTURE(c.label);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 2 + rng() % 4;
      const std::size_t m = n + rng() % 3;
      auto x = testing::sample(c, n, rng);
      auto y = testing::sample(c, m, rng);
      auto r = nonexpansive_check(c.manifold, x, y, testing::random_weights(n, rng),
                                  testing::random_weights(m, rng));
      CHECK(r.ratio <= 1.0 + 1e-8);
    }
  }

  std::vector<double> one = {1.0};
  std::vector<ManifoldPoint> single = {scalar(0)};
  CHECK_THROWS_AS(nonexpansive_check(e, single, xs, one, w), InvalidArgument);
  CHECK_THROWS_AS(nonexpansive_check(e, xs, single, w, one), InvalidArgument);
  std::vector<double> lopsided = {1.0, 1e-12};
  CHECK_THROWS_AS(nonexpansive_check(e, xs, xs, lopsided, w), InvalidArgument);
}
