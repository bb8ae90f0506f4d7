#include "ghostpixel/wavelet.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ghostpixel;

namespace {

// One-level orthonormal Haar analysis matrix: lowpass rows first.
Eigen::MatrixXd haar_matrix(Eigen::Index n) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    W(i, 2 * i) = s;
    W(i, 2 * i + 1) = s;
    W(n / 2 + i, 2 * i) = s;
    W(n / 2 + i, 2 * i + 1) = -s;
  }
  return W;
}

// Multi-level analysis through dense matrix products, in the usual
// quadrant layout.
Eigen::MatrixXd dense_dwt(Eigen::MatrixXd x, int levels) {
  Eigen::Index m = x.rows();
  for (int l = 0; l < levels; ++l) {
    const Eigen::MatrixXd W = haar_matrix(m);
    x.topLeftCorner(m, m) = W * x.topLeftCorner(m, m) * W.transpose();
    m /= 2;
  }
  return x;
}

double max_abs(const ImageD& a, const ImageD& b) { return (a - b).cwiseAbs().maxCoeff(); }

WaveletPyramid<double> random_pyramid(test::Gen& gen, Eigen::Index n, int levels) {
  return dwt2(gen.image(n, n), levels);
}

}  // namespace

TEST_SUITE("wavelet") {

TEST_CASE("2x2 analysis by hand") {
  ImageD x(2, 2);
  const double a = 1.0, b = 2.0, c = 4.0, d = 8.0;
  x << a, b, c, d;
  const auto p = dwt2(x, 1);
  REQUIRE(p.details.size() == 1);
  CHECK(p.approx(0, 0) == doctest::Approx((a + b + c + d) / 2));
  CHECK(p.details[0].horizontal(0, 0) == doctest::Approx((a - b + c - d) / 2));
  CHECK(p.details[0].vertical(0, 0) == doctest::Approx((a + b - c - d) / 2));
  CHECK(p.details[0].diagonal(0, 0) == doctest::Approx((a - b - c + d) / 2));
}

TEST_CASE("matches the dense Haar matrix oracle") {
  test::Gen gen(101);
  for (int levels : {1, 2, 3}) {
    const ImageD x = gen.image(16, 16);
    const Eigen::MatrixXd ref = dense_dwt(x, levels);
    const auto p = dwt2(x, levels);
    Eigen::Index m = 16;
    for (int l = 0; l < levels; ++l) {
      const Eigen::Index h = m / 2;
      const auto& band = p.details[static_cast<std::size_t>(l)];
      CHECK((band.horizontal - ref.block(0, h, h, h)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((band.vertical - ref.block(h, 0, h, h)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((band.diagonal - ref.block(h, h, h, h)).cwiseAbs().maxCoeff() < 1e-12);
      m = h;
    }
    CHECK((p.approx - ref.topLeftCorner(m, m)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("constants have no detail") {
  for (int levels : {1, 2, 4}) {
    const auto p = dwt2(ImageD(ImageD::Constant(16, 16, 0.7)), levels);
    CHECK(p.detail_l1() == doctest::Approx(0.0));
    CHECK((p.approx.array() - 0.7 * std::pow(2.0, levels)).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pyramid shape") {
  const auto p = dwt2(ImageD(ImageD::Zero(32, 32)), 3);
  CHECK(p.levels == 3);
  CHECK(p.approx.rows() == 4);
  CHECK(p.details[0].horizontal.rows() == 16);
  CHECK(p.details[2].diagonal.rows() == 4);
  CHECK(p.coefficient_count() == 32 * 32);
  CHECK_THROWS_AS(dwt2(ImageD(ImageD::Zero(12, 12)), 3), SizeError);
  CHECK_THROWS_AS(dwt2(ImageD(ImageD::Zero(8, 8)), 0), DomainError);
}

TEST_CASE("perfect reconstruction and Parseval") {
  test::Gen gen(102);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageD x = gen.image(64, 64);
    const auto p = dwt2(x, 3);
    CHECK(max_abs(idwt2(p), x) < 1e-10);
    CHECK(std::abs(p.energy() - x.squaredNorm()) < 1e-9 * std::max(1.0, x.squaredNorm()));
  }
  const ImageD small = gen.image(8, 8);
  CHECK(std::abs(dwt2(small, 2).energy() - small.squaredNorm()) < 1e-10);
}

TEST_CASE("zero pyramid and single atoms") {
  auto p = dwt2(ImageD(ImageD::Zero(16, 16)), 2);
  CHECK(idwt2(p) == ImageD::Zero(16, 16));
  for (std::size_t level : {0u, 1u}) {
    auto q = p;
    q.details[level].diagonal(1, 2) = 1.0;
    const ImageD atom = idwt2(q);
    CHECK(atom.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(atom.sum() == doctest::Approx(0.0));
  }
  auto q = p;
  q.approx(0, 0) = 1.0;
  CHECK(idwt2(q).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inconsistent pyramids are rejected") {
  auto p = dwt2(ImageD(ImageD::Zero(16, 16)), 2);
  p.details[1].vertical.resize(3, 3);
  CHECK_THROWS_AS(idwt2(p), SizeError);
}

TEST_CASE("linearity") {
  test::Gen gen(103);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageD x = gen.image(32, 32), y = gen.image(32, 32);
    const double a = gen.normal(), b = gen.normal();
    const auto px = dwt2(x, 3), py = dwt2(y, 3), pz = dwt2(ImageD(a * x + b * y), 3);
    CHECK(max_abs(pz.approx, a * px.approx + b * py.approx) < 1e-10);
    for (std::size_t l = 0; l < 3; ++l)
      CHECK(max_abs(pz.details[l].diagonal, a * px.details[l].diagonal + b * py.details[l].diagonal) < 1e-10);
    auto sum = px;
    sum.approx = a * px.approx + b * py.approx;
    for (std::size_t l = 0; l < 3; ++l) {
      sum.details[l].horizontal = a * px.details[l].horizontal + b * py.details[l].horizontal;
      sum.details[l].vertical = a * px.details[l].vertical + b * py.details[l].vertical;
      sum.details[l].diagonal = a * px.details[l].diagonal + b * py.details[l].diagonal;
    }
    CHECK(max_abs(idwt2(sum), a * x + b * y) < 1e-10);
  }
}

TEST_CASE("soft threshold") {
  ImageD x = ImageD::Zero(2, 2);
  auto p = dwt2(x, 1);
  p.approx(0, 0) = 0.3;
  p.details[0].horizontal(0, 0) = 3.0;
  p.details[0].vertical(0, 0) = -0.5;
  p.details[0].diagonal(0, 0) = -2.0;
  const auto q = soft_threshold(p, 1.0);
  CHECK(q.details[0].horizontal(0, 0) == 2.0);
  CHECK(q.details[0].vertical(0, 0) == 0.0);
  CHECK(q.details[0].diagonal(0, 0) == -1.0);
  CHECK(q.approx(0, 0) == 0.3);

  test::Gen gen(104);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = random_pyramid(gen, 16, 2);
    const double lambda = gen.uniform(0.0, 1.0);
    const auto s = soft_threshold(r, lambda);
    CHECK(s.detail_l1() <= r.detail_l1());
    CHECK(s.approx == r.approx);
  }
  const auto r = random_pyramid(gen, 8, 2);
  CHECK(max_abs(idwt2(soft_threshold(r, 0.0)), idwt2(r)) == 0.0);
  CHECK_THROWS_AS(soft_threshold(r, -0.1), DomainError);
}

TEST_CASE("float scalar") {
  test::Gen gen(105);
  const Image<float> x = gen.image(16, 16).cast<float>();
  const auto p = dwt2(x, 2);
  CHECK((idwt2(p) - x).cwiseAbs().maxCoeff() < 1e-5f);
}

}  // TEST_SUITE
