#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "arir/sh.hpp"

using namespace arir;

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) {
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        break;
      }
    }
  }
}

Matrix3d random_rotation(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  return rotation_yaw_pitch_roll(Vector3d(u(rng), u(rng), u(rng)));
}

Direction random_direction(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> az(-std::numbers::pi, std::numbers::pi);
  const double z = u(rng);
  const double s = std::sqrt(1.0 - z * z);
  return Direction(Vector3d(s * std::cos(az(rng)), s * std::sin(az(rng)), z));
}

}  // namespace

TEST_CASE("channel count and ACN indexing") {
  CHECK(num_sh_channels(0) == 1);
  CHECK(num_sh_channels(1) == 4);
  CHECK(num_sh_channels(5) == 36);
  CHECK(acn_index(0, 0) == 0);
  CHECK(acn_index(1, -1) == 1);
  CHECK(acn_index(1, 0) == 2);
  CHECK(acn_index(1, 1) == 3);
  CHECK(acn_index(2, -2) == 4);
}

TEST_CASE("low-order values at cardinal directions") {
  // N3D: Y_0^0 = 1 everywhere; dipoles are sqrt(3) times the direction cosine.
  const VectorXd yx = sh_eval(Direction(1, 0, 0), 1);
  CHECK(yx(0) == doctest::Approx(1.0));
  CHECK(yx(acn_index(1, 1)) == doctest::Approx(std::sqrt(3.0)));
  CHECK(yx(acn_index(1, -1)) == doctest::Approx(0.0));
  CHECK(yx(acn_index(1, 0)) == doctest::Approx(0.0));

  const VectorXd yz = sh_eval(Direction(0, 0, 1), 4);
  for (int n = 0; n <= 4; ++n) {
    CHECK(yz(acn_index(n, 0)) == doctest::Approx(std::sqrt(2.0 * n + 1.0)));
    for (int m = 1; m <= n; ++m) {
      CHECK(yz(acn_index(n, m)) == doctest::Approx(0.0));
      CHECK(yz(acn_index(n, -m)) == doctest::Approx(0.0));
    }
  }

  const VectorXd yy = sh_eval(Direction(0, 1, 0), 1);
  CHECK(yy(acn_index(1, -1)) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("orthonormality under quadrature") {
  const int order = 5;
  const int nch = num_sh_channels(order);
  const int n_zen = 32, n_az = 64;
  std::vector<double> gx, gw;
  gauss_legendre(n_zen, gx, gw);

  MatrixXd gram = MatrixXd::Zero(nch, nch);
  for (int i = 0; i < n_zen; ++i) {
    const double z = gx[i];
    const double s = std::sqrt(1.0 - z * z);
    for (int j = 0; j < n_az; ++j) {
      const double az = 2.0 * std::numbers::pi * j / n_az;
      const VectorXd y = sh_eval(
          Direction(Vector3d(s * std::cos(az), s * std::sin(az), z)), order);
      gram += (gw[i] / (2.0 * n_az)) * (y * y.transpose());
    }
  }
  CHECK((gram - MatrixXd::Identity(nch, nch)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rotation_align maps source onto target") {
  std::mt19937 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Direction a = random_direction(rng);
    const Direction b = random_direction(rng);
    const Matrix3d r = rotation_align(a, b);
    CHECK((r * a.v - b.v).norm() < 1e-12);
    CHECK((r.transpose() * r - Matrix3d::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("sh_rotation matches direct evaluation") {
  std::mt19937 rng(11);
  for (int order = 1; order <= 5; ++order) {
    for (int k = 0; k < 100; ++k) {
      const Matrix3d r = random_rotation(rng);
      const MatrixXd rsp = sh_rotation(r, order);
      const Direction v = random_direction(rng);
      const VectorXd lhs = sh_eval(Direction(r * v.v), order);
      const VectorXd rhs = rsp * sh_eval(v, order);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("sh_rotation composes and is orthogonal") {
  std::mt19937 rng(13);
  const int order = 4;
  const Matrix3d r1 = random_rotation(rng), r2 = random_rotation(rng);
  const MatrixXd a = sh_rotation(r1, order), b = sh_rotation(r2, order);
  CHECK((sh_rotation(r1 * r2, order) - a * b).cwiseAbs().maxCoeff() < 1e-9);
  const int nch = num_sh_channels(order);
  CHECK((a.transpose() * a - MatrixXd::Identity(nch, nch))
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("sh_rotation rejects non-orthogonal input") {
  Matrix3d bad = Matrix3d::Identity();
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(sh_rotation(bad, 2), std::invalid_argument);
}

TEST_CASE("yaw rotates +x towards +y") {
  const Matrix3d r =
      rotation_yaw_pitch_roll(Vector3d(std::numbers::pi / 2.0, 0.0, 0.0));
  CHECK((r * Vector3d(1, 0, 0) - Vector3d(0, 1, 0)).norm() < 1e-12);
}
