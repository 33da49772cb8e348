#include <doctest.h>

#include <numbers>
#include <random>

#include "arir/asdm.hpp"

using namespace arir;

namespace {

constexpr double kFs = 44100.0;

// First-order encoding of a tone burst from one direction.
Arir plane_wave(const Direction& dir, long n = 4096, long center = 2000) {
  Arir a;
  a.order = 1;
  a.sample_rate = kFs;
  a.channels = MatrixXd::Zero(4, n);
  const VectorXd y = sh_eval(dir, 1);
  for (long i = -300; i <= 300; ++i) {
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * i / 301.0)) *
                     std::cos(2.0 * std::numbers::pi * 900.0 * i / kFs);
    a.channels.col(center + i) = y * w;
  }
  return a;
}

Arir diffuse_noise(int order, long n, unsigned seed) {
  Arir a;
  a.order = order;
  a.sample_rate = kFs;
  a.channels.resize((order + 1) * (order + 1), n);
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  for (long c = 0; c < a.channels.rows(); ++c)
    for (long t = 0; t < n; ++t) a.channels(c, t) = g(rng);
  return a;
}

}  // namespace

TEST_CASE("bessel series matches reference values") {
  // J_0(1) and J_1(1)
  CHECK(detail::bessel_j(0, 1.0) == doctest::Approx(0.7651976866).epsilon(1e-9));
  CHECK(detail::bessel_j(1, 1.0) == doctest::Approx(0.4400505857).epsilon(1e-9));
  CHECK(detail::bessel_j(2, 0.0) == doctest::Approx(0.0));
  CHECK(detail::bessel_j(0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("static-source upmix equals direct high-order encoding") {
  const Direction dir(0.48, -0.6, 0.64);
  const Arir a = plane_wave(dir);
  AsdmConfig cfg;
  cfg.target_order = 5;
  const Arir up = asdm_upmix(a, cfg, /*correct=*/false);
  REQUIRE(up.order == 5);
  REQUIRE(up.num_channels() == 36);

  const VectorXd y = sh_eval(dir, 5);
  // wherever the omni is non-negligible the channels must be the exact
  // re-encoding of the omni along the true direction
  for (long t = 1800; t <= 2200; ++t) {
    const double w = a.channels(0, t);
    if (std::abs(w) < 1e-6) continue;
    CHECK((up.channels.col(t) - y * w).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("upmix rejects higher-order input") {
  const Arir a = diffuse_noise(2, 500, 71);
  CHECK_THROWS_AS(asdm_upmix(a), std::invalid_argument);
}

TEST_CASE("decorrelation passes m = 0 channels and the early part") {
  Arir a = diffuse_noise(3, 10000, 73);
  AsdmConfig cfg;
  cfg.decorrelation_start = 0.100;
  const Arir out = decorrelate_late(a, cfg);
  const long start = static_cast<long>(std::lround(0.100 * kFs));
  // early part bit-identical
  CHECK((out.channels.leftCols(start) - a.channels.leftCols(start))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  // m = 0 channels untouched everywhere
  for (int n = 0; n <= 3; ++n) {
    const int ch = acn_index(n, 0);
    CHECK((out.channels.row(ch) - a.channels.row(ch)).cwiseAbs().maxCoeff() ==
          0.0);
  }
  // m != 0 late parts actually change
  CHECK((out.channels.row(acn_index(1, 1)).tail(2000) -
         a.channels.row(acn_index(1, 1)).tail(2000))
            .cwiseAbs()
            .maxCoeff() > 1e-6);
}

TEST_CASE("decorrelation approximately preserves late energy") {
  Arir a = diffuse_noise(3, 30000, 75);
  const Arir out = decorrelate_late(a);
  const long tail = 20000;
  for (int n = 1; n <= 3; ++n)
    for (int m = -n; m <= n; ++m) {
      if (m == 0) continue;
      const int ch = acn_index(n, m);
      const double e_in = a.channels.row(ch).tail(tail).squaredNorm();
      const double e_out = out.channels.row(ch).tail(tail).squaredNorm();
      const double db = 10.0 * std::log10(e_out / e_in);
      // truncated one-sided modulation sum: |m| = 1 within 1.5 dB, all
      // within 6 dB
      if (std::abs(m) == 1) CHECK(std::abs(db) < 1.5);
      CHECK(std::abs(db) < 6.0);
    }
}

TEST_CASE("decorrelated copies lose cross-channel correlation") {
  Arir a = diffuse_noise(2, 30000, 77);
  // feed identical content to channels of different |m|: the modulation
  // index grows with |m|, so the decorrelated late parts must diverge
  a.channels.row(acn_index(2, 2)) = a.channels.row(acn_index(1, 1));
  const Arir out = decorrelate_late(a);
  const long tail = 15000;
  const auto x = out.channels.row(acn_index(1, 1)).tail(tail);
  const auto y = out.channels.row(acn_index(2, 2)).tail(tail);
  const double corr = x.dot(y) / (x.norm() * y.norm());
  CHECK(corr < 0.9);
}

TEST_CASE("spectral correction steers order energies to (2n+1)") {
  // white first-order input whose directional channels are too weak
  Arir a = diffuse_noise(2, 8000, 79);
  for (int ch = 1; ch < 9; ++ch) a.channels.row(ch) *= 0.1;
  const Arir out = spectral_envelope_correction(a, a.channels.row(0));
  const auto mid = Eigen::seq(1000, 7000);
  const double omni_e = out.channels.row(0)(mid).squaredNorm();
  for (int n = 1; n <= 2; ++n) {
    double order_e = 0.0;
    for (int m = -n; m <= n; ++m)
      order_e += out.channels.row(acn_index(n, m))(mid).squaredNorm();
    CHECK(order_e / omni_e == doctest::Approx(2.0 * n + 1.0).epsilon(0.25));
  }
}

TEST_CASE("full enhancement keeps the omni channel of the upmix") {
  const Arir a = plane_wave(Direction(1, 0, 0));
  const Arir out = asdm_enhance(a);
  CHECK(out.order == 5);
  // m = 0 decorrelation passthrough + upmix definition: omni equals input omni
  CHECK((out.channels.row(0) - a.channels.row(0)).cwiseAbs().maxCoeff() <
        1e-9);
}
