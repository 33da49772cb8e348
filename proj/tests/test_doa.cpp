#include <doctest.h>

#include <numbers>

#include "arir/doa.hpp"
#include "arir/sh.hpp"

using namespace arir;

namespace {

// First-order encoding of an in-band tone burst from a fixed direction.
Arir plane_wave(const Direction& dir, long n = 4096, long center = 2000,
                double f = 1000.0) {
  Arir a;
  a.order = 1;
  a.sample_rate = 44100.0;
  a.channels = MatrixXd::Zero(4, n);
  const VectorXd y = sh_eval(dir, 1);
  for (long i = -200; i <= 200; ++i) {
    const double w =
        0.5 * (1.0 + std::cos(std::numbers::pi * i / 201.0)) *
        std::cos(2.0 * std::numbers::pi * f * i / a.sample_rate);
    a.channels.col(center + i) = y * w;
  }
  return a;
}

}  // namespace

TEST_CASE("doa_trajectory recovers a plane-wave direction") {
  for (const Direction dir : {Direction(1, 0, 0), Direction(0.3, -0.8, 0.52),
                              Direction(-0.5, 0.5, -0.7)}) {
    const Arir a = plane_wave(dir);
    const auto traj = doa_trajectory(a);
    REQUIRE(traj.size() == a.length());
    // inspect around the burst center where the intensity is strong
    for (long t = 1900; t <= 2100; ++t) {
      CHECK(traj.validity[t]);
      CHECK(traj.directions[t].dot(dir.v) > 0.999);
    }
  }
}

TEST_CASE("silence is invalid and holds the last direction") {
  const Direction dir(0, 1, 0);
  const Arir a = plane_wave(dir);
  const auto traj = doa_trajectory(a);
  CHECK_FALSE(traj.validity[a.length() - 1]);
  CHECK(traj.directions[a.length() - 1].dot(dir.v) > 0.99);
  // before any signal: defaults to +x
  CHECK_FALSE(traj.validity[0]);
  CHECK(traj.directions[0].x() == doctest::Approx(1.0));
}

TEST_CASE("doa_trajectory requires first order") {
  Arir a;
  a.order = 0;
  a.channels = MatrixXd::Zero(1, 100);
  CHECK_THROWS_AS(doa_trajectory(a), std::invalid_argument);
}

TEST_CASE("directional_envelope peaks at the burst") {
  const Arir a = plane_wave(Direction(0.6, 0.8, 0.0));
  const Envelope env = directional_envelope(a);
  REQUIRE(env.size() == a.length());
  long peak;
  env.values.maxCoeff(&peak);
  CHECK(std::abs(peak - 2000) < 30);
  CHECK(env.values.minCoeff() >= 0.0);
  CHECK(env.values(100) == doctest::Approx(0.0));
}

TEST_CASE("envelope scales linearly with amplitude") {
  Arir a = plane_wave(Direction(1, 0, 0));
  Arir b = a;
  b.channels *= 2.0;
  const double pa = directional_envelope(a).values.maxCoeff();
  const double pb = directional_envelope(b).values.maxCoeff();
  CHECK(pb == doctest::Approx(2.0 * pa).epsilon(1e-9));
}
