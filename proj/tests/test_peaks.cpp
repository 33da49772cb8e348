#include <doctest.h>

#include <cmath>

#include "arir/peaks.hpp"

using namespace arir;

namespace {

constexpr double kFs = 44100.0;

struct Bump {
  double center;  // samples, may be fractional
  double height;
  Vector3d dir;
};

// Envelope of Gaussian bumps plus a piecewise-constant DOA trajectory.
void synth(const std::vector<Bump>& bumps, long n, Envelope& env,
           DoaTrajectory& traj, double sigma = 6.0) {
  env.values = VectorXd::Zero(n);
  traj.directions.assign(n, Vector3d(1, 0, 0));
  traj.validity.assign(n, false);
  for (long t = 0; t < n; ++t) {
    double best = 0.0;
    for (const auto& b : bumps) {
      const double v =
          b.height * std::exp(-0.5 * std::pow((t - b.center) / sigma, 2.0));
      env.values(t) += v;
      if (v > best) {
        best = v;
        traj.directions[t] = b.dir;
        traj.validity[t] = true;
      }
    }
  }
}

}  // namespace

TEST_CASE("detects separated peaks with sub-sample TOAs, sorted by magnitude") {
  Envelope env;
  DoaTrajectory traj;
  synth({{500.3, 1.0, Vector3d(1, 0, 0)}, {900.7, 0.5, Vector3d(0, 1, 0)}},
        2000, env, traj);
  const auto peaks = detect_peaks(env, traj, kFs, 7);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0].magnitude > peaks[1].magnitude);
  CHECK(peaks[0].toa * kFs == doctest::Approx(500.3).epsilon(1e-3));
  CHECK(peaks[1].toa * kFs == doctest::Approx(900.7).epsilon(1e-3));
  CHECK(peaks[0].doa.v.x() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(peaks[1].doa.v.y() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(peaks[0].perspective == 7);
}

TEST_CASE("peaks below the floor are rejected") {
  Envelope env;
  DoaTrajectory traj;
  // second bump 46 dB below the first (floor is -40 dB)
  synth({{500.0, 1.0, Vector3d(1, 0, 0)}, {900.0, 0.005, Vector3d(0, 1, 0)}},
        2000, env, traj);
  const auto peaks = detect_peaks(env, traj, kFs, 0);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].toa * kFs == doctest::Approx(500.0).epsilon(1e-3));
}

TEST_CASE("peaks after the early window are rejected") {
  Envelope env;
  DoaTrajectory traj;
  const double late = 500.0 + 0.080 * kFs;  // 80 ms after the direct sound
  synth({{500.0, 1.0, Vector3d(1, 0, 0)}, {late, 0.5, Vector3d(0, 1, 0)}},
        6000, env, traj);
  const auto peaks = detect_peaks(env, traj, kFs, 0);
  CHECK(peaks.size() == 1);
}

TEST_CASE("0.5 ms spacing keeps the greater peak") {
  Envelope env;
  DoaTrajectory traj;
  // 15 samples apart (~0.34 ms), both individually prominent
  synth({{500.0, 1.0, Vector3d(1, 0, 0)}, {515.0, 0.8, Vector3d(0, 1, 0)}},
        2000, env, traj, 3.0);
  const auto peaks = detect_peaks(env, traj, kFs, 0);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].magnitude == doctest::Approx(env.values.maxCoeff()));
}

TEST_CASE("a shoulder without prominence is not a peak") {
  Envelope env;
  DoaTrajectory traj;
  // wide bumps 24 samples apart: two local maxima beyond the 0.5 ms
  // spacing, but the valley is far shallower than 6 dB for the lower one
  synth({{500.0, 1.0, Vector3d(1, 0, 0)}, {524.0, 0.97, Vector3d(0, 1, 0)}},
        2000, env, traj, 10.0);
  const auto peaks = detect_peaks(env, traj, kFs, 0);
  CHECK(peaks.size() == 1);
}

TEST_CASE("empty envelope yields no peaks") {
  Envelope env;
  env.values = VectorXd::Zero(100);
  DoaTrajectory traj;
  traj.directions.assign(100, Vector3d(1, 0, 0));
  traj.validity.assign(100, false);
  CHECK(detect_peaks(env, traj, kFs, 0).empty());
}
