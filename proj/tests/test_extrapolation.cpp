#include <doctest.h>

#include <random>

#include "arir/doa.hpp"
#include "arir/extrapolation.hpp"

using namespace arir;

namespace {

constexpr double kC = 343.0;
constexpr double kFs = 44100.0;

Segment noise_segment(int channels, long len, long start, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Segment s;
  s.samples.resize(channels, len);
  for (int c = 0; c < channels; ++c)
    for (long t = 0; t < len; ++t) s.samples(c, t) = g(rng);
  s.start = start;
  return s;
}

}  // namespace

TEST_CASE("capped distance gain") {
  CHECK(capped_distance_gain(4.0, 2.0) == doctest::Approx(2.0));
  CHECK(capped_distance_gain(2.0, 4.0) == doctest::Approx(0.5));
  // +24 dB cap
  CHECK(capped_distance_gain(1000.0, 1.0) ==
        doctest::Approx(std::pow(10.0, 24.0 / 20.0)));
  CHECK(capped_distance_gain(1.0, 0.0) ==
        doctest::Approx(std::pow(10.0, 24.0 / 20.0)));
}

TEST_CASE("extrapolation to the same perspective is the identity") {
  const Segment seg = noise_segment(4, 64, 100, 31);
  const Vector3d xi(1, 2, 1.5), event(5, 5, 2.0);
  const Segment out = extrapolate_segment(seg, xi, event, xi, 1, kFs, kC);
  CHECK(out.start == seg.start);
  CHECK((out.samples - seg.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gain and shift follow the distance law") {
  const Segment seg = noise_segment(1, 32, 1000, 33);
  const Vector3d event(10, 0, 0), xi(0, 0, 0), xd(5, 0, 0);
  // d_i = 10, d_d = 5: gain 2, segment arrives earlier by 5/c
  const Segment out = extrapolate_segment(seg, xi, event, xd, 0, kFs, kC);
  CHECK(out.start ==
        seg.start - static_cast<long>(std::lround(5.0 / kC * kFs)));
  CHECK((out.samples - 2.0 * seg.samples).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("omni channel is rotation invariant") {
  const Segment seg = noise_segment(4, 48, 0, 35);
  const Vector3d event(3, 4, 2), xi(0, 0, 1.5), xd(1, 1, 1.5);
  const Segment out = extrapolate_segment(seg, xi, event, xd, 1, kFs, kC);
  const double gain = capped_distance_gain((event - xi).norm(),
                                           (event - xd).norm());
  CHECK((out.samples.row(0) - gain * seg.samples.row(0)).cwiseAbs().maxCoeff() <
        1e-12);
  // energy per column is preserved up to the gain (rotation orthogonality)
  for (long t = 0; t < seg.samples.cols(); ++t)
    CHECK(out.samples.col(t).norm() ==
          doctest::Approx(gain * seg.samples.col(t).norm()).epsilon(1e-9));
}

TEST_CASE("extrapolation round trip restores the segment") {
  const Segment seg = noise_segment(9, 40, 500, 37);
  const Vector3d event(7, 2, 3), xi(0, 0, 1.5), xd(2, 2, 1.5);
  const Segment fwd = extrapolate_segment(seg, xi, event, xd, 2, kFs, kC);
  const Segment back = extrapolate_segment(fwd, xd, event, xi, 2, kFs, kC);
  CHECK(back.start == seg.start);
  CHECK((back.samples - seg.samples).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("event at the perspective is rejected") {
  const Segment seg = noise_segment(1, 8, 0, 39);
  const Vector3d xi(1, 1, 1);
  CHECK_THROWS_AS(
      extrapolate_segment(seg, xi, xi, Vector3d(2, 2, 2), 0, kFs, kC),
      std::invalid_argument);
}

TEST_CASE("instantaneous positions follow x_i + c t theta") {
  Arir a;
  a.order = 1;
  a.sample_rate = kFs;
  a.position = Vector3d(1, 2, 1.5);
  a.channels = MatrixXd::Zero(4, 100);
  a.delay_compensated = true;
  DoaTrajectory traj;
  traj.directions.assign(100, Vector3d(0, 0, 1));
  traj.validity.assign(100, true);
  const auto pos = instantaneous_positions(a, traj, kC);
  CHECK((pos[0] - a.position).norm() < 1e-12);
  CHECK(pos[44].z() == doctest::Approx(1.5 + kC * 44.0 / kFs));

  a.delay_compensated = false;
  CHECK_THROWS_AS(instantaneous_positions(a, traj, kC),
                  std::invalid_argument);
}

TEST_CASE("timeshift map of a static event quantizes to one value") {
  // constant DOA: instantaneous positions move along a line, and for a
  // far event the parallactic shift is nearly constant
  const Vector3d xi(0, 0, 0), xd(0.5, 0, 0);
  std::vector<Vector3d> positions;
  for (int t = 0; t < 500; ++t)
    positions.emplace_back(20.0 + 0.001 * t, 0.0, 0.0);
  const auto map =
      quantized_timeshift_map(positions, xi, xd, kFs, kC, 16);
  REQUIRE(map.boundaries.front() == 0);
  // expected shift: (d_i - d_d)/c = 0.5/343 for all samples
  for (double q : map.quantized)
    CHECK(q == doctest::Approx(std::lround(0.5 / kC * kFs) / kFs));
  // boundary spacing >= window
  for (size_t s = 1; s < map.boundaries.size(); ++s)
    CHECK(map.boundaries[s] - map.boundaries[s - 1] >= 16);
}

TEST_CASE("residual extrapolation to the own position is the identity") {
  Arir a;
  a.order = 1;
  a.sample_rate = kFs;
  a.position = Vector3d(3, 3, 1.5);
  a.delay_compensated = true;
  std::mt19937 rng(41);
  std::normal_distribution<double> g;
  a.channels.resize(4, 2000);
  for (int c = 0; c < 4; ++c)
    for (long t = 0; t < 2000; ++t) a.channels(c, t) = g(rng);
  DoaTrajectory traj;
  traj.directions.assign(2000, Vector3d(1, 0, 0));
  traj.validity.assign(2000, true);
  const Arir out = extrapolate_residual(a, traj, a.position, kC);
  CHECK((out.channels - a.channels).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tiny displacement reproduces the residual via exact partition") {
  Arir a;
  a.order = 1;
  a.sample_rate = kFs;
  a.position = Vector3d(3, 3, 1.5);
  a.delay_compensated = true;
  std::mt19937 rng(43);
  std::normal_distribution<double> g;
  a.channels.resize(4, 3000);
  for (int c = 0; c < 4; ++c)
    for (long t = 0; t < 3000; ++t) a.channels(c, t) = g(rng);
  DoaTrajectory traj;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  traj.directions.resize(3000);
  traj.validity.assign(3000, true);
  for (auto& d : traj.directions) {
    Vector3d v(u(rng), u(rng), u(rng));
    while (v.norm() < 1e-3) v = Vector3d(u(rng), u(rng), u(rng));
    d = v.normalized();
  }
  // 1 micrometer: the quantized shifts collapse to zero and the gains and
  // rotations approach identity. The earliest samples sit at instantaneous
  // distances of only millimeters, so their gain ratio deviates by ~1e-4.
  const Arir out =
      extrapolate_residual(a, traj, a.position + Vector3d(1e-6, 0, 0), kC);
  CHECK((out.channels - a.channels).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("content past the extrapolation limit passes unchanged") {
  Arir a;
  a.order = 0;
  a.sample_rate = kFs;
  a.position = Vector3d(0, 0, 1.5);
  a.delay_compensated = true;
  a.channels = MatrixXd::Ones(1, 6000);
  DoaTrajectory traj;
  traj.directions.assign(6000, Vector3d(1, 0, 0));
  traj.validity.assign(6000, true);
  const Arir out =
      extrapolate_residual(a, traj, Vector3d(1, 0, 1.5), kC, 0.100);
  const long limit = static_cast<long>(std::lround(0.100 * kFs));
  CHECK((out.channels.rightCols(6000 - limit) -
         a.channels.rightCols(6000 - limit))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}
