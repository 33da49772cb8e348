#include <doctest.h>

#include <random>

#include "arir/interpolation.hpp"

using namespace arir;

namespace {

constexpr double kFs = 44100.0;

Arir noise_arir(int order, long n, unsigned seed) {
  Arir a;
  a.order = order;
  a.sample_rate = kFs;
  a.delay_compensated = true;
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  a.channels.resize((order + 1) * (order + 1), n);
  for (long c = 0; c < a.channels.rows(); ++c)
    for (long t = 0; t < n; ++t) a.channels(c, t) = g(rng);
  return a;
}

}  // namespace

TEST_CASE("segment decomposition is exactly additive") {
  const Arir a = noise_arir(1, 4000, 51);
  const std::vector<double> toas = {700.0 / kFs, 1500.0 / kFs, 1580.0 / kFs,
                                    3200.0 / kFs};
  const auto dec = cut_peak_segments(a, toas);

  MatrixXd rebuilt = dec.residual.channels;
  for (const auto& seg : dec.segments) {
    if (seg.samples.size() == 0) continue;
    rebuilt.middleCols(seg.start, seg.samples.cols()) += seg.samples;
  }
  CHECK((rebuilt - a.channels).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("segments start 16 samples before the peak and cap at 3 ms") {
  const Arir a = noise_arir(0, 8000, 53);
  const auto dec = cut_peak_segments(a, {2000.0 / kFs});
  REQUIRE(dec.segments.size() == 1);
  const auto& seg = dec.segments[0];
  CHECK(seg.start == 2000 - 16);
  CHECK(seg.samples.cols() == static_cast<long>(std::lround(0.003 * kFs)));
}

TEST_CASE("close TOAs truncate symmetrically without overlap") {
  const Arir a = noise_arir(0, 4000, 55);
  // 20 samples apart: tighter than two 16-sample fades
  const auto dec = cut_peak_segments(a, {1000.0 / kFs, 1020.0 / kFs});
  REQUIRE(dec.segments.size() == 2);
  CHECK(dec.segments[0].samples.cols() <= 32);
  // additivity still holds
  MatrixXd rebuilt = dec.residual.channels;
  for (const auto& seg : dec.segments)
    rebuilt.middleCols(seg.start, seg.samples.cols()) += seg.samples;
  CHECK((rebuilt - a.channels).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coherent matched peaks pass through with P_cor = 1") {
  std::mt19937 rng(57);
  std::normal_distribution<double> g;
  Segment base;
  base.start = 300;
  base.samples.resize(4, 64);
  for (int c = 0; c < 4; ++c)
    for (long t = 0; t < 64; ++t) base.samples(c, t) = g(rng);

  MatchedSegments ms;
  ms.reference = 0;
  for (int i = 0; i < 3; ++i) ms.segs[i] = base;
  const std::array<double, 3> w = {0.5, 0.3, 0.2};
  const MatrixXd out = interpolate_matched_peaks({ms}, w, 4, 1000);
  CHECK((out.middleCols(300, 64) - base.samples).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(out.leftCols(300).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("misaligned copies are re-aligned by cross-correlation") {
  std::mt19937 rng(59);
  std::normal_distribution<double> g;
  Segment ref;
  ref.start = 300;
  ref.samples.resize(1, 64);
  for (long t = 0; t < 64; ++t) ref.samples(0, t) = g(rng);

  // same content, but its nominal start disagrees by 3 samples
  Segment shifted = ref;
  shifted.start = 303;

  MatchedSegments ms;
  ms.reference = 0;
  ms.segs[0] = ref;
  ms.segs[1] = shifted;
  ms.segs[2] = ref;
  const std::array<double, 3> w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const MatrixXd out = interpolate_matched_peaks({ms}, w, 1, 1000);
  // alignment brings all three on top of each other: coherent passthrough
  CHECK((out.middleCols(300, 64) - ref.samples).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("incoherent mix is restored to the weighted RMS") {
  std::mt19937 rng(61);
  std::normal_distribution<double> g;
  std::vector<MatchedSegments> matches;
  const std::array<double, 3> w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  double target = 0.0;
  // Monte Carlo over many independent matches
  for (int m = 0; m < 40; ++m) {
    MatchedSegments ms;
    ms.reference = 0;
    for (int i = 0; i < 3; ++i) {
      ms.segs[i].start = 100 + 200 * m;
      ms.segs[i].samples.resize(1, 64);
      for (long t = 0; t < 64; ++t) ms.segs[i].samples(0, t) = g(rng);
      target += w[i] * ms.segs[i].samples.squaredNorm();
    }
    matches.push_back(ms);
  }
  const MatrixXd out = interpolate_matched_peaks(matches, w, 1, 200 * 41);
  const double ratio_db =
      10.0 * std::log10(out.squaredNorm() / target);
  CHECK(std::abs(ratio_db) < 0.5);
}

TEST_CASE("single-weight residual interpolation is near-identity at order 0") {
  const Arir a = noise_arir(0, 2000, 63);
  const ThirdOctaveBank bank(kFs);
  const std::array<MatrixXd, 3> ext = {a.channels, MatrixXd::Zero(1, 2000),
                                       MatrixXd::Zero(1, 2000)};
  const std::array<Eigen::RowVectorXd, 3> omnis = {
      a.channels.row(0), Eigen::RowVectorXd::Zero(2000),
      Eigen::RowVectorXd::Zero(2000)};
  const std::array<double, 3> w = {1.0, 0.0, 0.0};
  const MatrixXd out = interpolate_residuals(ext, omnis, w, 0, kFs, bank);
  const double err = (out - a.channels).norm() / a.channels.norm();
  CHECK(err < 0.05);
}

TEST_CASE("residual interpolation steers order energy to (2n+1) x omni") {
  // order-1 input with deliberately weak first-order channels
  Arir a = noise_arir(1, 4000, 65);
  a.channels.row(1) *= 0.2;
  a.channels.row(2) *= 0.2;
  a.channels.row(3) *= 0.2;
  const ThirdOctaveBank bank(kFs);
  const std::array<MatrixXd, 3> ext = {a.channels, MatrixXd::Zero(4, 4000),
                                       MatrixXd::Zero(4, 4000)};
  const std::array<Eigen::RowVectorXd, 3> omnis = {
      a.channels.row(0), Eigen::RowVectorXd::Zero(4000),
      Eigen::RowVectorXd::Zero(4000)};
  const std::array<double, 3> w = {1.0, 0.0, 0.0};
  const MatrixXd out = interpolate_residuals(ext, omnis, w, 1, kFs, bank);

  // interior energy ratio first-order : omni approaches 3
  const auto mid = Eigen::seq(500, 3500);
  const double omni_e = out.row(0)(mid).squaredNorm();
  const double first_e = out.row(1)(mid).squaredNorm() +
                         out.row(2)(mid).squaredNorm() +
                         out.row(3)(mid).squaredNorm();
  CHECK(first_e / omni_e == doctest::Approx(3.0).epsilon(0.2));
}
