#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "arir/extrapolation.hpp"
#include "arir/third_octave.hpp"
#include "arir/types.hpp"

namespace arir {

struct InterpConfig {
  int pre_samples = 16;     // segment head before the peak TOA
  double max_segment = 0.003;
  int fade_samples = 16;    // cos^2 half-window at both edges
  int xcorr_range = 8;      // +- samples for the refined alignment
  double residual_limit = 0.100;
  long timeshift_window = 16;
};

/// Cuts windowed segments around matched TOAs. The residual is the ARIR
/// minus the placed segments, making the decomposition exactly additive.
struct SegmentDecomposition {
  std::vector<Segment> segments;  // one per input TOA, input order
  Arir residual;
};

inline SegmentDecomposition cut_peak_segments(const Arir& arir,
                                              const std::vector<double>& toas,
                                              const InterpConfig& cfg = {}) {
  const long n = arir.length();
  const double fs = arir.sample_rate;

  std::vector<size_t> order(toas.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return toas[a] < toas[b]; });

  SegmentDecomposition out;
  out.segments.resize(toas.size());
  out.residual = arir;

  const long max_len = static_cast<long>(std::lround(cfg.max_segment * fs));
  for (size_t k = 0; k < order.size(); ++k) {
    const size_t m = order[k];
    const long peak = static_cast<long>(std::lround(toas[m] * fs));
    long start = std::max<long>(0, peak - cfg.pre_samples);
    long end = std::min(start + max_len, n);
    if (k + 1 < order.size()) {
      const long next_peak =
          static_cast<long>(std::lround(toas[order[k + 1]] * fs));
      end = std::min(end, next_peak - cfg.pre_samples);
    }
    if (end - start < 2 * cfg.fade_samples) {
      // matched TOAs closer than two fades: truncate symmetrically
      const long mid = (start + end) / 2;
      start = std::max<long>(0, mid - cfg.fade_samples);
      end = std::min<long>(n, mid + cfg.fade_samples);
    }
    const long len = end - start;
    if (len <= 0) continue;

    Segment seg;
    seg.start = start;
    seg.fade_in = static_cast<int>(std::min<long>(cfg.fade_samples, len / 2));
    seg.fade_out = seg.fade_in;
    seg.samples = arir.channels.middleCols(start, len);
    for (long j = 0; j < seg.fade_in; ++j) {
      const double s =
          std::sin(std::numbers::pi / 2.0 * (j + 1) / (seg.fade_in + 1));
      seg.samples.col(j) *= s * s;
    }
    for (long j = 0; j < seg.fade_out; ++j) {
      const double s =
          std::sin(std::numbers::pi / 2.0 * (j + 1) / (seg.fade_out + 1));
      seg.samples.col(len - 1 - j) *= s * s;
    }
    out.residual.channels.middleCols(start, len) -= seg.samples;
    out.segments[m] = seg;
  }
  return out;
}

/// One matched peak across the triplet, already extrapolated to the target.
struct MatchedSegments {
  std::array<Segment, 3> segs;
  int reference = 0;
};

namespace detail {

inline double xcorr_best_lag(const Eigen::RowVectorXd& ref, long ref_start,
                             const Eigen::RowVectorXd& sig, long sig_start,
                             int range) {
  double best = -std::numeric_limits<double>::max();
  long best_lag = 0;
  for (long lag = -range; lag <= range; ++lag) {
    double acc = 0.0;
    for (long j = 0; j < sig.size(); ++j) {
      const long t = sig_start + j + lag - ref_start;  // index into ref
      if (t >= 0 && t < ref.size()) acc += sig(j) * ref(t);
    }
    if (acc > best) { best = acc; best_lag = lag; }
  }
  return static_cast<double>(best_lag);
}

}  // namespace detail

/// Distance-weighted superposition of extrapolated, cross-correlation-aligned
/// matched peak segments with RMS restoration, summed over matches.
inline MatrixXd interpolate_matched_peaks(
    const std::vector<MatchedSegments>& matches,
    const std::array<double, 3>& weights, int channels, long length,
    const InterpConfig& cfg = {}) {
  MatrixXd d_p = MatrixXd::Zero(channels, length);

  for (const auto& match : matches) {
    // align against the heaviest contributing segment so that a unit-weight
    // perspective reproduces its own segment exactly
    int ref_idx = match.reference;
    double ref_w = -1.0;
    for (int i = 0; i < 3; ++i)
      if (match.segs[i].samples.size() > 0 && weights[i] > ref_w) {
        ref_w = weights[i];
        ref_idx = i;
      }
    const Segment& ref = match.segs[ref_idx];
    if (ref.samples.size() == 0) continue;

    // common span of the three (aligned) segments on the output axis
    std::array<long, 3> starts{};
    for (int i = 0; i < 3; ++i) {
      starts[i] = match.segs[i].start;
      if (i != ref_idx && match.segs[i].samples.size() > 0) {
        const long lag = static_cast<long>(detail::xcorr_best_lag(
            ref.samples.row(0), ref.start, match.segs[i].samples.row(0),
            match.segs[i].start, cfg.xcorr_range));
        starts[i] += lag;
      }
    }

    long lo = length, hi = 0;
    for (int i = 0; i < 3; ++i) {
      if (match.segs[i].samples.size() == 0) continue;
      lo = std::min(lo, starts[i]);
      hi = std::max(hi, starts[i] + match.segs[i].samples.cols());
    }
    lo = std::max<long>(lo, 0);
    hi = std::min<long>(hi, length);
    if (hi <= lo) continue;

    MatrixXd mixed = MatrixXd::Zero(channels, hi - lo);
    double target_energy = 0.0;
    for (int i = 0; i < 3; ++i) {
      const auto& s = match.segs[i].samples;
      if (s.size() == 0) continue;
      target_energy += weights[i] * s.row(0).squaredNorm();
      for (long j = 0; j < s.cols(); ++j) {
        const long t = starts[i] + j - lo;
        if (t >= 0 && t < mixed.cols()) mixed.col(t) += weights[i] * s.col(j);
      }
    }

    const double mixed_energy = mixed.row(0).squaredNorm();
    double p_cor = 1.0;
    if (mixed_energy > 1e-15) p_cor = target_energy / mixed_energy;
    d_p.middleCols(lo, hi - lo) += std::sqrt(p_cor) * mixed;
  }
  return d_p;
}

/// Distance-weighted residual superposition with third-octave spectral
/// restoration towards the weighted raw-residual band energies (N3D
/// diffuse-field (2n+1) target per order).
inline MatrixXd interpolate_residuals(
    const std::array<MatrixXd, 3>& extrapolated,
    const std::array<Eigen::RowVectorXd, 3>& raw_omnis,
    const std::array<double, 3>& weights, int order, double sample_rate,
    const ThirdOctaveBank& bank) {
  const long n = extrapolated[0].cols();
  const int channels = static_cast<int>(extrapolated[0].rows());

  MatrixXd mixed = MatrixXd::Zero(channels, n);
  for (int i = 0; i < 3; ++i) mixed += weights[i] * extrapolated[i];

  const long avg = std::max<long>(
      1, static_cast<long>(std::lround(0.010 * sample_rate)));
  const int nb = bank.num_bands();

  // reference short-time band energies from the raw omni residuals
  std::vector<VectorXd> ref_energy(nb, VectorXd::Zero(n));
  for (int i = 0; i < 3; ++i) {
    if (weights[i] <= 0.0) continue;
    const auto bands = bank.analyze(raw_omnis[i].transpose());
    for (int b = 0; b < nb; ++b)
      ref_energy[b] +=
          weights[i] * moving_average(bands[b].cwiseAbs2(), avg);
  }

  MatrixXd out = MatrixXd::Zero(channels, n);
  for (int nn = 0; nn <= order; ++nn) {
    const int c0 = nn * nn;
    const int nch = 2 * nn + 1;

    // band split of every degree channel of this order
    std::vector<std::vector<VectorXd>> bands(nch);
    for (int k = 0; k < nch; ++k)
      bands[k] = bank.analyze(mixed.row(c0 + k).transpose());

    for (int b = 0; b < nb; ++b) {
      VectorXd order_energy = VectorXd::Zero(n);
      for (int k = 0; k < nch; ++k)
        order_energy += moving_average(bands[k][b].cwiseAbs2(), avg);

      VectorXd gain(n);
      for (long t = 0; t < n; ++t) {
        const double target = (2.0 * nn + 1.0) * ref_energy[b](t);
        if (order_energy(t) > 1e-30)
          gain(t) = (target > 1e-30)
                        ? std::min(10.0, std::sqrt(target / order_energy(t)))
                        : 0.0;
        else
          gain(t) = 1.0;  // nothing to scale; keep the smoothed gain neutral
      }
      gain = moving_average(gain, avg);  // de-zipper
      for (int k = 0; k < nch; ++k)
        out.row(c0 + k) += (gain.cwiseProduct(bands[k][b])).transpose();
    }
  }
  return out;
}

}  // namespace arir
