#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "arir/sh.hpp"
#include "arir/types.hpp"

namespace arir {

/// Windowed multichannel ARIR excerpt positioned on the ARIR time axis.
struct Segment {
  MatrixXd samples;  // channels x length, fades already applied
  long start = 0;    // sample index in the parent ARIR
  int fade_in = 0;
  int fade_out = 0;
};

struct TimeShiftMap {
  VectorXd raw;                  // per-sample shift, seconds
  std::vector<double> quantized; // per-segment median shift, seconds
  std::vector<long> boundaries;  // segment start indices (first is 0)
};

constexpr double kGainCapDb = 24.0;

inline double capped_distance_gain(double d_source, double d_target) {
  const double cap = std::pow(10.0, kGainCapDb / 20.0);
  if (d_target < 1e-9) return cap;
  return std::min(cap, d_source / d_target);
}

/// Extrapolates one segment from perspective x_i to x_d given the sound-event
/// position: 1/D gain, DOA-aligning SH rotation, and flight-time shift
/// (integer samples by default).
inline Segment extrapolate_segment(const Segment& seg, const Vector3d& x_i,
                                   const Vector3d& event, const Vector3d& x_d,
                                   int order, double sample_rate, double c) {
  const double d_i = (event - x_i).norm();
  const double d_d = (event - x_d).norm();
  if (d_i < 1e-3)
    throw std::invalid_argument("extrapolate_segment: event at the perspective");

  Segment out = seg;
  const double gain = capped_distance_gain(d_i, d_d);
  const double dt = (d_i - d_d) / c;  // positive: listener closer, earlier
  out.start = seg.start - static_cast<long>(std::lround(dt * sample_rate));

  if ((x_d - x_i).norm() < 1e-9) return out;  // identity

  const Direction theta_i((event - x_i) / d_i);
  const Direction theta_d(d_d > 1e-9 ? Vector3d((event - x_d) / d_d)
                                     : theta_i.v);
  const MatrixXd rsp = sh_rotation(rotation_align(theta_i, theta_d), order);
  out.samples = gain * (rsp * seg.samples);
  return out;
}

/// Per-sample instantaneous sound-event positions x_i + c t theta(t).
inline std::vector<Vector3d> instantaneous_positions(const Arir& arir,
                                                     const DoaTrajectory& doas,
                                                     double c) {
  if (!arir.delay_compensated)
    throw std::invalid_argument(
        "instantaneous_positions: ARIR must be delay-compensated");
  std::vector<Vector3d> out(arir.length());
  for (long t = 0; t < arir.length(); ++t)
    out[t] = arir.position +
             c * (static_cast<double>(t) / arir.sample_rate) * doas.directions[t];
  return out;
}

/// Per-sample parallactic time shifts for a listener at x_d, segmented at the
/// confirmed sliding-window extrema of |d/dt shift| and median-quantized to
/// whole samples within each segment.
inline TimeShiftMap quantized_timeshift_map(
    const std::vector<Vector3d>& positions, const Vector3d& x_i,
    const Vector3d& x_d, double sample_rate, double c, long window = 16) {
  const long n = static_cast<long>(positions.size());
  TimeShiftMap map;
  map.raw.resize(n);
  for (long t = 0; t < n; ++t) {
    const double d_i = (positions[t] - x_i).norm();
    const double d_d = (positions[t] - x_d).norm();
    map.raw(t) = (d_i - d_d) / c;
  }

  // |d/dt shift|; a boundary is a sample that is maximal within every
  // length-L window containing it, i.e. within +-(L-1) samples.
  VectorXd deriv = VectorXd::Zero(n);
  for (long t = 1; t < n; ++t) deriv(t) = std::abs(map.raw(t) - map.raw(t - 1));

  map.boundaries.push_back(0);
  for (long t = 1; t < n; ++t) {
    if (deriv(t) <= 0.0) continue;
    bool maximal = true;
    for (long j = std::max<long>(0, t - window + 1);
         j <= std::min<long>(n - 1, t + window - 1); ++j) {
      if (j == t) continue;
      if (deriv(j) > deriv(t) || (deriv(j) == deriv(t) && j < t)) {
        maximal = false;
        break;
      }
    }
    if (maximal && t - map.boundaries.back() >= window) map.boundaries.push_back(t);
  }

  for (size_t s = 0; s < map.boundaries.size(); ++s) {
    const long lo = map.boundaries[s];
    const long hi = (s + 1 < map.boundaries.size()) ? map.boundaries[s + 1] : n;
    std::vector<double> vals(map.raw.data() + lo, map.raw.data() + hi);
    std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
    const double median = vals[vals.size() / 2];
    map.quantized.push_back(std::lround(median * sample_rate) / sample_rate);
  }
  return map;
}

namespace detail {

// cos^2 crossfade pair; fade_out(j) + fade_in(j) = 1 over the overlap.
inline double crossfade_out(long j, long len) {
  const double u = static_cast<double>(j) / static_cast<double>(len);
  const double cv = std::cos(std::numbers::pi / 2.0 * u);
  return cv * cv;
}

}  // namespace detail

/// Single-ARIR residual extrapolation: per segment of the quantized shift
/// map, apply the 1/D gain and DOA-aligning rotation at the segment's median
/// instantaneous position, shift by the quantized amount, and re-assemble
/// with L/4-sample cos^2 crossfades. Content after `limit` passes unchanged.
inline Arir extrapolate_residual(const Arir& residual,
                                 const DoaTrajectory& doas, const Vector3d& x_d,
                                 double c, double limit = 0.100,
                                 long window = 16) {
  const long n = residual.length();
  const long limit_samples = std::min<long>(
      n, static_cast<long>(std::lround(limit * residual.sample_rate)));
  Arir out = residual;

  if ((x_d - residual.position).norm() < 1e-9) return out;

  const auto positions = instantaneous_positions(residual, doas, c);
  const auto map = quantized_timeshift_map(
      {positions.begin(), positions.begin() + limit_samples},
      residual.position, x_d, residual.sample_rate, c, window);

  out.channels.leftCols(limit_samples).setZero();
  const long fade = std::max<long>(1, window / 4);

  // Segment s owns [b_s, b_{s+1}) and extends into the following fade
  // region [b_{s+1}, b_{s+1}+fade) with a cos^2 fade-out; the next segment
  // fades in complementarily, so unshifted assembly is an exact partition.
  const size_t nseg = map.boundaries.size();
  for (size_t s = 0; s < nseg; ++s) {
    const long core_lo = map.boundaries[s];
    const long core_hi = (s + 1 < nseg) ? map.boundaries[s + 1] : limit_samples;
    if (core_hi <= core_lo) continue;
    const long ext_hi =
        (s + 1 < nseg) ? std::min(core_hi + fade, limit_samples) : core_hi;
    const long len = ext_hi - core_lo;

    // median (by source distance) instantaneous position of the core
    std::vector<long> idx(core_hi - core_lo);
    for (long j = 0; j < core_hi - core_lo; ++j) idx[j] = core_lo + j;
    std::nth_element(idx.begin(), idx.begin() + idx.size() / 2, idx.end(),
                     [&](long a, long b) {
                       return (positions[a] - residual.position).norm() <
                              (positions[b] - residual.position).norm();
                     });
    const Vector3d event = positions[idx[idx.size() / 2]];

    const double d_i = (event - residual.position).norm();
    const double d_d = (event - x_d).norm();
    MatrixXd block = residual.channels.middleCols(core_lo, len);
    if (d_i > 1e-3) {
      const double gain = capped_distance_gain(d_i, d_d);
      const Direction theta_i((event - residual.position) / d_i);
      const Direction theta_d(d_d > 1e-9 ? Vector3d((event - x_d) / d_d)
                                         : theta_i.v);
      block = gain *
              (sh_rotation(rotation_align(theta_i, theta_d), residual.order) *
               block);
    }

    const long shift =
        static_cast<long>(std::lround(map.quantized[s] * residual.sample_rate));
    for (long j = 0; j < len; ++j) {
      double w = 1.0;
      if (s > 0 && j < fade) w = 1.0 - detail::crossfade_out(j, fade);
      if (s + 1 < nseg && core_lo + j >= core_hi)
        w = detail::crossfade_out(core_lo + j - core_hi, fade);
      const long dst = core_lo + j - shift;
      if (dst >= 0 && dst < limit_samples)
        out.channels.col(dst) += w * block.col(j);
    }
  }
  return out;
}

}  // namespace arir
