#pragma once

#include <cmath>
#include <vector>

#include "arir/dsp.hpp"
#include "arir/sh.hpp"
#include "arir/types.hpp"

namespace arir {

// ACN channels of the first-order block pointing to x, y, z.
constexpr int kAcnY = 1, kAcnZ = 2, kAcnX = 3;

/// Per-sample DOA from the smoothed pseudo intensity vector of the
/// zeroth- and first-order channels. Band-pass 200 Hz - 3 kHz zero-phase,
/// smoothing over 10 samples at 44.1 kHz (rescaled at other rates).
inline DoaTrajectory doa_trajectory(const Arir& arir,
                                    double bp_low = 200.0,
                                    double bp_high = 3000.0) {
  arir.validate();
  if (arir.order < 1)
    throw std::invalid_argument("doa_trajectory: needs order >= 1");

  const long n = arir.length();
  const std::vector<Biquad> bp = {Biquad::highpass(bp_low, arir.sample_rate),
                                  Biquad::lowpass(bp_high, arir.sample_rate)};
  const VectorXd w = filtfilt(bp, arir.channels.row(0).transpose());
  const VectorXd cx = filtfilt(bp, arir.channels.row(kAcnX).transpose());
  const VectorXd cy = filtfilt(bp, arir.channels.row(kAcnY).transpose());
  const VectorXd cz = filtfilt(bp, arir.channels.row(kAcnZ).transpose());

  const long avg = std::max<long>(
      1, static_cast<long>(std::lround(10.0 * arir.sample_rate / 44100.0)));
  const VectorXd ix = moving_average(w.cwiseProduct(cx), avg);
  const VectorXd iy = moving_average(w.cwiseProduct(cy), avg);
  const VectorXd iz = moving_average(w.cwiseProduct(cz), avg);

  double max_norm = 0.0;
  for (long i = 0; i < n; ++i)
    max_norm = std::max(max_norm,
                        Vector3d(ix(i), iy(i), iz(i)).norm());
  const double thresh = 1e-12 * max_norm;

  DoaTrajectory traj;
  traj.directions.resize(n);
  traj.validity.resize(n);
  Vector3d held(1.0, 0.0, 0.0);  // +x until the first valid sample
  for (long i = 0; i < n; ++i) {
    const Vector3d v(ix(i), iy(i), iz(i));
    const double norm = v.norm();
    if (norm > thresh && max_norm > 0.0) {
      held = v / norm;
      traj.validity[i] = true;
    } else {
      traj.validity[i] = false;
    }
    traj.directions[i] = held;
  }
  return traj;
}

/// Short-time magnitude of the directional content: sqrt of the
/// Hamming-averaged pseudo intensity norm, 0.5 ms window, no band limit.
inline Envelope directional_envelope(const Arir& arir) {
  arir.validate();
  if (arir.order < 1)
    throw std::invalid_argument("directional_envelope: needs order >= 1");

  const long n = arir.length();
  VectorXd mag(n);
  for (long i = 0; i < n; ++i) {
    const double w = arir.channels(0, i);
    mag(i) = w * Vector3d(arir.channels(kAcnX, i), arir.channels(kAcnY, i),
                          arir.channels(kAcnZ, i))
                     .norm();
    mag(i) = std::abs(mag(i));
  }
  long win = static_cast<long>(std::lround(0.5e-3 * arir.sample_rate));
  if (win % 2 == 0) ++win;
  Envelope env;
  env.values = hamming_average(mag, win).cwiseMax(0.0).cwiseSqrt();
  return env;
}

}  // namespace arir
