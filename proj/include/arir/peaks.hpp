#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "arir/types.hpp"

namespace arir {

struct PeakDetectConfig {
  double prominence_db = 6.0;
  double floor_db = 40.0;      // below the strongest peak
  double early_window = 0.075; // seconds after the direct sound
};

namespace detail {

/// Topographic prominence in dB: height above the higher of the two
/// bracketing minima (up to the next higher sample on each side).
inline double prominence_db_at(const VectorXd& env, long k) {
  const double peak = env(k);
  double left_min = peak, right_min = peak;
  for (long i = k - 1; i >= 0; --i) {
    if (env(i) > peak) break;
    left_min = std::min(left_min, env(i));
    if (i == 0) left_min = 0.0;  // signal edge counts as a full drop
  }
  for (long i = k + 1; i < env.size(); ++i) {
    if (env(i) > peak) break;
    right_min = std::min(right_min, env(i));
    if (i == env.size() - 1) right_min = 0.0;
  }
  const double base = std::max(left_min, right_min);
  if (base <= 0.0) return 1e9;
  return 20.0 * std::log10(peak / base);
}

}  // namespace detail

/// Prominent local maxima of the directional envelope inside the early
/// window, sorted by descending magnitude. Each peak carries the
/// envelope-weighted mean DOA over +-0.25 ms.
inline std::vector<Peak> detect_peaks(const Envelope& envelope,
                                      const DoaTrajectory& doas,
                                      double sample_rate, int perspective,
                                      const PeakDetectConfig& cfg = {}) {
  const VectorXd& env = envelope.values;
  const long n = env.size();
  std::vector<Peak> peaks;
  if (n < 3) return peaks;

  long global_peak = 0;
  env.maxCoeff(&global_peak);
  const double global_max = env(global_peak);
  if (global_max <= 0.0) return peaks;

  const double floor_level = global_max * std::pow(10.0, -cfg.floor_db / 20.0);
  const long window_end = std::min<long>(
      n, global_peak + static_cast<long>(cfg.early_window * sample_rate) + 1);

  std::vector<long> candidates;
  for (long i = 1; i + 1 < window_end; ++i) {
    if (env(i) < floor_level) continue;
    if (env(i) > env(i - 1) && env(i) >= env(i + 1) &&
        detail::prominence_db_at(env, i) >= cfg.prominence_db)
      candidates.push_back(i);
  }

  // Enforce the 0.5 ms envelope-window spacing, keeping the greater peak.
  std::sort(candidates.begin(), candidates.end(),
            [&](long a, long b) { return env(a) > env(b); });
  const long min_dist = static_cast<long>(std::lround(0.5e-3 * sample_rate));
  std::vector<long> accepted;
  for (long c : candidates) {
    bool clash = false;
    for (long a : accepted)
      if (std::abs(a - c) < min_dist) { clash = true; break; }
    if (!clash) accepted.push_back(c);
  }

  const long half = static_cast<long>(std::lround(0.25e-3 * sample_rate));
  for (long k : accepted) {
    Peak p;
    // parabolic sub-sample refinement on the smoothed envelope
    double delta = 0.0;
    if (k > 0 && k + 1 < n) {
      const double denom = env(k - 1) - 2.0 * env(k) + env(k + 1);
      if (denom < 0.0) delta = std::clamp(
          0.5 * (env(k - 1) - env(k + 1)) / denom, -0.5, 0.5);
    }
    p.toa = (static_cast<double>(k) + delta) / sample_rate;
    p.magnitude = env(k);
    p.perspective = perspective;
    Vector3d mean = Vector3d::Zero();
    for (long i = std::max<long>(0, k - half);
         i <= std::min<long>(n - 1, k + half); ++i)
      if (doas.validity[i]) mean += env(i) * doas.directions[i];
    if (mean.norm() > 0.0)
      p.doa = Direction(mean.normalized());
    else
      p.doa = Direction(doas.directions[k]);
    peaks.push_back(p);
  }
  return peaks;  // already sorted by descending magnitude
}

}  // namespace arir
