#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "arir/localization.hpp"
#include "arir/types.hpp"

namespace arir {

/// Distance-law relaxation exponent: 1 at the direct sound, cos^2-tapered to
/// 0 over the following decay interval.
struct AlphaSchedule {
  double direct_toa = 0.0;
  double decay = 0.050;

  double operator()(double t) const {
    if (t <= direct_toa) return 1.0;
    if (t >= direct_toa + decay) return 0.0;
    const double c = std::cos(std::numbers::pi / 2.0 * (t - direct_toa) / decay);
    return c * c;
  }
};

/// Normalized concentration of the distance-compensated peak amplitudes:
/// 0 when all compensated amplitudes agree, 1 at maximal concentration.
inline double amplitude_error(const Vector3d& event,
                              const std::array<Peak, 3>& peaks,
                              const std::array<Vector3d, 3>& positions,
                              const AlphaSchedule& alpha) {
  std::array<double, 3> rho{};
  for (int i = 0; i < 3; ++i) {
    const double dist = std::max(1e-3, (event - positions[i]).norm());
    // alpha = 1: full 1/D compensation; alpha = 0: equal raw amplitudes
    rho[i] = peaks[i].magnitude * std::pow(dist, alpha(peaks[i].toa));
    if (rho[i] <= 0.0) return 1.0;
  }
  const double sum = rho[0] + rho[1] + rho[2];
  const double sq =
      std::sqrt(rho[0] * rho[0] + rho[1] * rho[1] + rho[2] * rho[2]);
  const double j =
      (std::sqrt(3.0) * sq / sum - 1.0) / (std::sqrt(3.0) - 1.0);
  return std::clamp(j, 0.0, 1.0);
}

struct MatchConfig {
  int match_count = 11;       // M, direct sound included
  double accept_cost = 1.0;   // reject J above this even if minimal
  double dz = 0.1;            // SX height grid step, meters
  double alpha_decay = 0.050; // seconds
  double match_window = 0.075;  // after the direct sound, seconds
};

/// Iterative triplet peak matching. The direct sound forms match m = 1 with
/// the globally localized event; the remaining matches are built from the
/// greatest unmatched peak, its feasible TDOA candidates in the two inferior
/// perspectives, and the minimum of the combined angular/amplitude cost.
inline std::vector<PeakMatch> match_peaks(
    const std::array<std::vector<Peak>, 3>& triplet_peaks,
    const std::array<Vector3d, 3>& positions,
    const std::array<Peak, 3>& direct_peaks, const SoundEvent& direct_event,
    double c, const MatchConfig& cfg = {}) {
  std::vector<PeakMatch> matches;

  PeakMatch direct;
  direct.index = 1;
  direct.peaks = direct_peaks;
  direct.reference = 0;
  direct.event = direct_event;
  direct.cost = 0.0;
  matches.push_back(direct);

  const double mean_direct_toa =
      (direct_peaks[0].toa + direct_peaks[1].toa + direct_peaks[2].toa) / 3.0;
  AlphaSchedule alpha{mean_direct_toa, cfg.alpha_decay};

  // Candidate pools exclude the direct peaks and anything past the window.
  std::array<std::vector<Peak>, 3> pool;
  for (int i = 0; i < 3; ++i) {
    for (const auto& p : triplet_peaks[i]) {
      if (std::abs(p.toa - direct_peaks[i].toa) < 1e-9) continue;
      if (p.toa > direct_peaks[i].toa + cfg.match_window) continue;
      pool[i].push_back(p);
    }
  }
  std::array<std::vector<bool>, 3> used;
  for (int i = 0; i < 3; ++i) used[i].assign(pool[i].size(), false);

  auto pick_reference = [&]() -> std::pair<int, int> {
    int bi = -1, bk = -1;
    double best = -1.0;
    for (int i = 0; i < 3; ++i)
      for (size_t k = 0; k < pool[i].size(); ++k) {
        if (used[i][k]) continue;
        const Peak& p = pool[i][k];
        // deterministic tie-break: earlier TOA, then lower perspective index
        if (p.magnitude > best ||
            (p.magnitude == best &&
             (p.toa < pool[bi][bk].toa ||
              (p.toa == pool[bi][bk].toa && i < bi)))) {
          best = p.magnitude;
          bi = i;
          bk = static_cast<int>(k);
        }
      }
    return {bi, bk};
  };

  while (static_cast<int>(matches.size()) < cfg.match_count) {
    const auto [ref_persp, ref_k] = pick_reference();
    if (ref_persp < 0) break;
    used[ref_persp][ref_k] = true;  // consumed, matched or not
    const Peak& ref = pool[ref_persp][ref_k];

    const int b = (ref_persp + 1) % 3;
    const int cc = (ref_persp + 2) % 3;
    const double win_b = (positions[ref_persp] - positions[b]).norm() / c;
    const double win_c = (positions[ref_persp] - positions[cc]).norm() / c;

    std::optional<PeakMatch> best;
    std::array<int, 2> best_idx{-1, -1};
    for (size_t kb = 0; kb < pool[b].size(); ++kb) {
      if (used[b][kb]) continue;
      if (std::abs(ref.toa - pool[b][kb].toa) > win_b) continue;
      for (size_t kc = 0; kc < pool[cc].size(); ++kc) {
        if (used[cc][kc]) continue;
        if (std::abs(ref.toa - pool[cc][kc].toa) > win_c) continue;

        std::array<Peak, 3> trio{};
        trio[ref_persp] = ref;
        trio[b] = pool[b][kb];
        trio[cc] = pool[cc][kc];
        const std::vector<double> toas = {trio[0].toa, trio[1].toa, trio[2].toa};
        const std::vector<Direction> doas = {trio[0].doa, trio[1].doa,
                                             trio[2].doa};
        const std::vector<Vector3d> pos = {positions[0], positions[1],
                                           positions[2]};
        const auto event = localize_triplet(toas, doas, pos, c, cfg.dz);
        if (!event) continue;

        const double j = std::min(1.0, event->angular_cost) +
                         amplitude_error(event->position, trio,
                                         {positions[0], positions[1],
                                          positions[2]},
                                         alpha);
        if (!best || j < best->cost) {
          PeakMatch pm;
          pm.index = static_cast<int>(matches.size()) + 1;
          pm.peaks = trio;
          pm.reference = ref_persp;
          pm.event = *event;
          pm.cost = j;
          best = pm;
          best_idx = {static_cast<int>(kb), static_cast<int>(kc)};
        }
      }
    }

    if (!best || best->cost > cfg.accept_cost) continue;  // reference skipped
    used[b][best_idx[0]] = true;
    used[cc][best_idx[1]] = true;
    matches.push_back(*best);
  }
  return matches;
}

}  // namespace arir
