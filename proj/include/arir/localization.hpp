#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "arir/doa.hpp"
#include "arir/sh.hpp"
#include "arir/types.hpp"

namespace arir {

/// Sum over perspectives of (1 - cos angle) between the observed DOA and the
/// direction from the perspective to the candidate position.
inline double angular_error(const Vector3d& candidate,
                            const std::vector<Direction>& doas,
                            const std::vector<Vector3d>& positions) {
  double j = 0.0;
  for (size_t i = 0; i < positions.size(); ++i) {
    const Vector3d diff = candidate - positions[i];
    const double dist = diff.norm();
    if (dist < 1e-3) {
      j += 1.0;  // direction undefined at the perspective itself
      continue;
    }
    j += 1.0 - doas[i].v.dot(diff / dist);
  }
  return j;
}

inline double angular_error(const Vector3d& candidate,
                            const std::vector<Peak>& peaks,
                            const std::vector<Vector3d>& positions) {
  std::vector<Direction> doas;
  doas.reserve(peaks.size());
  for (const auto& p : peaks) doas.push_back(p.doa);
  return angular_error(candidate, doas, positions);
}

namespace detail {

// Spherical LS data in coordinates shifted so perspective 0 is the origin.
struct SphericalLs {
  Eigen::MatrixXd s2d;   // (P-1) x 2
  Eigen::VectorXd d;     // range differences, meters
  Eigen::VectorXd b;     // 0.5 (r_i^2 - d_i^2)
  Vector3d origin;
};

inline SphericalLs spherical_ls_setup(const std::vector<double>& toas,
                                      const std::vector<Vector3d>& positions,
                                      double c) {
  const size_t p = positions.size();
  SphericalLs ls;
  ls.origin = positions[0];
  ls.s2d.resize(p - 1, 2);
  ls.d.resize(p - 1);
  ls.b.resize(p - 1);
  for (size_t i = 1; i < p; ++i) {
    const Vector3d xi = positions[i] - ls.origin;
    ls.s2d(i - 1, 0) = xi.x();
    ls.s2d(i - 1, 1) = xi.y();
    ls.d(i - 1) = c * (toas[i] - toas[0]);
    ls.b(i - 1) = 0.5 * (xi.squaredNorm() - ls.d(i - 1) * ls.d(i - 1));
  }
  return ls;
}

inline double spherical_ls_cost(const SphericalLs& ls, const Eigen::Vector2d& xy,
                                double rt) {
  return (ls.s2d * xy + rt * ls.d - ls.b).squaredNorm();
}

// For fixed z, the LS-optimal (x, y) is affine in r_t: xy(r) = p - r q.
// The range constraint r^2 = |xy|^2 + z^2 then gives a quadratic in r.
struct AffineLine {
  Eigen::Vector2d p, q;
};

inline AffineLine affine_solution(const SphericalLs& ls) {
  const auto qr = ls.s2d.colPivHouseholderQr();
  if (qr.rank() < 2)
    throw std::runtime_error("localization: collinear perspectives");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ls.s2d);
  const double cond = svd.singularValues()(0) /
                      svd.singularValues()(svd.singularValues().size() - 1);
  if (cond > 1e8)
    throw std::runtime_error("localization: degenerate perspective geometry");
  return {qr.solve(ls.b), qr.solve(ls.d)};
}

/// Positive real roots of r^2 (1 - |q|^2) + 2 r p.q - |p|^2 - z^2 = 0.
inline std::vector<double> range_roots(const AffineLine& line, double z) {
  const double a = 1.0 - line.q.squaredNorm();
  const double bq = 2.0 * line.p.dot(line.q);
  const double g = -line.p.squaredNorm() - z * z;
  std::vector<double> roots;
  if (std::abs(a) < 1e-12) {
    if (std::abs(bq) > 1e-12) {
      const double r = -g / bq;
      if (r > 0.0) roots.push_back(r);
    }
    return roots;
  }
  const double disc = bq * bq - 4.0 * a * g;
  if (disc < 0.0) return roots;
  const double sq = std::sqrt(disc);
  for (double r : {(-bq + sq) / (2.0 * a), (-bq - sq) / (2.0 * a)})
    if (r > 0.0) roots.push_back(r);
  return roots;
}

}  // namespace detail

struct GlobalLocalization {
  SoundEvent event;
  double system_delay = 0.0;  // seconds
};

/// Global direct-sound localization from P >= 4 perspectives: constrained
/// spherical least squares over (x, y, r) with a one-dimensional search over
/// the height, +-z disambiguated by the angular error. Also estimates the
/// uniform system delay common to all TOAs.
inline GlobalLocalization localize_global(const std::vector<Peak>& direct_peaks,
                                          const std::vector<Vector3d>& positions,
                                          double c, double dz = 0.1) {
  if (direct_peaks.size() < 4 || direct_peaks.size() != positions.size())
    throw std::invalid_argument("localize_global: needs >= 4 perspectives");

  std::vector<double> toas;
  toas.reserve(direct_peaks.size());
  double max_toa = 0.0;
  for (const auto& p : direct_peaks) {
    toas.push_back(p.toa);
    max_toa = std::max(max_toa, p.toa);
  }
  const auto ls = detail::spherical_ls_setup(toas, positions, c);
  const auto line = detail::affine_solution(ls);

  // Candidates lie on the TDOA hyperbola parametrized by the signed height;
  // the LS cost is nearly flat along it for coplanar perspectives, so the
  // unique solution is the candidate minimizing the angular error.
  const double z_max = std::max(c * max_toa, 1.0);
  double best_ang = std::numeric_limits<double>::max();
  double best_z = 0.0, best_r = 0.0;
  auto eval_signed_z = [&](double z) {
    for (double r : detail::range_roots(line, z)) {
      const Eigen::Vector2d xy = line.p - r * line.q;
      const Vector3d cand = ls.origin + Vector3d(xy.x(), xy.y(), z);
      const double ang = angular_error(cand, direct_peaks, positions);
      if (ang < best_ang) { best_ang = ang; best_z = z; best_r = r; }
    }
  };
  for (double z = -z_max; z <= z_max; z += dz) eval_signed_z(z);
  if (best_ang == std::numeric_limits<double>::max())
    throw std::runtime_error("localize_global: infeasible TDOA set");

  // refine the signed height by ternary search around the coarse optimum
  {
    double lo = best_z - dz, hi = best_z + dz;
    auto ang_at = [&](double z) {
      double a = std::numeric_limits<double>::max();
      for (double r : detail::range_roots(line, z)) {
        const Eigen::Vector2d xy = line.p - r * line.q;
        a = std::min(a, angular_error(ls.origin + Vector3d(xy.x(), xy.y(), z),
                                      direct_peaks, positions));
      }
      return a;
    };
    for (int it = 0; it < 80; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (ang_at(m1) < ang_at(m2)) hi = m2; else lo = m1;
    }
    eval_signed_z(0.5 * (lo + hi));
  }

  const Eigen::Vector2d xy = line.p - best_r * line.q;
  GlobalLocalization out;
  out.event.kind = EventKind::direct;
  out.event.ls_cost = detail::spherical_ls_cost(ls, xy, best_r);
  out.event.position = ls.origin + Vector3d(xy.x(), xy.y(), best_z);
  out.event.angular_cost = best_ang;

  double delay = 0.0;
  for (size_t i = 0; i < positions.size(); ++i)
    delay += toas[i] - (out.event.position - positions[i]).norm() / c;
  out.system_delay = delay / static_cast<double>(positions.size());
  return out;
}

/// Triplet sound-event localization: closed-form spherical intersection on a
/// height grid of step dz, bounded by the flight-time balls, +-z picked by
/// the angular error. Empty feasible set -> nullopt (localization failed).
inline std::optional<SoundEvent> localize_triplet(
    const std::vector<double>& toas, const std::vector<Direction>& doas,
    const std::vector<Vector3d>& positions, double c, double dz = 0.1) {
  if (toas.size() != 3 || positions.size() != 3)
    throw std::invalid_argument("localize_triplet: needs exactly 3 perspectives");

  const auto ls = detail::spherical_ls_setup(toas, positions, c);
  detail::AffineLine line;
  try {
    line = detail::affine_solution(ls);
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }

  const double max_toa = *std::max_element(toas.begin(), toas.end());
  const double z_cap = c * max_toa;

  // Residual of the absolute flight times along the TDOA line; the range
  // root is ill-conditioned against sub-sample TOA noise for distant events,
  // while the delay-compensated absolute TOAs fix the range directly.
  auto range_residual = [&](double r, double z) {
    const Eigen::Vector2d xy = line.p - r * line.q;
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Vector3d cand = ls.origin + Vector3d(xy.x(), xy.y(), z);
      const double d = (cand - positions[i]).norm() - c * toas[i];
      acc += d * d;
    }
    return acc;
  };
  auto refine_range = [&](double r0, double z) {
    double lo = std::max(1e-3, r0 - 3.0), hi = r0 + 3.0;
    for (int it = 0; it < 60; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (range_residual(m1, z) < range_residual(m2, z)) hi = m2; else lo = m1;
    }
    return 0.5 * (lo + hi);
  };

  std::optional<SoundEvent> best;
  for (double z = 0.0; z <= z_cap; z += dz) {
    for (double root : detail::range_roots(line, z)) {
      const double r = refine_range(root, z);
      const Eigen::Vector2d xy = line.p - r * line.q;
      for (double sz : {z, -z}) {
        const Vector3d cand = ls.origin + Vector3d(xy.x(), xy.y(), sz);
        // slack on the order of the height-grid step: candidates are
        // quantized in z and the TOAs carry sub-sample estimation error
        const double slack = 0.5 * dz;
        bool feasible = true;
        for (size_t i = 0; i < 3; ++i)
          if ((cand - positions[i]).norm() > c * toas[i] + slack) {
            feasible = false;
            break;
          }
        if (!feasible) continue;
        const double ang = angular_error(cand, doas, positions);
        if (!best || ang < best->angular_cost) {
          SoundEvent ev;
          ev.position = cand;
          ev.angular_cost = ang;
          ev.ls_cost = detail::spherical_ls_cost(ls, xy, r);
          ev.kind = EventKind::triplet;
          best = ev;
        }
        if (z == 0.0) break;
      }
    }
  }
  return best;
}

/// Rotates an ARIR so its observed direct-sound DOA matches the expected one,
/// when the deviation exceeds the threshold.
inline Arir orientation_correction(const Arir& arir, const Direction& expected,
                                   double threshold_deg = 3.0) {
  const DoaTrajectory traj = doa_trajectory(arir);
  const Envelope env = directional_envelope(arir);
  long peak = 0;
  env.values.maxCoeff(&peak);
  const Direction observed(traj.directions[peak]);

  const double dev =
      std::acos(std::clamp(observed.v.dot(expected.v), -1.0, 1.0));
  if (dev <= threshold_deg * std::numbers::pi / 180.0) return arir;

  const MatrixXd rsp =
      sh_rotation(rotation_align(observed, expected), arir.order);
  Arir out = arir;
  out.channels = rsp * arir.channels;
  return out;
}

}  // namespace arir
