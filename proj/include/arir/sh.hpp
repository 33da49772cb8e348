#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "arir/types.hpp"

namespace arir {

constexpr int kMaxShOrder = 7;

inline int num_sh_channels(int order) { return (order + 1) * (order + 1); }
inline int acn_index(int n, int m) { return n * n + n + m; }

/// Real-valued spherical harmonics, ACN channel order, N3D normalization
/// (Y_0^0 = 1), without Condon-Shortley phase.
inline VectorXd sh_eval(const Direction& dir, int order) {
  if (order < 0) throw std::invalid_argument("sh_eval: negative order");
  const double x = dir.v.x(), y = dir.v.y(), z = dir.v.z();
  const double sin_zen = std::sqrt(std::max(0.0, 1.0 - z * z));

  VectorXd out(num_sh_channels(order));

  // Associated Legendre P_n^m(z) without Condon-Shortley phase,
  // column-by-column in m.
  std::vector<double> pnm((order + 1) * (order + 1), 0.0);
  auto P = [&](int n, int m) -> double& { return pnm[n * (order + 1) + m]; };
  P(0, 0) = 1.0;
  for (int m = 1; m <= order; ++m)
    P(m, m) = P(m - 1, m - 1) * (2 * m - 1) * sin_zen;
  for (int m = 0; m < order; ++m) {
    P(m + 1, m) = (2 * m + 1) * z * P(m, m);
    for (int n = m + 2; n <= order; ++n)
      P(n, m) = ((2 * n - 1) * z * P(n - 1, m) - (n + m - 1) * P(n - 2, m)) /
                (n - m);
  }

  // cos(m phi), sin(m phi) by recurrence on (cos phi, sin phi).
  double cos_az = 1.0, sin_az = 0.0;
  if (sin_zen > 0.0) {
    cos_az = x / sin_zen;
    sin_az = y / sin_zen;
  }
  std::vector<double> cm(order + 1, 1.0), sm(order + 1, 0.0);
  for (int m = 1; m <= order; ++m) {
    cm[m] = cm[m - 1] * cos_az - sm[m - 1] * sin_az;
    sm[m] = sm[m - 1] * cos_az + cm[m - 1] * sin_az;
  }

  for (int n = 0; n <= order; ++n) {
    out(acn_index(n, 0)) = std::sqrt(2.0 * n + 1.0) * P(n, 0);
    double ratio = 1.0;  // (n-m)! / (n+m)!
    for (int m = 1; m <= n; ++m) {
      ratio /= static_cast<double>((n + m) * (n - m + 1));
      const double norm = std::sqrt((2.0 * n + 1.0) * 2.0 * ratio);
      out(acn_index(n, m)) = norm * P(n, m) * cm[m];
      out(acn_index(n, -m)) = norm * P(n, m) * sm[m];
    }
  }
  return out;
}

inline Matrix3d rotation_z(double a) {
  Matrix3d r;
  r << std::cos(a), -std::sin(a), 0.0,
       std::sin(a),  std::cos(a), 0.0,
       0.0, 0.0, 1.0;
  return r;
}

// Rotation about y increasing the zenith of a vector in the xz half-plane.
inline Matrix3d rotation_y(double a) {
  Matrix3d r;
  r <<  std::cos(a), 0.0, std::sin(a),
        0.0, 1.0, 0.0,
       -std::sin(a), 0.0, std::cos(a);
  return r;
}

/// Rotation R = Rz(az_d) Ry(zen_d - zen_i) Rz(-az_i) mapping the source DOA
/// onto the target DOA.
inline Matrix3d rotation_align(const Direction& source, const Direction& target) {
  return rotation_z(target.azimuth()) *
         rotation_y(target.zenith() - source.zenith()) *
         rotation_z(-source.azimuth());
}

/// Block-diagonal real-SH rotation matrix from a 3x3 rotation, built by the
/// band-recursive construction. Satisfies sh_eval(R v) = R_sp * sh_eval(v).
inline MatrixXd sh_rotation(const Matrix3d& rot, int order) {
  if ((rot.transpose() * rot - Matrix3d::Identity()).norm() > 1e-6)
    throw std::invalid_argument("sh_rotation: matrix is not orthogonal");

  const int nch = num_sh_channels(order);
  MatrixXd rsp = MatrixXd::Zero(nch, nch);
  rsp(0, 0) = 1.0;
  if (order == 0) return rsp;

  // First band in ACN order (m = -1, 0, 1) <-> Cartesian (y, z, x).
  const int cart[3] = {1, 2, 0};
  Matrix3d band1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) band1(i, j) = rot(cart[i], cart[j]);
  rsp.block(1, 1, 3, 3) = band1;

  auto r1 = [&](int i, int j) { return band1(i + 1, j + 1); };

  MatrixXd prev = band1;  // band l-1, indexed by m+l-1
  for (int l = 2; l <= order; ++l) {
    const int dim = 2 * l + 1;
    MatrixXd cur(dim, dim);

    auto sub = [&](int a, int b) -> double {
      // previous-band entry, 0 outside its range
      if (std::abs(a) > l - 1 || std::abs(b) > l - 1) return 0.0;
      return prev(a + l - 1, b + l - 1);
    };
    auto Pf = [&](int i, int a, int b) -> double {
      if (std::abs(b) < l) return r1(i, 0) * sub(a, b);
      if (b == l)
        return r1(i, 1) * sub(a, l - 1) - r1(i, -1) * sub(a, -l + 1);
      return r1(i, 1) * sub(a, -l + 1) + r1(i, -1) * sub(a, l - 1);
    };

    for (int m = -l; m <= l; ++m) {
      for (int n = -l; n <= l; ++n) {
        const double denom =
            (std::abs(n) < l) ? double((l + n) * (l - n)) : double(2 * l * (2 * l - 1));
        const double u = std::sqrt(double((l + m) * (l - m)) / denom);
        double v, w;
        if (m == 0) {
          v = 0.5 * std::sqrt(2.0 * l * (l - 1) / denom) * -1.0;
          w = 0.0;
        } else {
          const int am = std::abs(m);
          v = 0.5 * std::sqrt(double((l + am - 1) * (l + am)) / denom);
          w = -0.5 * std::sqrt(double((l - am - 1) * (l - am)) / denom);
        }

        double term = 0.0;
        if (u != 0.0) term += u * Pf(0, m, n);
        if (v != 0.0) {
          double vv;
          if (m == 0)
            vv = Pf(1, 1, n) + Pf(-1, -1, n);
          else if (m > 0)
            vv = Pf(1, m - 1, n) * std::sqrt(m == 1 ? 2.0 : 1.0) -
                 Pf(-1, -m + 1, n) * (m == 1 ? 0.0 : 1.0);
          else
            vv = Pf(1, m + 1, n) * (m == -1 ? 0.0 : 1.0) +
                 Pf(-1, -m - 1, n) * std::sqrt(m == -1 ? 2.0 : 1.0);
          term += v * vv;
        }
        if (w != 0.0) {
          double ww;
          if (m > 0)
            ww = Pf(1, m + 1, n) + Pf(-1, -m - 1, n);
          else
            ww = Pf(1, m - 1, n) - Pf(-1, -m + 1, n);
          term += w * ww;
        }
        cur(m + l, n + l) = term;
      }
    }

    rsp.block(l * l, l * l, dim, dim) = cur;
    prev = cur;
  }
  return rsp;
}

/// Intrinsic head rotation yaw (z), pitch (y), roll (x).
inline Matrix3d rotation_yaw_pitch_roll(const Vector3d& ypr) {
  const double cy = std::cos(ypr.x()), sy = std::sin(ypr.x());
  const double cp = std::cos(ypr.y()), sp = std::sin(ypr.y());
  const double cr = std::cos(ypr.z()), sr = std::sin(ypr.z());
  Matrix3d rz, ry, rx;
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  return rz * ry * rx;
}

}  // namespace arir
