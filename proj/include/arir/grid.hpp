#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "arir/types.hpp"

namespace arir {

/// Raised-cosine distance weights over a triplet of grid positions,
/// renormalized to sum to one. Listeners outside the spanned cell are
/// clamped to the cell boundary.
struct TripletWeights {
  std::array<double, 3> g{};
  bool clamped = false;
};

inline TripletWeights grid_weights(const Vector3d& listener,
                                   const std::array<Vector3d, 3>& positions,
                                   double spacing) {
  TripletWeights out;
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& p : positions) {
    xmin = std::min(xmin, p.x()); xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y()); ymax = std::max(ymax, p.y());
  }
  double xd = listener.x(), yd = listener.y();
  if (xd < xmin || xd > xmax || yd < ymin || yd > ymax) {
    out.clamped = true;
    xd = std::clamp(xd, xmin, xmax);
    yd = std::clamp(yd, ymin, ymax);
  }

  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double cx = std::cos(std::numbers::pi / (2.0 * spacing) *
                               (xd - positions[i].x()));
    const double cy = std::cos(std::numbers::pi / (2.0 * spacing) *
                               (yd - positions[i].y()));
    out.g[i] = cx * cx * cy * cy;
    sum += out.g[i];
  }
  if (sum <= 0.0) throw std::runtime_error("grid_weights: degenerate triplet");
  for (auto& w : out.g) w /= sum;
  return out;
}

/// Indices of lattice sites forming a square-lattice view of arbitrary
/// positions sharing one horizontal plane.
struct SquareLattice {
  std::vector<Vector3d> positions;
  double spacing = 0.0;
  double x0 = 0.0, y0 = 0.0;
  int nx = 0, ny = 0;
  std::vector<int> site;  // row-major [iy * nx + ix] -> position index or -1

  int at(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return -1;
    return site[static_cast<size_t>(iy) * nx + ix];
  }
};

inline SquareLattice build_lattice(const std::vector<Vector3d>& positions,
                                   double spacing) {
  if (positions.empty()) throw std::invalid_argument("build_lattice: empty");
  SquareLattice lat;
  lat.positions = positions;
  lat.spacing = spacing;
  lat.x0 = std::numeric_limits<double>::max();
  lat.y0 = std::numeric_limits<double>::max();
  double xmax = -lat.x0, ymax = -lat.y0;
  for (const auto& p : positions) {
    lat.x0 = std::min(lat.x0, p.x()); xmax = std::max(xmax, p.x());
    lat.y0 = std::min(lat.y0, p.y()); ymax = std::max(ymax, p.y());
  }
  lat.nx = static_cast<int>(std::lround((xmax - lat.x0) / spacing)) + 1;
  lat.ny = static_cast<int>(std::lround((ymax - lat.y0) / spacing)) + 1;
  lat.site.assign(static_cast<size_t>(lat.nx) * lat.ny, -1);
  for (size_t k = 0; k < positions.size(); ++k) {
    const int ix = static_cast<int>(std::lround((positions[k].x() - lat.x0) / spacing));
    const int iy = static_cast<int>(std::lround((positions[k].y() - lat.y0) / spacing));
    if (std::abs(positions[k].x() - (lat.x0 + ix * spacing)) > 1e-6 ||
        std::abs(positions[k].y() - (lat.y0 + iy * spacing)) > 1e-6)
      throw std::invalid_argument("build_lattice: position off the lattice");
    lat.site[static_cast<size_t>(iy) * lat.nx + ix] = static_cast<int>(k);
  }
  return lat;
}

struct TripletSelection {
  std::array<int, 3> indices{};
  bool outside = false;
};

/// Three corners of the containing square cell nearest the listener;
/// the diagonally farthest corner is dropped, ties by lowest index.
inline TripletSelection select_triplet(const Vector3d& listener,
                                       const SquareLattice& lat) {
  TripletSelection sel;
  double fx = (listener.x() - lat.x0) / lat.spacing;
  double fy = (listener.y() - lat.y0) / lat.spacing;
  if (fx < 0.0 || fy < 0.0 || fx > lat.nx - 1 || fy > lat.ny - 1) sel.outside = true;
  int cx = std::clamp(static_cast<int>(std::floor(fx)), 0, std::max(0, lat.nx - 2));
  int cy = std::clamp(static_cast<int>(std::floor(fy)), 0, std::max(0, lat.ny - 2));

  // Incomplete lattices: fall back to the complete cell nearest the listener.
  auto cell_ok = [&](int ix, int iy) {
    return lat.at(ix, iy) >= 0 && lat.at(ix + 1, iy) >= 0 &&
           lat.at(ix, iy + 1) >= 0 && lat.at(ix + 1, iy + 1) >= 0;
  };
  if (!cell_ok(cx, cy)) {
    double best = std::numeric_limits<double>::max();
    int bx = -1, by = -1;
    for (int iy = 0; iy + 1 < lat.ny; ++iy)
      for (int ix = 0; ix + 1 < lat.nx; ++ix)
        if (cell_ok(ix, iy)) {
          const double dx = fx - (ix + 0.5), dy = fy - (iy + 0.5);
          const double d = dx * dx + dy * dy;
          if (d < best) { best = d; bx = ix; by = iy; }
        }
    if (bx < 0) throw std::runtime_error("select_triplet: no complete cell");
    if (bx != cx || by != cy) sel.outside = true;
    cx = bx; cy = by;
  }

  std::array<int, 4> corners = {lat.at(cx, cy), lat.at(cx + 1, cy),
                                lat.at(cx, cy + 1), lat.at(cx + 1, cy + 1)};
  int drop = 0;
  double worst = -1.0;
  for (int k = 0; k < 4; ++k) {
    const double d = (lat.positions[corners[k]] - listener).head<2>().norm();
    if (d > worst + 1e-12 ||
        (std::abs(d - worst) <= 1e-12 && corners[k] > corners[drop]))
      { worst = d; drop = k; }
  }
  int j = 0;
  for (int k = 0; k < 4; ++k)
    if (k != drop) sel.indices[j++] = corners[k];
  std::sort(sel.indices.begin(), sel.indices.end());
  return sel;
}

inline SquareLattice build_lattice(const ArirGrid& grid) {
  std::vector<Vector3d> pos;
  pos.reserve(grid.arirs.size());
  for (const auto& a : grid.arirs) pos.push_back(a.position);
  return build_lattice(pos, grid.spacing);
}

}  // namespace arir
