#pragma once

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "arir/dsp.hpp"
#include "arir/sh.hpp"
#include "arir/types.hpp"

namespace arir {

/// Shoebox room with per-surface absorption, walls ordered
/// x0, x1, y0, y1, z0, z1.
struct ShoeboxRoom {
  Vector3d dimensions{14.0, 10.0, 4.1};
  std::array<double, 6> wall_absorption{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};

  void validate() const {
    if ((dimensions.array() <= 0.0).any())
      throw std::invalid_argument("ShoeboxRoom: nonpositive dimension");
    for (double a : wall_absorption)
      if (a < 0.0 || a > 1.0)
        throw std::invalid_argument("ShoeboxRoom: absorption outside [0,1]");
  }
};

struct ImageSource {
  Vector3d position;
  double reflection_gain = 1.0;  // product of wall reflection factors
  int reflection_order = 0;
};

namespace detail {

// Mirror images of s in [0, L] with wall-hit counts: positions 2qL + s and
// 2qL - s; walls crossed between the image cell and cell 0 alternate between
// the two physical walls.
struct AxisImage {
  double pos;
  int hits_low, hits_high;
};

inline std::vector<AxisImage> axis_images(double s, double len, int max_order) {
  std::vector<AxisImage> out;
  for (int q = -max_order; q <= max_order; ++q) {
    for (int kind = 0; kind < 2; ++kind) {
      const double pos = 2.0 * q * len + (kind == 0 ? s : -s);
      // cell index of the image
      const int cell = kind == 0 ? 2 * q : 2 * q - 1;
      int lo = 0, hi = 0;
      if (cell > 0)
        for (int j = 1; j <= cell; ++j) (j % 2 ? hi : lo)++;
      else if (cell < 0)
        for (int j = cell + 1; j <= 0; ++j) (j % 2 == 0 ? lo : hi)++;
      if (lo + hi > max_order) continue;
      out.push_back({pos, lo, hi});
    }
  }
  return out;
}

}  // namespace detail

/// All mirror-image sources up to the given total reflection order, with
/// cumulative reflection gains prod sqrt(1 - absorption).
inline std::vector<ImageSource> image_sources(const ShoeboxRoom& room,
                                              const Vector3d& source,
                                              int max_order) {
  room.validate();
  for (int a = 0; a < 3; ++a)
    if (source(a) <= 0.0 || source(a) >= room.dimensions(a))
      throw std::invalid_argument("image_sources: source outside the room");

  const auto xs = detail::axis_images(source.x(), room.dimensions.x(), max_order);
  const auto ys = detail::axis_images(source.y(), room.dimensions.y(), max_order);
  const auto zs = detail::axis_images(source.z(), room.dimensions.z(), max_order);

  std::array<double, 6> refl{};
  for (int w = 0; w < 6; ++w) refl[w] = std::sqrt(1.0 - room.wall_absorption[w]);

  std::vector<ImageSource> out;
  for (const auto& ix : xs)
    for (const auto& iy : ys)
      for (const auto& iz : zs) {
        const int order = ix.hits_low + ix.hits_high + iy.hits_low +
                          iy.hits_high + iz.hits_low + iz.hits_high;
        if (order > max_order) continue;
        ImageSource img;
        img.position = Vector3d(ix.pos, iy.pos, iz.pos);
        img.reflection_order = order;
        img.reflection_gain = std::pow(refl[0], ix.hits_low) *
                              std::pow(refl[1], ix.hits_high) *
                              std::pow(refl[2], iy.hits_low) *
                              std::pow(refl[3], iy.hits_high) *
                              std::pow(refl[4], iz.hits_low) *
                              std::pow(refl[5], iz.hits_high);
        out.push_back(img);
      }
  return out;
}

struct SimulationConfig {
  int sh_order = 3;
  double sample_rate = 44100.0;
  int max_reflection_order = 2;
  double speed_of_sound = kDefaultSpeedOfSound;
  double length = 0.0;       // seconds; 0 = auto from the latest image
  double diffuse_tail_t60 = 0.0;  // 0 disables the noise tail
  unsigned tail_seed = 1;
};

/// Simulates one ARIR: each image source contributes gain/D times a
/// fractionally delayed impulse at D/c, SH-encoded at its arrival direction.
inline Arir simulate_arir(const std::vector<ImageSource>& images,
                          const Vector3d& receiver,
                          const SimulationConfig& cfg) {
  double max_delay = 0.0;
  for (const auto& img : images)
    max_delay = std::max(max_delay,
                         (img.position - receiver).norm() / cfg.speed_of_sound);
  double length = cfg.length;
  if (length <= 0.0) length = max_delay + 0.010;
  if (cfg.diffuse_tail_t60 > 0.0) length += cfg.diffuse_tail_t60;
  const long n = static_cast<long>(std::lround(length * cfg.sample_rate));

  Arir out;
  out.order = cfg.sh_order;
  out.sample_rate = cfg.sample_rate;
  out.position = receiver;
  out.channels = MatrixXd::Zero(num_sh_channels(cfg.sh_order), n);

  for (const auto& img : images) {
    const Vector3d diff = img.position - receiver;
    const double dist = diff.norm();
    if (dist < 1e-3) continue;  // receiver on the image source
    const double delay = dist / cfg.speed_of_sound * cfg.sample_rate;
    const double gain = img.reflection_gain / dist;
    const VectorXd y = sh_eval(Direction(diff / dist), cfg.sh_order);
    Eigen::RowVectorXd impulse = Eigen::RowVectorXd::Zero(n);
    add_sinc_impulse(impulse, delay, gain);
    out.channels += y * impulse;
  }

  if (cfg.diffuse_tail_t60 > 0.0) {
    std::mt19937 rng(cfg.tail_seed ^ std::hash<double>{}(receiver.x() +
                                                         17.0 * receiver.y()));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const long start = static_cast<long>(std::lround(max_delay * cfg.sample_rate));
    const double decay = 3.0 * std::log(10.0) / cfg.diffuse_tail_t60;
    double tail_gain = 0.0;
    for (const auto& img : images)
      if (img.reflection_order == cfg.max_reflection_order)
        tail_gain = std::max(tail_gain, img.reflection_gain /
                                            (img.position - receiver).norm());
    for (long t = start; t < n; ++t) {
      const double env = 0.3 * tail_gain *
          std::exp(-decay * (t - start) / cfg.sample_rate);
      const double az = std::numbers::pi * uni(rng);
      const double zen = std::acos(uni(rng));
      const VectorXd y = sh_eval(Direction::fromAngles(az, zen), cfg.sh_order);
      out.channels.col(t) += y * (env * gauss(rng));
    }
  }
  return out;
}

/// Simulates a full grid on one horizontal plane.
inline ArirGrid simulate_arir_grid(const ShoeboxRoom& room,
                                   const Vector3d& source,
                                   const std::vector<Vector3d>& receivers,
                                   double spacing,
                                   const SimulationConfig& cfg) {
  if (receivers.empty())
    throw std::invalid_argument("simulate_arir_grid: no receivers");
  for (const auto& r : receivers)
    for (int a = 0; a < 3; ++a)
      if (r(a) <= 0.0 || r(a) >= room.dimensions(a))
        throw std::invalid_argument("simulate_arir_grid: receiver outside room");

  const auto images = image_sources(room, source, cfg.max_reflection_order);

  // uniform length so the grid validates
  SimulationConfig local = cfg;
  if (local.length <= 0.0) {
    double max_delay = 0.0;
    for (const auto& r : receivers)
      for (const auto& img : images)
        max_delay = std::max(max_delay,
                             (img.position - r).norm() / cfg.speed_of_sound);
    local.length = max_delay + 0.010 + cfg.diffuse_tail_t60;
  }

  ArirGrid grid;
  grid.spacing = spacing;
  grid.plane_height = receivers.front().z();
  grid.speed_of_sound = cfg.speed_of_sound;
  for (const auto& r : receivers)
    grid.arirs.push_back(simulate_arir(images, r, local));
  grid.validate();
  return grid;
}

/// Convenience: nx x ny receiver lattice centered in the room at height z.
inline std::vector<Vector3d> lattice_receivers(const ShoeboxRoom& room, int nx,
                                               int ny, double spacing,
                                               double z) {
  std::vector<Vector3d> out;
  const double x0 = room.dimensions.x() / 2.0 - spacing * (nx - 1) / 2.0;
  const double y0 = room.dimensions.y() / 2.0 - spacing * (ny - 1) / 2.0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      out.emplace_back(x0 + ix * spacing, y0 + iy * spacing, z);
  return out;
}

}  // namespace arir
