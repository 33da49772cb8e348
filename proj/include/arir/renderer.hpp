#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "arir/dsp.hpp"
#include "arir/grid.hpp"
#include "arir/interpolation.hpp"
#include "arir/pipeline.hpp"
#include "arir/third_octave.hpp"
#include "arir/types.hpp"

namespace arir {

/// Offline-interpolated fine-meshed ARIR grid with per-node direct TOAs.
struct FineGrid {
  std::vector<Arir> arirs;
  std::vector<double> direct_toa;  // seconds, sub-sample
  SquareLattice lattice;
  double spacing = 0.25;
  double late_split = 0.100;
  double speed_of_sound = kDefaultSpeedOfSound;
  bool fractional_alignment = true;
};

/// Sub-sample direct-sound TOA: energy centroid of the squared omni channel
/// around its peak.
inline double estimate_direct_toa(const Arir& arir) {
  const Eigen::RowVectorXd omni = arir.channels.row(0);
  long peak = 0;
  omni.cwiseAbs().maxCoeff(&peak);
  const long half = kSincTaps;
  double num = 0.0, den = 0.0;
  for (long t = std::max<long>(0, peak - half);
       t <= std::min<long>(arir.length() - 1, peak + half); ++t) {
    const double e = omni(t) * omni(t);
    num += e * static_cast<double>(t);
    den += e;
  }
  return (den > 0.0 ? num / den : static_cast<double>(peak)) / arir.sample_rate;
}

/// Evaluates the full synthesis on every node of a refined lattice spanning
/// the coarse grid hull.
inline FineGrid precompute_fine_grid(const PreprocessedGrid& pre,
                                     double r_fine = 0.25,
                                     double late_split = 0.100) {
  FineGrid fine;
  fine.spacing = r_fine;
  fine.late_split = late_split;
  fine.speed_of_sound = pre.grid.speed_of_sound;

  const auto& lat = pre.lattice;
  const int nx_fine =
      static_cast<int>(std::lround((lat.nx - 1) * lat.spacing / r_fine)) + 1;
  const int ny_fine =
      static_cast<int>(std::lround((lat.ny - 1) * lat.spacing / r_fine)) + 1;

  std::vector<Vector3d> nodes;
  for (int iy = 0; iy < ny_fine; ++iy)
    for (int ix = 0; ix < nx_fine; ++ix)
      nodes.emplace_back(lat.x0 + ix * r_fine, lat.y0 + iy * r_fine,
                         pre.grid.plane_height);

  for (const auto& node : nodes) {
    ListenerPose pose;
    pose.position = node;
    fine.arirs.push_back(synthesize_perspective(pre, pose));
    fine.direct_toa.push_back(estimate_direct_toa(fine.arirs.back()));
  }
  fine.lattice = build_lattice(nodes, r_fine);
  return fine;
}

/// Time-aligned linear interpolation of the fine grid: the early parts are
/// shifted to the weighted common direct TOA before weighting, the late part
/// comes from the nearest neighbor, third-octave correction restores the
/// early spectral envelope, head rotation is applied last.
inline Arir fine_interpolate(const FineGrid& fine, const ListenerPose& pose,
                             bool spectral_correction = true) {
  const auto sel = select_triplet(pose.position, fine.lattice);
  std::array<Vector3d, 3> positions;
  for (int i = 0; i < 3; ++i)
    positions[i] = fine.arirs[sel.indices[i]].position;
  const auto weights = grid_weights(pose.position, positions, fine.spacing);

  const Arir& proto = fine.arirs[sel.indices[0]];
  const double fs = proto.sample_rate;
  const long n = proto.length();
  const long split = std::min<long>(
      n, static_cast<long>(std::lround(fine.late_split * fs)));

  double t_ds = 0.0;
  for (int i = 0; i < 3; ++i)
    t_ds += weights.g[i] * fine.direct_toa[sel.indices[i]];

  Arir out;
  out.order = proto.order;
  out.sample_rate = fs;
  out.position = pose.position;
  out.delay_compensated = true;
  out.channels = MatrixXd::Zero(proto.num_channels(), n);

  std::array<MatrixXd, 3> aligned;
  for (int i = 0; i < 3; ++i) {
    const Arir& node = fine.arirs[sel.indices[i]];
    const double delay = (t_ds - fine.direct_toa[sel.indices[i]]) * fs;
    aligned[i].resize(node.num_channels(), split);
    for (int ch = 0; ch < node.num_channels(); ++ch) {
      const VectorXd head = node.channels.row(ch).head(split).transpose();
      if (fine.fractional_alignment)
        aligned[i].row(ch) = fractional_delay(head, delay).transpose();
      else
        aligned[i].row(ch) =
            fractional_delay(head, std::round(delay)).transpose();
    }
    out.channels.leftCols(split) += weights.g[i] * aligned[i];
  }

  if (spectral_correction) {
    // Per order and third-octave band, restore the short-time energy of the
    // combined early part to the weighted average of the aligned node
    // energies (identity when the weights are concentrated on one node).
    const ThirdOctaveBank bank(fs);
    const int nb = bank.num_bands();
    const long avg =
        std::max<long>(1, static_cast<long>(std::lround(0.010 * fs)));
    MatrixXd corrected = MatrixXd::Zero(out.channels.rows(), split);
    for (int nn = 0; nn <= out.order; ++nn) {
      const int c0 = nn * nn;
      const int nch = 2 * nn + 1;
      std::vector<std::vector<VectorXd>> mix_bands(nch);
      std::array<std::vector<std::vector<VectorXd>>, 3> node_bands;
      for (int k = 0; k < nch; ++k) {
        mix_bands[k] =
            bank.analyze(out.channels.row(c0 + k).head(split).transpose());
        for (int i = 0; i < 3; ++i) {
          if (weights.g[i] <= 0.0) continue;
          if (node_bands[i].empty()) node_bands[i].resize(nch);
          node_bands[i][k] = bank.analyze(aligned[i].row(c0 + k).transpose());
        }
      }
      for (int b = 0; b < nb; ++b) {
        VectorXd target = VectorXd::Zero(split);
        for (int i = 0; i < 3; ++i) {
          if (weights.g[i] <= 0.0) continue;
          for (int k = 0; k < nch; ++k)
            target += weights.g[i] *
                      moving_average(node_bands[i][k][b].cwiseAbs2(), avg);
        }
        VectorXd mixed_energy = VectorXd::Zero(split);
        for (int k = 0; k < nch; ++k)
          mixed_energy += moving_average(mix_bands[k][b].cwiseAbs2(), avg);
        VectorXd gain(split);
        for (long t = 0; t < split; ++t)
          gain(t) = (mixed_energy(t) > 1e-30 && target(t) > 1e-30)
                        ? std::min(10.0, std::sqrt(target(t) / mixed_energy(t)))
                        : 1.0;
        gain = moving_average(gain, avg);
        for (int k = 0; k < nch; ++k)
          corrected.row(c0 + k) +=
              (gain.cwiseProduct(mix_bands[k][b])).transpose();
      }
    }
    out.channels.leftCols(split) = corrected;
  }

  // late part from the nearest neighbor
  int nearest = sel.indices[0];
  double best = std::numeric_limits<double>::max();
  for (int i = 0; i < 3; ++i) {
    const double d = (positions[i] - pose.position).norm();
    if (d < best) { best = d; nearest = sel.indices[i]; }
  }
  if (split < n)
    out.channels.rightCols(n - split) =
        fine.arirs[nearest].channels.rightCols(n - split);

  if (pose.has_rotation())
    out.channels = sh_rotation(
        rotation_yaw_pitch_roll(pose.yaw_pitch_roll).transpose(), out.order) *
        out.channels;
  return out;
}

struct TrajectoryPoint {
  double time = 0.0;  // seconds
  ListenerPose pose;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  long frame_size = 1024;

  ListenerPose pose_at(double t) const {
    if (points.empty()) return {};
    const TrajectoryPoint* last = &points.front();
    for (const auto& p : points) {
      if (p.time > t) break;
      last = &p;
    }
    return last->pose;
  }
};

/// Time-variant uniformly partitioned overlap-add convolution: the filter is
/// refreshed from the fine grid once per frame; each output frame is the
/// inverse DFT of the summed partition products, overlap-added at the frame
/// hop.
inline MatrixXd stream_convolve(const Eigen::Ref<const VectorXd>& input,
                                const Trajectory& trajectory,
                                const FineGrid& fine) {
  if (input.size() == 0) throw std::invalid_argument("stream_convolve: empty input");
  const long ts = trajectory.frame_size;
  const long nfft = 2 * ts;
  const double fs = fine.arirs.front().sample_rate;
  const int channels = fine.arirs.front().num_channels();
  const long filter_len = fine.arirs.front().length();
  const long parts = (filter_len + ts - 1) / ts;

  const long num_frames = (input.size() + ts - 1) / ts;
  const long out_len = input.size() + filter_len - 1;
  MatrixXd out = MatrixXd::Zero(channels, out_len);

  // spectra of past input frames, most recent first
  std::vector<Eigen::VectorXcd> input_spectra;

  ListenerPose last_pose;
  bool have_filter = false;
  std::vector<Eigen::MatrixXcd> filter_spectra;  // per partition: bins x channels

  // extra zero-input frames flush the tail still inside later partitions
  const long total_frames = num_frames + parts - 1;
  for (long k = 0; k < total_frames; ++k) {
    const double t = static_cast<double>(k) * ts / fs;
    ListenerPose pose = trajectory.pose_at(t);
    if (!have_filter || (pose.position - last_pose.position).norm() > 1e-12 ||
        (pose.yaw_pitch_roll - last_pose.yaw_pitch_roll).norm() > 1e-12) {
      const Arir d = fine_interpolate(fine, pose);
      filter_spectra.assign(parts, Eigen::MatrixXcd());
      for (long p = 0; p < parts; ++p) {
        const long lo = p * ts;
        const long len = std::min(ts, filter_len - lo);
        Eigen::MatrixXcd spec(nfft / 2 + 1, channels);
        for (int ch = 0; ch < channels; ++ch)
          spec.col(ch) =
              rfft(d.channels.row(ch).segment(lo, len).transpose(), nfft);
        filter_spectra[p] = std::move(spec);
      }
      last_pose = pose;
      have_filter = true;
    }

    const long lo = k * ts;
    if (lo < input.size()) {
      const long len = std::min<long>(ts, input.size() - lo);
      input_spectra.insert(input_spectra.begin(),
                           rfft(input.segment(lo, len), nfft));
    } else {
      input_spectra.insert(input_spectra.begin(),
                           Eigen::VectorXcd::Zero(nfft / 2 + 1));
    }
    if (static_cast<long>(input_spectra.size()) > parts)
      input_spectra.pop_back();

    Eigen::MatrixXcd acc =
        Eigen::MatrixXcd::Zero(nfft / 2 + 1, channels);
    for (size_t p = 0; p < input_spectra.size(); ++p)
      acc += (filter_spectra[p].array().colwise() *
              input_spectra[p].array()).matrix();
    const long n_add = std::min<long>(nfft, out_len - lo);
    if (n_add <= 0) continue;
    for (int ch = 0; ch < channels; ++ch) {
      const VectorXd frame = irfft(acc.col(ch), nfft);
      out.row(ch).segment(lo, n_add) += frame.head(n_add).transpose();
    }
  }
  return out;
}

}  // namespace arir
