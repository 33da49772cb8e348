#pragma once

#include <array>
#include <map>
#include <vector>

#include "arir/doa.hpp"
#include "arir/grid.hpp"
#include "arir/interpolation.hpp"
#include "arir/localization.hpp"
#include "arir/matching.hpp"
#include "arir/peaks.hpp"
#include "arir/types.hpp"

namespace arir {

struct PipelineConfig {
  PeakDetectConfig peaks;
  MatchConfig matching;
  InterpConfig interp;
  double orientation_threshold_deg = 3.0;
  bool orientation_correct = false;
  double dz = 0.1;
};

/// Pose-independent analysis of an ARIR grid: DOA trajectories, envelopes,
/// peak sets, global direct-sound localization, and system-delay removal.
/// Triplet matchings are computed lazily per cell and cached.
struct PreprocessedGrid {
  ArirGrid grid;  // delay-compensated
  SquareLattice lattice;
  std::vector<DoaTrajectory> doas;
  std::vector<Envelope> envelopes;
  std::vector<std::vector<Peak>> peaks;  // early peaks, descending magnitude
  std::vector<Peak> direct_peaks;
  SoundEvent source;
  double system_delay = 0.0;
  PipelineConfig cfg;

  mutable std::map<std::array<int, 3>, std::vector<PeakMatch>> match_cache;

  const std::vector<PeakMatch>& matches_for(
      const std::array<int, 3>& triplet) const {
    auto it = match_cache.find(triplet);
    if (it != match_cache.end()) return it->second;

    std::array<std::vector<Peak>, 3> triplet_peaks;
    std::array<Vector3d, 3> positions;
    std::array<Peak, 3> directs;
    for (int i = 0; i < 3; ++i) {
      triplet_peaks[i] = peaks[triplet[i]];
      positions[i] = grid.arirs[triplet[i]].position;
      directs[i] = direct_peaks[triplet[i]];
    }
    auto result = match_peaks(triplet_peaks, positions, directs, source,
                              grid.speed_of_sound, cfg.matching);
    return match_cache.emplace(triplet, std::move(result)).first->second;
  }
};

namespace detail {

inline void analyze_perspective(PreprocessedGrid& pre, int i) {
  const Arir& a = pre.grid.arirs[i];
  pre.doas[i] = doa_trajectory(a);
  pre.envelopes[i] = directional_envelope(a);
  pre.peaks[i] =
      detect_peaks(pre.envelopes[i], pre.doas[i], a.sample_rate, i, pre.cfg.peaks);
  if (pre.peaks[i].empty())
    throw std::runtime_error("preprocess: no peaks in perspective " +
                             std::to_string(i));
  pre.direct_peaks[i] = pre.peaks[i].front();  // strongest peak
}

}  // namespace detail

inline PreprocessedGrid preprocess(ArirGrid grid, const PipelineConfig& cfg = {}) {
  grid.validate();
  PreprocessedGrid pre;
  pre.cfg = cfg;
  pre.grid = std::move(grid);
  pre.lattice = build_lattice(pre.grid);

  const int p = pre.grid.size();
  pre.doas.resize(p);
  pre.envelopes.resize(p);
  pre.peaks.resize(p);
  pre.direct_peaks.resize(p);
  for (int i = 0; i < p; ++i) detail::analyze_perspective(pre, i);

  std::vector<Vector3d> positions;
  for (const auto& a : pre.grid.arirs) positions.push_back(a.position);
  const auto global = localize_global(pre.direct_peaks, positions,
                                      pre.grid.speed_of_sound, cfg.dz);
  pre.source = global.event;
  pre.source.kind = EventKind::direct;
  pre.system_delay = global.system_delay;

  // remove the uniform system delay (integer samples)
  const double fs = pre.grid.arirs[0].sample_rate;
  const long shift = static_cast<long>(std::lround(pre.system_delay * fs));
  for (int i = 0; i < p; ++i) {
    Arir& a = pre.grid.arirs[i];
    if (shift != 0) {
      MatrixXd moved = MatrixXd::Zero(a.channels.rows(), a.channels.cols());
      const long n = a.length();
      for (long t = 0; t < n; ++t) {
        const long src = t + shift;
        if (src >= 0 && src < n) moved.col(t) = a.channels.col(src);
      }
      a.channels = std::move(moved);
    }
    a.delay_compensated = true;
    if (cfg.orientation_correct) {
      const Vector3d to_source = pre.source.position - a.position;
      a = orientation_correction(a, Direction(to_source.normalized()),
                                 cfg.orientation_threshold_deg);
    }
  }
  if (shift != 0 || cfg.orientation_correct)
    for (int i = 0; i < p; ++i) detail::analyze_perspective(pre, i);

  return pre;
}

/// Full variable-perspective synthesis at one listener pose: triplet
/// selection, matched-peak and residual pipelines, merge, head rotation.
inline Arir synthesize_perspective(const PreprocessedGrid& pre,
                                   const ListenerPose& pose) {
  const auto sel = select_triplet(pose.position, pre.lattice);
  std::array<Vector3d, 3> positions;
  for (int i = 0; i < 3; ++i)
    positions[i] = pre.grid.arirs[sel.indices[i]].position;
  const auto weights =
      grid_weights(pose.position, positions, pre.grid.spacing);

  const auto& matches = pre.matches_for(sel.indices);
  const Arir& proto = pre.grid.arirs[sel.indices[0]];
  const double fs = proto.sample_rate;
  const long n = proto.length();
  const int channels = proto.num_channels();
  const double c = pre.grid.speed_of_sound;

  // cut matched segments per perspective
  std::array<SegmentDecomposition, 3> decomp;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> toas;
    toas.reserve(matches.size());
    for (const auto& m : matches) toas.push_back(m.peaks[i].toa);
    decomp[i] = cut_peak_segments(pre.grid.arirs[sel.indices[i]], toas,
                                  pre.cfg.interp);
  }

  // extrapolate each matched segment to the pose and interpolate
  std::vector<MatchedSegments> matched_segments(matches.size());
  for (size_t m = 0; m < matches.size(); ++m) {
    matched_segments[m].reference = matches[m].reference;
    for (int i = 0; i < 3; ++i) {
      const Segment& seg = decomp[i].segments[m];
      if (seg.samples.size() == 0) continue;
      matched_segments[m].segs[i] = extrapolate_segment(
          seg, positions[i], matches[m].event.position, pose.position,
          proto.order, fs, c);
    }
  }
  const MatrixXd d_p = interpolate_matched_peaks(matched_segments, weights.g,
                                                 channels, n, pre.cfg.interp);

  // residual pipeline
  std::array<MatrixXd, 3> extrapolated;
  std::array<Eigen::RowVectorXd, 3> raw_omnis;
  for (int i = 0; i < 3; ++i) {
    raw_omnis[i] = decomp[i].residual.channels.row(0);
    const Arir ext = extrapolate_residual(
        decomp[i].residual, pre.doas[sel.indices[i]], pose.position, c,
        pre.cfg.interp.residual_limit, pre.cfg.interp.timeshift_window);
    extrapolated[i] = ext.channels;
  }
  const ThirdOctaveBank bank(fs);
  const MatrixXd d_r = interpolate_residuals(extrapolated, raw_omnis,
                                             weights.g, proto.order, fs, bank);

  Arir out;
  out.order = proto.order;
  out.sample_rate = fs;
  out.position = pose.position;
  out.delay_compensated = true;
  out.channels = d_p + d_r;

  if (pose.has_rotation()) {
    const Matrix3d head = rotation_yaw_pitch_roll(pose.yaw_pitch_roll);
    out.channels =
        sh_rotation(head.transpose(), out.order) * out.channels;
  }
  return out;
}

}  // namespace arir
