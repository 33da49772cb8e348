#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "arir/doa.hpp"
#include "arir/sh.hpp"
#include "arir/third_octave.hpp"
#include "arir/types.hpp"

namespace arir {

struct AsdmConfig {
  int target_order = 5;
  double decorrelation_start = 0.100;  // seconds
  double tau = 0.005;                  // modulation delay, seconds
  double phi_hat = 50.0 * std::numbers::pi / 180.0;
  int q_max = 5;
};

namespace detail {

// Order-|q| Bessel function of the first kind (series; small q, moderate x).
inline double bessel_j(int nu, double x) {
  double term = 1.0;
  for (int k = 1; k <= nu; ++k) term *= x / (2.0 * k);
  double sum = term;
  const double x2 = -x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= x2 / (static_cast<double>(k) * (k + nu));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace detail

/// Third-octave spectral-envelope correction for an upmixed ARIR: per order
/// and band, the short-time energy is steered to (2n+1) times the reference
/// omni band energy (N3D diffuse-field expectation). Gains are clamped to 1
/// where the reference is silent.
inline Arir spectral_envelope_correction(const Arir& enhanced,
                                         const Eigen::RowVectorXd& reference_omni) {
  if (reference_omni.size() != enhanced.length())
    throw std::invalid_argument("spectral_envelope_correction: length mismatch");

  const long n = enhanced.length();
  const ThirdOctaveBank bank(enhanced.sample_rate);
  const int nb = bank.num_bands();
  const long avg = std::max<long>(
      1, static_cast<long>(std::lround(0.010 * enhanced.sample_rate)));

  std::vector<VectorXd> ref_energy(nb);
  {
    const auto bands = bank.analyze(reference_omni.transpose());
    for (int b = 0; b < nb; ++b)
      ref_energy[b] = moving_average(bands[b].cwiseAbs2(), avg);
  }

  Arir out = enhanced;
  out.channels.setZero();
  for (int nn = 0; nn <= enhanced.order; ++nn) {
    const int c0 = nn * nn;
    const int nch = 2 * nn + 1;
    std::vector<std::vector<VectorXd>> bands(nch);
    for (int k = 0; k < nch; ++k)
      bands[k] = bank.analyze(enhanced.channels.row(c0 + k).transpose());

    for (int b = 0; b < nb; ++b) {
      VectorXd order_energy = VectorXd::Zero(n);
      for (int k = 0; k < nch; ++k)
        order_energy += moving_average(bands[k][b].cwiseAbs2(), avg);

      VectorXd gain(n);
      for (long t = 0; t < n; ++t) {
        const double target = (2.0 * nn + 1.0) * ref_energy[b](t);
        gain(t) = (target > 1e-30 && order_energy(t) > 1e-30)
                      ? std::sqrt(target / order_energy(t))
                      : 1.0;
      }
      gain = moving_average(gain, avg);
      for (int k = 0; k < nch; ++k)
        out.channels.row(c0 + k) +=
            (gain.cwiseProduct(bands[k][b])).transpose();
    }
  }
  return out;
}

/// Phase-modulation decorrelation of the late ARIR part: each channel is
/// replaced by a Bessel-weighted sum of its own delayed copies; m = 0
/// channels pass unchanged, as does everything before the start time
/// (joined by a 5 ms cos^2 crossfade).
inline Arir decorrelate_late(const Arir& arir, const AsdmConfig& cfg = {}) {
  const long n = arir.length();
  const long start = static_cast<long>(
      std::lround(cfg.decorrelation_start * arir.sample_rate));
  Arir out = arir;
  if (start >= n) return out;

  const long fade = static_cast<long>(std::lround(0.005 * arir.sample_rate));
  const long tau_samples =
      static_cast<long>(std::lround(cfg.tau * arir.sample_rate));

  for (int nn = 1; nn <= arir.order; ++nn) {
    for (int m = -nn; m <= nn; ++m) {
      if (m == 0) continue;
      const int ch = acn_index(nn, m);
      Eigen::RowVectorXd late = Eigen::RowVectorXd::Zero(n);
      for (int q = 0; q <= cfg.q_max; ++q) {
        const double coeff =
            detail::bessel_j(q, m * cfg.phi_hat) *
            (std::cos(std::numbers::pi / 2.0 * q) -
             (m > 0 ? 1.0 : -1.0) * std::sin(std::numbers::pi / 2.0 * q));
        if (coeff == 0.0) continue;
        const long shift = q * tau_samples;
        for (long t = shift; t < n; ++t)
          late(t) += coeff * arir.channels(ch, t - shift);
      }
      for (long t = start; t < n; ++t) {
        double w = 1.0;
        if (t - start < fade) {
          const double s =
              std::sin(std::numbers::pi / 2.0 * (t - start + 1) / (fade + 1));
          w = s * s;
        }
        out.channels(ch, t) =
            (1.0 - w) * arir.channels(ch, t) + w * late(t);
      }
    }
  }
  return out;
}

/// ASDM upmix: re-encodes the omni channel along the smoothed pseudo-intensity
/// DOA up to the target order, then applies the spectral-envelope correction.
inline Arir asdm_upmix(const Arir& arir, const AsdmConfig& cfg = {},
                       bool correct = true) {
  arir.validate();
  if (arir.order != 1)
    throw std::invalid_argument("asdm_upmix: input must be first order");

  const DoaTrajectory traj = doa_trajectory(arir);
  const long n = arir.length();
  const int nch = num_sh_channels(cfg.target_order);

  Arir out;
  out.order = cfg.target_order;
  out.sample_rate = arir.sample_rate;
  out.position = arir.position;
  out.delay_compensated = arir.delay_compensated;
  out.channels.resize(nch, n);
  for (long t = 0; t < n; ++t)
    out.channels.col(t) =
        sh_eval(Direction(traj.directions[t]), cfg.target_order) *
        arir.channels(0, t);

  if (!correct) return out;
  return spectral_envelope_correction(out, arir.channels.row(0));
}

/// Full chain: upmix, spectral correction, late decorrelation.
inline Arir asdm_enhance(const Arir& arir, const AsdmConfig& cfg = {}) {
  return decorrelate_late(asdm_upmix(arir, cfg, true), cfg);
}

}  // namespace arir
