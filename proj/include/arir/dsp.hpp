#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "arir/types.hpp"

namespace arir {

inline long next_pow2(long n) {
  long p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Real-to-complex FFT of size nfft (input zero-padded or truncated).
inline Eigen::VectorXcd rfft(const Eigen::Ref<const VectorXd>& x, long nfft) {
  std::vector<double> in(static_cast<size_t>(nfft), 0.0);
  const long n = std::min<long>(x.size(), nfft);
  std::copy_n(x.data(), n, in.data());
  Eigen::VectorXcd out(nfft / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(
      static_cast<int>(nfft), in.data(),
      reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return out;
}

/// Inverse of rfft, normalized by 1/nfft.
inline VectorXd irfft(const Eigen::VectorXcd& spectrum, long nfft) {
  Eigen::VectorXcd in = spectrum;
  VectorXd out(nfft);
  fftw_plan plan = fftw_plan_dft_c2r_1d(
      static_cast<int>(nfft), reinterpret_cast<fftw_complex*>(in.data()),
      out.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  out /= static_cast<double>(nfft);
  return out;
}

/// Full linear convolution via FFT; output length |x| + |h| - 1.
inline VectorXd fft_convolve(const Eigen::Ref<const VectorXd>& x,
                             const Eigen::Ref<const VectorXd>& h) {
  const long n = x.size() + h.size() - 1;
  const long nfft = next_pow2(n);
  Eigen::VectorXcd xs = rfft(x, nfft);
  Eigen::VectorXcd hs = rfft(h, nfft);
  xs.array() *= hs.array();
  return irfft(xs, nfft).head(n);
}

/// Second-order Butterworth biquad sections via bilinear transform.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  static Biquad lowpass(double fc, double fs) {
    const double k = std::tan(std::numbers::pi * fc / fs);
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
    Biquad q;
    q.b0 = k * k * norm;
    q.b1 = 2.0 * q.b0;
    q.b2 = q.b0;
    q.a1 = 2.0 * (k * k - 1.0) * norm;
    q.a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
    return q;
  }
  static Biquad highpass(double fc, double fs) {
    const double k = std::tan(std::numbers::pi * fc / fs);
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
    Biquad q;
    q.b0 = norm;
    q.b1 = -2.0 * norm;
    q.b2 = norm;
    q.a1 = 2.0 * (k * k - 1.0) * norm;
    q.a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
    return q;
  }

  void apply_inplace(VectorXd& x) const {
    double z1 = 0.0, z2 = 0.0;
    for (long i = 0; i < x.size(); ++i) {
      const double in = x(i);
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      x(i) = out;
    }
  }
};

/// Zero-phase forward-backward filtering through a biquad cascade,
/// with 512-sample zero padding on both sides against edge transients.
inline VectorXd filtfilt(const std::vector<Biquad>& sections,
                         const Eigen::Ref<const VectorXd>& x,
                         long pad = 512) {
  VectorXd y = VectorXd::Zero(x.size() + 2 * pad);
  y.segment(pad, x.size()) = x;
  for (const auto& s : sections) s.apply_inplace(y);
  y.reverseInPlace();
  for (const auto& s : sections) s.apply_inplace(y);
  y.reverseInPlace();
  return y.segment(pad, x.size());
}

/// Centered moving average of given length (zero-padded ends).
inline VectorXd moving_average(const Eigen::Ref<const VectorXd>& x, long len) {
  if (len <= 1) return x;
  const long n = x.size();
  VectorXd cum = VectorXd::Zero(n + 1);
  for (long i = 0; i < n; ++i) cum(i + 1) = cum(i) + x(i);
  VectorXd y(n);
  const long half = len / 2;
  for (long i = 0; i < n; ++i) {
    const long lo = std::max<long>(0, i - half);
    const long hi = std::min<long>(n, i - half + len);
    y(i) = (cum(hi) - cum(lo)) / static_cast<double>(hi - lo);
  }
  return y;
}

/// Centered FIR smoothing with a unit-sum Hamming window.
inline VectorXd hamming_average(const Eigen::Ref<const VectorXd>& x, long len) {
  if (len <= 1) return x;
  VectorXd w(len);
  for (long i = 0; i < len; ++i)
    w(i) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1));
  w /= w.sum();
  const long n = x.size();
  const long half = len / 2;
  VectorXd y = VectorXd::Zero(n);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long j = 0; j < len; ++j) {
      const long k = i + j - half;
      if (k >= 0 && k < n) acc += w(j) * x(k);
    }
    y(i) = acc;
  }
  return y;
}

constexpr int kSincTaps = 32;

/// 32-tap Hann-windowed sinc for a purely fractional delay in [0, 1).
inline VectorXd fractional_delay_kernel(double frac, int taps = kSincTaps) {
  VectorXd h(taps);
  const double center = taps / 2.0 - 1.0 + frac;
  for (int i = 0; i < taps; ++i) {
    const double t = i - center;
    const double sinc = (t == 0.0) ? 1.0
                                   : std::sin(std::numbers::pi * t) /
                                         (std::numbers::pi * t);
    const double win =
        0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * (i - center) /
                              static_cast<double>(taps)));
    h(i) = sinc * std::max(0.0, win);
  }
  return h;
}

/// Delays x by `delay` samples (may be negative or fractional); output
/// keeps the input length.
inline VectorXd fractional_delay(const Eigen::Ref<const VectorXd>& x,
                                 double delay) {
  const long n = x.size();
  double ipart_d = std::floor(delay);
  const double frac = delay - ipart_d;
  const long ipart = static_cast<long>(ipart_d);
  VectorXd out = VectorXd::Zero(n);
  if (frac == 0.0) {
    for (long i = 0; i < n; ++i) {
      const long j = i - ipart;
      if (j >= 0 && j < n) out(i) = x(j);
    }
    return out;
  }
  const VectorXd h = fractional_delay_kernel(frac);
  const long offset = kSincTaps / 2 - 1;
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < kSincTaps; ++k) {
      const long j = i - ipart + offset - k;
      if (j >= 0 && j < n) acc += h(k) * x(j);
    }
    out(i) = acc;
  }
  return out;
}

/// Adds a unit impulse delayed by a (fractional) sample offset, scaled by
/// gain, into an output buffer.
inline void add_sinc_impulse(Eigen::Ref<Eigen::RowVectorXd> out, double delay,
                             double gain) {
  const double ipart_d = std::floor(delay);
  const double frac = delay - ipart_d;
  const long ipart = static_cast<long>(ipart_d);
  const VectorXd h = fractional_delay_kernel(frac);
  const long offset = kSincTaps / 2 - 1;
  for (int k = 0; k < kSincTaps; ++k) {
    const long j = ipart - offset + k;
    if (j >= 0 && j < out.size()) out(j) += gain * h(k);
  }
}

}  // namespace arir
