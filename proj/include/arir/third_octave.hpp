#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "arir/dsp.hpp"
#include "arir/types.hpp"

namespace arir {

/// Perfectly reconstructing zero-phase one-third-octave bank. The band
/// magnitude responses form a partition of unity on a log-frequency axis
/// (raised-cosine crossovers between adjacent base-2 third-octave centers),
/// so the band signals of any input sum back to the input exactly.
class ThirdOctaveBank {
 public:
  ThirdOctaveBank(double sample_rate, double f_lo = 50.0)
      : sample_rate_(sample_rate) {
    const double f_hi = 0.45 * sample_rate;
    for (int k = -40; k <= 40; ++k) {
      const double fc = 1000.0 * std::pow(2.0, k / 3.0);
      if (fc >= f_lo && fc <= f_hi) centers_.push_back(fc);
    }
    if (centers_.size() < 2)
      throw std::invalid_argument("ThirdOctaveBank: band range too small");
  }

  int num_bands() const { return static_cast<int>(centers_.size()); }
  double center(int b) const { return centers_[b]; }

  /// Splits x into num_bands() zero-phase band signals of equal length.
  std::vector<VectorXd> analyze(const Eigen::Ref<const VectorXd>& x) const {
    const long n = x.size();
    const long nfft = next_pow2(2 * n);
    const Eigen::VectorXcd spec = rfft(x, nfft);
    const long nbins = spec.size();

    std::vector<VectorXd> bands(centers_.size());
    for (size_t b = 0; b < centers_.size(); ++b) {
      Eigen::VectorXcd masked(nbins);
      for (long k = 0; k < nbins; ++k) {
        const double f = static_cast<double>(k) * sample_rate_ / nfft;
        masked(k) = spec(k) * weight(static_cast<int>(b), f);
      }
      bands[b] = irfft(masked, nfft).head(n);
    }
    return bands;
  }

  /// Band magnitude weight at frequency f; sums to 1 over bands.
  double weight(int b, double f) const {
    const int nb = num_bands();
    const double c = centers_[b];
    const double lf = (f > 0.0) ? std::log2(f) : -60.0;
    const double lc = std::log2(c);
    if (f <= 0.0) return b == 0 ? 1.0 : 0.0;
    if (b == 0 && f <= c) return 1.0;
    if (b == nb - 1 && f >= c) return 1.0;
    if (f <= c) {
      if (b == 0) return 1.0;
      const double lp = std::log2(centers_[b - 1]);
      if (lf <= lp) return 0.0;
      const double s = std::sin(std::numbers::pi / 2.0 * (lf - lp) / (lc - lp));
      return s * s;
    }
    if (b == nb - 1) return 1.0;
    const double ln = std::log2(centers_[b + 1]);
    if (lf >= ln) return 0.0;
    const double s = std::cos(std::numbers::pi / 2.0 * (lf - lc) / (ln - lc));
    return s * s;
  }

 private:
  double sample_rate_;
  std::vector<double> centers_;
};

}  // namespace arir
