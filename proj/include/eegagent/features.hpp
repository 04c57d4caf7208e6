// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "eegagent/edf.hpp"
#include "eegagent/error.hpp"
#include "eegagent/montage.hpp"
#include "eegagent/segment.hpp"
#include "json.hpp"

namespace eegagent {

enum class Band { Delta = 0, Theta, Alpha, Beta, Gamma };

inline constexpr std::array<Band, 5> kBands = {Band::Delta, Band::Theta, Band::Alpha, Band::Beta,
                                               Band::Gamma};

struct BandEdges {
  double low_hz;
  double high_hz;  // exclusive
};

constexpr BandEdges band_edges(Band b) {
  switch (b) {
    case Band::Delta: return {0.5, 4.0};
    case Band::Theta: return {4.0, 8.0};
    case Band::Alpha: return {8.0, 13.0};
    case Band::Beta: return {13.0, 30.0};
    case Band::Gamma: return {30.0, 45.0};
  }
  return {0.0, 0.0};
}

std::string_view to_string(Band b);

/// Sample rate needed for the gamma band to lie below Nyquist.
inline constexpr double kGammaMinRateHz = 90.0;
/// Longest window accepted by the non-parametric tools.
inline constexpr double kMaxFeatureWindowS = 60.0;
/// Shortest window accepted by compute_psd (two Welch windows).
inline constexpr double kMinPsdWindowS = 2.0;

template <typename Scalar>
struct AmplitudeStatsT {
  Scalar mean_abs{0};
  Scalar rms{0};
  Scalar max{0};
  Scalar min{0};
};

/// Mean absolute value, RMS and extrema of a sample vector.
template <typename Derived>
AmplitudeStatsT<typename Derived::Scalar> amplitude_stats(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) fail(ErrorCode::EmptySegment, "no samples in window");
  const auto n = static_cast<Scalar>(x.size());
  AmplitudeStatsT<Scalar> s;
  s.mean_abs = x.cwiseAbs().sum() / n;
  s.rms = std::sqrt(x.squaredNorm() / n);
  s.max = x.maxCoeff();
  s.min = x.minCoeff();
  return s;
}

template <typename Scalar>
struct Spectrum {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> frequency_hz;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> density;  // one-sided, units²/Hz
  Scalar resolution_hz{0};
  int windows = 0;
};

struct WelchOptions {
  double window_s = 1.0;
  double overlap = 0.5;
  bool detrend = true;
};

/// Removes the least-squares line from `x` in place.
template <typename Scalar>
void remove_linear_trend(Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> x) {
  const Eigen::Index n = x.size();
  if (n < 2) {
    x.setZero();
    return;
  }
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Vec t = Vec::LinSpaced(n, Scalar(0), static_cast<Scalar>(n - 1));
  const Scalar t_mean = t.mean();
  const Scalar x_mean = x.mean();
  const Vec tc = t.array() - t_mean;
  const Scalar slope = tc.dot(x) / tc.squaredNorm();
  x.array() -= x_mean + slope * tc.array();
}

/// Welch estimate: periodic Hann windows, fractional overlap, per-window
/// linear detrend, mean of the modified periodograms. One-sided density.
template <typename Derived>
Spectrum<typename Derived::Scalar> welch_psd(const Eigen::MatrixBase<Derived>& x, double rate_hz,
                                             const WelchOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto nperseg = static_cast<Eigen::Index>(std::llround(opt.window_s * rate_hz));
  if (nperseg < 2 || x.size() < nperseg) {
    fail(ErrorCode::SegmentTooShort, "window shorter than one Welch segment");
  }
  const auto step = std::max<Eigen::Index>(1, nperseg - static_cast<Eigen::Index>(std::llround(opt.overlap * nperseg)));
  const Eigen::Index nwin = 1 + (x.size() - nperseg) / step;
  const Eigen::Index nfreq = nperseg / 2 + 1;

  Vec window(nperseg);
  for (Eigen::Index k = 0; k < nperseg; ++k) {
    window[k] = Scalar(0.5) - Scalar(0.5) * std::cos(Scalar(2 * M_PI) * k / static_cast<Scalar>(nperseg));
  }
  const Scalar scale = Scalar(1) / (static_cast<Scalar>(rate_hz) * window.squaredNorm());

  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  std::vector<Scalar> buffer(static_cast<std::size_t>(nperseg));
  std::vector<std::complex<Scalar>> bins;

  Spectrum<Scalar> out;
  out.density = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(nfreq);
  Vec chunk(nperseg);
  for (Eigen::Index w = 0; w < nwin; ++w) {
    chunk = x.segment(w * step, nperseg);
    if (opt.detrend) remove_linear_trend<Scalar>(chunk);
    chunk.array() *= window.array();
    std::copy(chunk.data(), chunk.data() + nperseg, buffer.begin());
    fft.fwd(bins, buffer);
    for (Eigen::Index k = 0; k < nfreq; ++k) out.density[k] += std::norm(bins[static_cast<std::size_t>(k)]);
  }
  out.density *= scale / static_cast<Scalar>(nwin);
  // Fold negative frequencies into the one-sided estimate.
  const Eigen::Index last = (nperseg % 2 == 0) ? nfreq - 1 : nfreq;
  if (last > 1) out.density.segment(1, last - 1) *= Scalar(2);

  out.resolution_hz = static_cast<Scalar>(rate_hz) / static_cast<Scalar>(nperseg);
  out.frequency_hz = Eigen::Array<Scalar, Eigen::Dynamic, 1>::LinSpaced(nfreq, Scalar(0), out.resolution_hz * (nfreq - 1));
  out.windows = static_cast<int>(nwin);
  return out;
}

template <typename Scalar>
struct BandPowerT {
  std::array<Scalar, 5> power{};  // indexed by Band
  Scalar total{0};                // integral over 0 .. Nyquist
  bool gamma_available = true;
  Scalar peak_frequency_hz{0};    // within 0.5 .. 45 Hz
  Scalar alpha_range_peak_hz{0};  // within 4 .. 13 Hz

  Scalar operator[](Band b) const { return power[static_cast<std::size_t>(b)]; }

  Scalar band_sum() const {
    Scalar s{0};
    for (auto p : power) s += p;
    return s;
  }

  /// Band power relative to the summed band powers; 0 when there is no power.
  Scalar ratio(Band b) const {
    const Scalar s = band_sum();
    return s > Scalar(0) ? (*this)[b] / s : Scalar(0);
  }
};

/// Frequency of the density maximum inside [low, high); 0 if the range is empty.
template <typename Scalar>
Scalar peak_frequency(const Spectrum<Scalar>& spec, double low_hz, double high_hz) {
  Scalar best_f{0}, best_p{-1};
  for (Eigen::Index k = 0; k < spec.density.size(); ++k) {
    const auto f = spec.frequency_hz[k];
    if (f >= low_hz && f < high_hz && spec.density[k] > best_p) {
      best_p = spec.density[k];
      best_f = f;
    }
  }
  return best_p > Scalar(0) ? best_f : Scalar(0);
}

/// Rectangle-rule integral of the density over each clinical band.
template <typename Scalar>
BandPowerT<Scalar> integrate_bands(const Spectrum<Scalar>& spec, double rate_hz) {
  BandPowerT<Scalar> out;
  out.gamma_available = rate_hz >= kGammaMinRateHz;
  out.total = spec.density.sum() * spec.resolution_hz;
  for (auto b : kBands) {
    if (b == Band::Gamma && !out.gamma_available) continue;
    const auto e = band_edges(b);
    Scalar p{0};
    for (Eigen::Index k = 0; k < spec.density.size(); ++k) {
      const auto f = spec.frequency_hz[k];
      if (f >= e.low_hz && f < e.high_hz) p += spec.density[k];
    }
    out.power[static_cast<std::size_t>(b)] = p * spec.resolution_hz;
  }
  out.peak_frequency_hz = peak_frequency(spec, 0.5, 45.0);
  out.alpha_range_peak_hz = peak_frequency(spec, 4.0, 13.0);
  return out;
}

template <typename Derived>
BandPowerT<typename Derived::Scalar> band_powers(const Eigen::MatrixBase<Derived>& x, double rate_hz,
                                                 const WelchOptions& opt = {}) {
  return integrate_bands(welch_psd(x, rate_hz, opt), rate_hz);
}

/// Pearson correlation; nullopt when either input has zero variance.
template <typename DerivedA, typename DerivedB>
std::optional<typename DerivedA::Scalar> pearson(const Eigen::MatrixBase<DerivedA>& a,
                                                 const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "pearson: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const auto ac = (a.array() - a.mean()).matrix().eval();
  const auto bc = (b.array() - b.mean()).matrix().eval();
  const Scalar saa = ac.squaredNorm();
  const Scalar sbb = bc.squaredNorm();
  if (saa == Scalar(0) || sbb == Scalar(0)) return std::nullopt;
  return ac.dot(bc) / std::sqrt(saa * sbb);
}

// Segment-level tools. All enforce the 60 s cap.

struct ChannelAmplitude {
  std::string label;
  AmplitudeStatsT<double> stats;
};

struct AmplitudeStats {
  std::vector<ChannelAmplitude> channels;
};

struct ChannelBandPower {
  std::string label;
  BandPowerT<double> bands;
};

struct BandPowers {
  std::vector<ChannelBandPower> channels;
  bool gamma_available = true;
};

struct PairCorrelation {
  SymmetryPair pair;
  std::optional<double> r;  // nullopt: a channel is constant
};

struct SymmetryScores {
  std::vector<PairCorrelation> pairs;
};

AmplitudeStats compute_amplitude(const Recording& rec, const Segment& seg);
BandPowers compute_psd(const Recording& rec, const Segment& seg);
SymmetryScores compute_symmetry(const Recording& rec, const Segment& seg);

void to_json(nlohmann::json& j, const AmplitudeStats& v);
void to_json(nlohmann::json& j, const BandPowers& v);
void to_json(nlohmann::json& j, const SymmetryScores& v);

}  // namespace eegagent
