// SPDX-License-Identifier: Apache-2.0
// Synthetic recordings and brute-force reference computations for tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eegagent/edf.hpp"

namespace synth {

using eegagent::Recording;

inline constexpr double kPi = 3.14159265358979323846;

/// Signal generator: (channel index, time in seconds) → µV.
using Generator = std::function<double(std::size_t, double)>;

/// A recording whose samples come from `gen`, evaluated at k / rate.
inline Recording make_recording(const std::vector<std::string>& labels, double rate_hz, double duration_s,
                                const Generator& gen, std::optional<int> age = std::nullopt) {
  Recording rec;
  rec.patient.id = "SYN-001";
  rec.patient.name = "Synthetic";
  rec.patient.sex = eegagent::Sex::Female;
  rec.patient.age_years = age;
  rec.recording_info = "synthetic";
  rec.start = {2021, 3, 4, 10, 20, 30};
  rec.record_duration_s = 1.0;
  rec.num_records = static_cast<int>(std::llround(duration_s));
  const auto n = static_cast<Eigen::Index>(std::llround(duration_s * rate_hz));
  for (std::size_t c = 0; c < labels.size(); ++c) {
    eegagent::ChannelInfo ch;
    ch.label = labels[c];
    ch.sample_rate_hz = rate_hz;
    ch.samples_per_record = static_cast<int>(std::llround(rate_hz));
    rec.channels.push_back(ch);
    Eigen::VectorXd x(n);
    for (Eigen::Index k = 0; k < n; ++k) x[k] = gen(c, static_cast<double>(k) / rate_hz);
    rec.signals.push_back(std::move(x));
  }
  return rec;
}

inline Recording zeros(const std::vector<std::string>& labels, double rate_hz, double duration_s) {
  return make_recording(labels, rate_hz, duration_s, [](std::size_t, double) { return 0.0; });
}

inline double sine(double t, double freq_hz, double amplitude, double phase = 0.0) {
  return amplitude * std::sin(2.0 * kPi * freq_hz * t + phase);
}

/// Low-amplitude posterior-dominant background: 10 Hz alpha plus 20 Hz beta.
inline double background(std::size_t channel, double t) {
  const double phase = 0.7 * static_cast<double>(channel);
  return sine(t, 10.0, 12.0, phase) + sine(t, 20.0, 5.0, 2.0 * phase);
}

/// 6 Hz, 200 µV rhythmic burst: trips the baseline seizure rule.
inline double seizure_burst(double t) { return sine(t, 6.0, 200.0); }

/// 2 Hz, 150 µV rhythm: trips the baseline slowing rule.
inline double slow_wave(double t) { return sine(t, 2.0, 150.0); }

inline Eigen::VectorXd white_noise(Eigen::Index n, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  Eigen::VectorXd x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

/// Replaces every sample by its value on the channel's digital grid, so that
/// an EDF round trip reproduces the signal exactly.
inline void quantize(Recording& rec) {
  for (std::size_t c = 0; c < rec.channels.size(); ++c) {
    const auto& ch = rec.channels[c];
    for (auto& v : rec.signals[c]) {
      auto d = std::llround((v - ch.physical_min) / ch.gain() + ch.digital_min);
      d = std::clamp<long long>(d, ch.digital_min, ch.digital_max);
      v = eegagent::to_physical(ch, static_cast<int>(d));
    }
  }
}

// Reference computations written in the plainest possible form.

struct RefAmplitude {
  double mean_abs, rms, max, min;
};

inline RefAmplitude ref_amplitude(const std::vector<double>& x) {
  double abs_sum = 0.0, sq_sum = 0.0, mx = x.at(0), mn = x.at(0);
  for (double v : x) {
    abs_sum += std::fabs(v);
    sq_sum += v * v;
    if (v > mx) mx = v;
    if (v < mn) mn = v;
  }
  const double n = static_cast<double>(x.size());
  return {abs_sum / n, std::sqrt(sq_sum / n), mx, mn};
}

/// Pearson r from the covariance formula with two-pass means.
inline double ref_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

inline double ref_variance(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

inline std::vector<double> to_std(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::vector<double>(x.data(), x.data() + x.size());
}

inline const std::vector<std::string>& bipolar_banana() {
  static const std::vector<std::string> labels = {
      "FP1-F7", "F7-T7", "T7-P7", "P7-O1", "FP2-F8", "F8-T8", "T8-P8", "P8-O2", "FP1-F3", "F3-C3",
      "C3-P3",  "P3-O1", "FP2-F4", "F4-C4", "C4-P4", "P4-O2", "FZ-CZ", "CZ-PZ"};
  return labels;
}

inline const std::vector<std::string>& referential_1020() {
  static const std::vector<std::string> labels = {"FP1", "FP2", "F7", "F3", "FZ", "F4", "F8", "T7", "C3", "CZ",
                                                  "C4",  "T8",  "P7", "P3", "PZ", "P4", "P8", "O1", "O2"};
  return labels;
}

}  // namespace synth
