// SPDX-License-Identifier: Apache-2.0
#include "eegagent/features.hpp"

namespace eegagent {
namespace {

void check_window(const Segment& seg) {
  if (seg.duration_s() > kMaxFeatureWindowS + kTimeEpsilon) {
    fail(ErrorCode::WindowTooLong, "window of " + std::to_string(seg.duration_s()) +
                                       " s exceeds the 60 s limit");
  }
}

nlohmann::json correlation(const std::optional<double>& r) {
  return r ? nlohmann::json(*r) : nlohmann::json("undefined");
}

}  // namespace

std::string_view to_string(Band b) {
  switch (b) {
    case Band::Delta: return "delta";
    case Band::Theta: return "theta";
    case Band::Alpha: return "alpha";
    case Band::Beta: return "beta";
    case Band::Gamma: return "gamma";
  }
  return "";
}

AmplitudeStats compute_amplitude(const Recording& rec, const Segment& seg) {
  check_window(seg);
  auto slices = slice(rec, seg);
  AmplitudeStats out;
  for (const auto& s : slices) {
    if (s.samples.size() == 0) fail(ErrorCode::EmptySegment, "segment holds no samples on '" + s.label + "'");
    out.channels.push_back({s.label, amplitude_stats(s.samples)});
  }
  return out;
}

BandPowers compute_psd(const Recording& rec, const Segment& seg) {
  check_window(seg);
  if (seg.duration_s() < kMinPsdWindowS - kTimeEpsilon) {
    fail(ErrorCode::SegmentTooShort, "compute_psd needs at least 2 s");
  }
  auto slices = slice(rec, seg);
  BandPowers out;
  for (const auto& s : slices) {
    auto bands = band_powers(s.samples, s.sample_rate_hz);
    out.gamma_available = out.gamma_available && bands.gamma_available;
    out.channels.push_back({s.label, bands});
  }
  return out;
}

SymmetryScores compute_symmetry(const Recording& rec, const Segment& seg) {
  check_window(seg);
  auto pairs = pairs_in(seg.channel_labels);
  if (pairs.empty()) fail(ErrorCode::NoPairs, "no homologous left/right pair among the selected channels");
  auto slices = slice(rec, seg);
  auto find = [&](const std::string& label) -> const ChannelSlice& {
    for (const auto& s : slices) {
      if (s.label == label) return s;
    }
    fail(ErrorCode::UnknownChannel, label);
  };
  SymmetryScores out;
  for (const auto& p : pairs) {
    const auto& left = find(p.left_label);
    const auto& right = find(p.right_label);
    if (left.sample_rate_hz != right.sample_rate_hz) {
      fail(ErrorCode::InvalidArgument, "pair " + p.left_label + "/" + p.right_label + " has mismatched sample rates");
    }
    out.pairs.push_back({p, pearson(left.samples, right.samples)});
  }
  return out;
}

void to_json(nlohmann::json& j, const AmplitudeStats& v) {
  j = nlohmann::json::array();
  for (const auto& c : v.channels) {
    j.push_back({{"channel", c.label},
                 {"mean_abs_uv", c.stats.mean_abs},
                 {"rms_uv", c.stats.rms},
                 {"max_uv", c.stats.max},
                 {"min_uv", c.stats.min}});
  }
}

void to_json(nlohmann::json& j, const BandPowers& v) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& c : v.channels) {
    nlohmann::json bands = nlohmann::json::object();
    for (auto b : kBands) {
      if (b == Band::Gamma && !c.bands.gamma_available) continue;
      bands[std::string(to_string(b))] = c.bands[b];
    }
    channels.push_back({{"channel", c.label},
                        {"bands_uv2", bands},
                        {"total_uv2", c.bands.total},
                        {"peak_frequency_hz", c.bands.peak_frequency_hz},
                        {"alpha_range_peak_hz", c.bands.alpha_range_peak_hz}});
  }
  j = {{"gamma_available", v.gamma_available}, {"channels", channels}};
}

void to_json(nlohmann::json& j, const SymmetryScores& v) {
  j = nlohmann::json::array();
  for (const auto& p : v.pairs) {
    j.push_back({{"left", p.pair.left_label}, {"right", p.pair.right_label}, {"r", correlation(p.r)}});
  }
}

}  // namespace eegagent
