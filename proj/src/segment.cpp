// SPDX-License-Identifier: Apache-2.0
#include "eegagent/segment.hpp"

#include <algorithm>
#include <cmath>

#include "eegagent/error.hpp"

namespace eegagent {

Segment Segment::whole_channels(const Recording& rec, double t_start_s, double t_end_s,
                                std::string recording_ref) {
  return Segment{std::move(recording_ref), t_start_s, t_end_s, rec.channel_labels()};
}

void validate(const Recording& rec, const Segment& seg) {
  if (seg.channel_labels.empty()) fail(ErrorCode::EmptySegment, "segment selects no channels");
  const double duration = rec.duration_s();
  if (!(seg.t_start_s >= -kTimeEpsilon) || !(seg.t_end_s <= duration + kTimeEpsilon) ||
      !(seg.t_start_s < seg.t_end_s)) {
    fail(ErrorCode::OutOfRange, "segment [" + std::to_string(seg.t_start_s) + ", " +
                                    std::to_string(seg.t_end_s) + "] outside recording of " +
                                    std::to_string(duration) + " s");
  }
  for (const auto& label : seg.channel_labels) {
    if (!rec.channel_index(label)) fail(ErrorCode::UnknownChannel, "unknown channel '" + label + "'");
  }
}

std::pair<Eigen::Index, Eigen::Index> sample_range(double t_start_s, double t_end_s, double rate_hz) {
  auto first = static_cast<Eigen::Index>(std::llround(t_start_s * rate_hz));
  auto last = static_cast<Eigen::Index>(std::llround(t_end_s * rate_hz));
  return {first, last};
}

std::vector<ChannelSlice> slice(const Recording& rec, const Segment& seg) {
  validate(rec, seg);
  std::vector<ChannelSlice> out;
  out.reserve(seg.channel_labels.size());
  for (const auto& label : seg.channel_labels) {
    const auto idx = *rec.channel_index(label);
    const auto& signal = rec.signals[idx];
    const double rate = rec.channels[idx].sample_rate_hz;
    auto [first, last] = sample_range(seg.t_start_s, seg.t_end_s, rate);
    first = std::clamp<Eigen::Index>(first, 0, signal.size());
    last = std::clamp<Eigen::Index>(last, first, signal.size());
    out.push_back(ChannelSlice{label, rate, signal.segment(first, last - first)});
  }
  return out;
}

}  // namespace eegagent
