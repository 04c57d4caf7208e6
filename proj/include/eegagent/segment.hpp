// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "eegagent/edf.hpp"

namespace eegagent {

/// A channel-set × time-interval view onto a recording. Times in seconds.
struct Segment {
  std::string recording_ref;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::vector<std::string> channel_labels;

  double duration_s() const { return t_end_s - t_start_s; }

  /// Segment over every channel of `rec`.
  static Segment whole_channels(const Recording& rec, double t_start_s, double t_end_s,
                                std::string recording_ref = {});
};

/// Zero-copy view of one channel's samples inside a segment.
struct ChannelSlice {
  std::string label;
  double sample_rate_hz = 0.0;
  Eigen::Ref<const Eigen::VectorXd> samples;
};

/// Time tolerance used for boundary comparisons.
inline constexpr double kTimeEpsilon = 1e-9;

/// Throws OutOfRange / UnknownChannel / EmptySegment when the segment
/// invariants do not hold for `rec`.
void validate(const Recording& rec, const Segment& seg);

/// Sample index range [first, last) covered by [t_start, t_end) at `rate`.
/// Both ends are rounded to the nearest sample, so adjacent windows tile
/// the signal without gaps or overlap.
std::pair<Eigen::Index, Eigen::Index> sample_range(double t_start_s, double t_end_s, double rate_hz);

/// Per-channel views in the order of `seg.channel_labels`.
std::vector<ChannelSlice> slice(const Recording& rec, const Segment& seg);

}  // namespace eegagent
