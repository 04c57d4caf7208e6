// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "eegagent/error.hpp"
#include "eegagent/segment.hpp"
#include "support/synth.hpp"

using namespace eegagent;

namespace {

Recording ramp(double rate, double duration) {
  return synth::make_recording({"C3", "C4"}, rate, duration,
                               [rate](std::size_t c, double t) { return t * rate + 1000.0 * c; });
}

ErrorCode slice_error(const Recording& rec, const Segment& seg) {
  try {
    slice(rec, seg);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "slice succeeded";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Slice, TenSecondsAt250HzIs2500Samples) {
  const auto rec = ramp(250.0, 30.0);
  const auto views = slice(rec, Segment::whole_channels(rec, 5.0, 15.0));
  ASSERT_EQ(views.size(), 2u);
  EXPECT_EQ(views[0].samples.size(), 2500);
  EXPECT_DOUBLE_EQ(views[0].samples[0], 1250.0);
}

TEST(Slice, FullRangeIsSampleIdentical) {
  const auto rec = ramp(256.0, 8.0);
  const auto views = slice(rec, Segment::whole_channels(rec, 0.0, rec.duration_s()));
  for (std::size_t c = 0; c < views.size(); ++c) EXPECT_EQ(views[c].samples, rec.signals[c]);
}

TEST(Slice, AdjacentSlicesConcatenate) {
  const auto rec = ramp(173.0, 12.0);
  for (double mid : {0.3, 1.0, 4.4571, 7.0, 11.49}) {
    const auto a = slice(rec, Segment{"", 0.25, mid, {"C4"}});
    const auto b = slice(rec, Segment{"", mid, 11.5, {"C4"}});
    const auto whole = slice(rec, Segment{"", 0.25, 11.5, {"C4"}});
    Eigen::VectorXd joined(a[0].samples.size() + b[0].samples.size());
    joined << a[0].samples, b[0].samples;
    EXPECT_EQ(joined, whole[0].samples) << mid;
  }
}

TEST(Slice, IsAViewNotACopy) {
  const auto rec = ramp(100.0, 4.0);
  const auto views = slice(rec, Segment{"", 1.0, 2.0, {"C3"}});
  EXPECT_EQ(views[0].samples.data(), rec.signals[0].data() + 100);
}

TEST(Slice, SampleCountMatchesRoundedDuration) {
  const auto rec = ramp(250.0, 20.0);
  for (double t0 : {0.0, 0.4, 3.0}) {
    for (double len : {0.004, 1.0, 2.5, 9.996}) {
      const auto views = slice(rec, Segment{"", t0, t0 + len, {"C3"}});
      EXPECT_EQ(views[0].samples.size(), std::llround(len * 250.0)) << t0 << " " << len;
    }
  }
}

TEST(Slice, Errors) {
  const auto rec = ramp(100.0, 4.0);
  EXPECT_EQ(slice_error(rec, Segment{"", 0.0, 5.0, {"C3"}}), ErrorCode::OutOfRange);
  EXPECT_EQ(slice_error(rec, Segment{"", -1.0, 1.0, {"C3"}}), ErrorCode::OutOfRange);
  EXPECT_EQ(slice_error(rec, Segment{"", 2.0, 2.0, {"C3"}}), ErrorCode::OutOfRange);
  EXPECT_EQ(slice_error(rec, Segment{"", 0.0, 1.0, {"O1"}}), ErrorCode::UnknownChannel);
  EXPECT_EQ(slice_error(rec, Segment{"", 0.0, 1.0, {}}), ErrorCode::EmptySegment);
}
