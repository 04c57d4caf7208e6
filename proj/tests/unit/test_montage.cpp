// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "eegagent/error.hpp"
#include "eegagent/montage.hpp"
#include "support/synth.hpp"

using namespace eegagent;

TEST(Montage, RegionOfDerivations) {
  EXPECT_EQ(region_of("FP1-F3").describe(), "left frontal");
  EXPECT_EQ(region_of("F3-C3").describe(), "left frontal");
  EXPECT_EQ(region_of("CZ").describe(), "midline central");
  EXPECT_EQ(region_of("F4-C4").describe(), "right frontal");
  EXPECT_EQ(region_of("O2").describe(), "right occipital");
  EXPECT_EQ(region_of("FP1-FP2").hemisphere, Hemisphere::Midline);
  EXPECT_EQ(region_of("FP1-FP2").region, Region::Frontal);
}

TEST(Montage, LegacyAliases) {
  EXPECT_EQ(region_of("T3"), region_of("T7"));
  EXPECT_EQ(region_of("T4"), region_of("T8"));
  EXPECT_EQ(region_of("T5"), region_of("P7"));
  EXPECT_EQ(region_of("T6-O2"), region_of("P8-O2"));
}

TEST(Montage, UnknownElectrode) {
  try {
    region_of("X9-F3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownElectrode);
  }
}

TEST(Montage, TableCoversStandardSet) {
  for (const char* e : {"FP1", "FP2", "F3", "F4", "F7", "F8", "C3", "C4", "T3", "T4", "P3", "P4", "T5", "T6", "O1",
                        "O2", "FZ", "CZ", "PZ", "A1", "A2"}) {
    EXPECT_NO_THROW(region_of(e)) << e;
  }
  EXPECT_EQ(RegionMap::standard().version(), 1);
}

TEST(Montage, PairsAreOppositeHemisphereSameRegion) {
  const auto pairs = pairs_in(synth::referential_1020());
  for (const auto& p : pairs) {
    const auto l = region_of(p.left_label), r = region_of(p.right_label);
    EXPECT_EQ(l.hemisphere, Hemisphere::Left);
    EXPECT_EQ(r.hemisphere, Hemisphere::Right);
    EXPECT_EQ(l.region, r.region);
  }
}

TEST(Montage, FullReferentialSetHasEightPairs) {
  // Oracle: every left electrode of the table whose mirror is also in the set.
  const auto& map = RegionMap::standard();
  const auto& labels = synth::referential_1020();
  std::size_t expected = 0;
  for (const auto& l : labels) {
    if (map.electrode(l).hemisphere != Hemisphere::Left) continue;
    if (std::find(labels.begin(), labels.end(), map.mirror(l)) != labels.end()) ++expected;
  }
  const auto pairs = pairs_in(labels);
  EXPECT_EQ(pairs.size(), expected);
  EXPECT_EQ(pairs.size(), 8u);
  EXPECT_EQ(pairs.front(), (SymmetryPair{"FP1", "FP2"}));
  EXPECT_EQ(pairs.back(), (SymmetryPair{"O1", "O2"}));
}

TEST(Montage, PairsInBipolarAndSubsets) {
  EXPECT_EQ(pairs_in({"C3-P3", "C4-P4"}), (SymmetryPairs{{"C3-P3", "C4-P4"}}));
  EXPECT_TRUE(pairs_in({"FP1-F3", "F3-C3", "C3-P3"}).empty());
  EXPECT_TRUE(pairs_in({}).empty());
  EXPECT_EQ(pairs_in(synth::bipolar_banana()).size(), 8u);
}

TEST(Montage, PairsMonotoneUnderInclusion) {
  std::mt19937_64 rng(11);
  const auto& all = synth::bipolar_banana();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> big, small;
    for (const auto& l : all) {
      if (rng() % 2) {
        big.push_back(l);
        if (rng() % 2) small.push_back(l);
      }
    }
    const auto pb = pairs_in(big), ps = pairs_in(small);
    for (const auto& p : ps) EXPECT_NE(std::find(pb.begin(), pb.end(), p), pb.end());
  }
}

TEST(Montage, DescribeLocation) {
  EXPECT_EQ(describe_location({"FP1-F3", "F3-C3"}), "left fronto-central");
  EXPECT_EQ(describe_location({"F4-C4"}), "right fronto-central");
  EXPECT_EQ(describe_location({"FP1-F3", "FP2-F4"}), "bilateral frontal");
}

TEST(Montage, ParseRejectsBadTable) {
  EXPECT_THROW(RegionMap::parse("[regions]\nFP1 = left\n"), Error);
}
