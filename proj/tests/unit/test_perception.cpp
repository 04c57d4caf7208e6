// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "eegagent/perception.hpp"
#include "support/synth.hpp"

using namespace eegagent;

TEST(BaseInfo, ElderlyTwentyMinutes) {
  const auto rec = synth::make_recording({"FP1-F3", "F3-C3", "XX1"}, 10.0, 1200.0,
                                         [](std::size_t, double) { return 0.0; }, 70);
  const auto kb = KnowledgeBase::builtin();
  const auto s = base_info(rec, kb);
  nlohmann::json j = s;
  EXPECT_EQ(j["duration"], "1200 s");
  EXPECT_EQ(j["channels"][0]["region"], "left frontal");
  EXPECT_EQ(j["channels"][2]["region"], "unknown");
  EXPECT_EQ(j["age_band"], "elderly");
  ASSERT_TRUE(s.age_note.has_value());
  EXPECT_NE(s.age_note->body.find("slowing of background rhythms"), std::string::npos);
  const auto text = to_text(s);
  EXPECT_NE(text.find("duration: 1200 s"), std::string::npos);
  EXPECT_NE(text.find("FP1-F3  10 Hz  left frontal"), std::string::npos);
}

TEST(BaseInfo, UnknownAge) {
  auto rec = synth::zeros({"CZ"}, 10.0, 5.0);
  rec.patient = {};
  const auto s = base_info(rec, KnowledgeBase::builtin());
  nlohmann::json j = s;
  EXPECT_EQ(j["patient"]["age_years"], "unknown");
  EXPECT_EQ(j["patient"]["name"], "unknown");
  EXPECT_TRUE(j["age_note"].is_null());
  EXPECT_FALSE(s.age_note.has_value());
  EXPECT_NE(to_text(s).find("age: unknown"), std::string::npos);
}
