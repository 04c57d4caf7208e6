// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "eegagent/error.hpp"
#include "eegagent/knowledge.hpp"

using namespace eegagent;

namespace {

std::vector<KnowledgeEntry> fixture_entries() {
  return {
      {"e1", "Delta", "Delta activity below 4 Hz reflects slowing in adults.", {{"frequency_band", "delta"}}},
      {"e2", "Alpha", "Posterior alpha rhythm at 8 to 13 Hz attenuates with eye opening.", {}},
      {"e3", "Spikes", "Spikes and sharp waves are epileptiform transients.", {{"event_type", "seiz"}}},
      {"e4", "Muscle", "Muscle artifact adds broadband high frequency power.", {}},
      {"e5", "Elderly", "In elderly patients mild slowing of background rhythms is common.", {}},
  };
}

}  // namespace

TEST(Knowledge, EmbeddingsAreUnitNorm) {
  const auto kb = KnowledgeBase::builtin();
  ASSERT_FALSE(kb.entries().empty());
  for (std::size_t i = 0; i < kb.entries().size(); ++i) EXPECT_NEAR(kb.embedding(i).norm(), 1.0, 1e-6);
}

TEST(Knowledge, HashEmbeddingDeterministic) {
  HashEmbedding h;
  EXPECT_EQ(h.embed("slow waves in the elderly"), h.embed("slow waves in the elderly"));
  EXPECT_EQ(h.embed("Slow, WAVES!"), h.embed("slow waves"));
}

TEST(Knowledge, QueryEqualToBodyScoresOne) {
  KnowledgeBase kb(fixture_entries(), nullptr);
  const auto top = kb.retrieve(fixture_entries()[2].body, 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].entry.id, "e3");
  EXPECT_NEAR(top[0].score, 1.0, 1e-9);
}

TEST(Knowledge, LargeKReturnsEverything) {
  KnowledgeBase kb(fixture_entries(), nullptr);
  EXPECT_EQ(kb.retrieve("alpha", 50).size(), 5u);
}

TEST(Knowledge, RankingMatchesBruteForceCosine) {
  HashEmbedding h;
  KnowledgeBase kb(fixture_entries(), std::make_shared<HashEmbedding>());
  for (const char* query : {"slowing of background", "alpha rhythm", "muscle artifact power", "sharp waves"}) {
    const Eigen::VectorXd q = h.embed(query);
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& e : fixture_entries()) {
      const Eigen::VectorXd v = h.embed(e.body);
      oracle.emplace_back(q.dot(v) / (q.norm() * v.norm()), e.id);
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const auto got = kb.retrieve(query, 5);
    ASSERT_EQ(got.size(), oracle.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].entry.id, oracle[i].second) << query;
      EXPECT_NEAR(got[i].score, oracle[i].first, 1e-12);
    }
  }
}

TEST(Knowledge, IncreasingKKeepsPrefix) {
  const auto kb = KnowledgeBase::builtin();
  const auto all = kb.retrieve("generalized slow waves in an elderly patient", kb.entries().size());
  for (std::size_t k = 1; k <= all.size(); ++k) {
    const auto some = kb.retrieve("generalized slow waves in an elderly patient", k);
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(some[i].entry.id, all[i].entry.id);
    for (const auto& r : some) {
      EXPECT_GE(r.score, -1.0);
      EXPECT_LE(r.score, 1.0);
    }
  }
}

TEST(Knowledge, RetrieveErrors) {
  KnowledgeBase empty({}, nullptr);
  try {
    empty.retrieve("x", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBase);
  }
  KnowledgeBase kb(fixture_entries(), nullptr);
  EXPECT_THROW(kb.retrieve("  ", 1), Error);
  EXPECT_THROW(kb.retrieve("alpha", 0), Error);
}

TEST(Knowledge, AgeBands) {
  const auto kb = KnowledgeBase::builtin();
  const auto& elderly = kb.age_band_note(70);
  EXPECT_EQ(elderly.tags.at("age_band"), "elderly");
  EXPECT_NE(elderly.body.find("slowing of background rhythms"), std::string::npos);
  EXPECT_EQ(kb.age_band_note(30).tags.at("age_band"), "adult");
  EXPECT_EQ(kb.age_band_note(64).tags.at("age_band"), "adult");
  EXPECT_EQ(kb.age_band_note(65).tags.at("age_band"), "elderly");
  EXPECT_EQ(kb.age_band_note(12).tags.at("age_band"), "pediatric");
  EXPECT_EQ(kb.age_band_note(13).tags.at("age_band"), "adolescent");
  EXPECT_EQ(kb.age_band_note(17).tags.at("age_band"), "adolescent");
  EXPECT_EQ(kb.age_band_note(18).tags.at("age_band"), "adult");
  try {
    kb.age_band_note(std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AgeUnknown);
  }
}

TEST(Knowledge, ExactlyOneNotePerBand) {
  const auto kb = KnowledgeBase::builtin();
  for (const char* band : {"pediatric", "adolescent", "adult", "elderly"}) {
    EXPECT_EQ(std::count_if(kb.entries().begin(), kb.entries().end(),
                            [&](const KnowledgeEntry& e) {
                              auto it = e.tags.find("age_band");
                              return it != e.tags.end() && it->second == band;
                            }),
              1)
        << band;
  }
}

TEST(Knowledge, DocumentParsing) {
  const auto e = parse_knowledge_document("---\nid: x1\ntitle: T\ntags: a=b, c = d\n---\n\nBody text.\n");
  EXPECT_EQ(e.id, "x1");
  EXPECT_EQ(e.title, "T");
  EXPECT_EQ(e.tags.at("c"), "d");
  EXPECT_EQ(e.body, "Body text.");
  EXPECT_THROW(parse_knowledge_document("no front matter"), Error);
}

TEST(Knowledge, LoadsShippedDirectory) {
  const auto kb = KnowledgeBase::load_directory(EEGAGENT_SOURCE_DIR "/data/knowledge");
  EXPECT_EQ(kb.entries().size(), KnowledgeBase::builtin().entries().size());
}
