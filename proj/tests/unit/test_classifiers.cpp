// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "eegagent/classifiers.hpp"
#include "eegagent/error.hpp"
#include "support/synth.hpp"

using namespace eegagent;

namespace {

BandPowerT<double> bands_from_ratios(std::array<double, 5> ratios, double total = 100.0) {
  BandPowerT<double> b;
  for (std::size_t i = 0; i < 5; ++i) b.power[i] = ratios[i] * total;
  b.total = total;
  return b;
}

AmplitudeStatsT<double> amp_with_rms(double rms) { return {rms, rms, rms, -rms}; }

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ToolTable, GranularitiesFollowTheToolTable) {
  struct Row {
    const char* name;
    TimeGranularity time;
    SpaceGranularity space;
    ToolKind kind;
  };
  const Row rows[] = {
      {"baseInfo", TimeGranularity::Full, SpaceGranularity::Whole, ToolKind::NonParametric},
      {"normalAbnormal", TimeGranularity::Full, SpaceGranularity::Whole, ToolKind::Parametric},
      {"eyemMuscle", TimeGranularity::OneSecond, SpaceGranularity::SingleChannel, ToolKind::Parametric},
      {"seizArtiBckg", TimeGranularity::OneSecond, SpaceGranularity::SingleChannel, ToolKind::Parametric},
      {"seizNormal", TimeGranularity::OneSecond, SpaceGranularity::SingleChannel, ToolKind::Parametric},
      {"slowSeizBckg", TimeGranularity::TenSeconds, SpaceGranularity::Whole, ToolKind::Parametric},
      {"compute_amplitude", TimeGranularity::UpTo60s, SpaceGranularity::Whole, ToolKind::NonParametric},
      {"compute_psd", TimeGranularity::UpTo60s, SpaceGranularity::Whole, ToolKind::NonParametric},
      {"compute_symmetry", TimeGranularity::UpTo60s, SpaceGranularity::LrPair, ToolKind::NonParametric},
  };
  EXPECT_EQ(tool_table().size(), std::size(rows));
  for (const auto& r : rows) {
    const auto& t = tool_spec(r.name);
    EXPECT_EQ(t.time, r.time) << r.name;
    EXPECT_EQ(t.space, r.space) << r.name;
    EXPECT_EQ(t.kind, r.kind) << r.name;
    if (t.parametric()) {
      EXPECT_FALSE(t.labels.empty());
      EXPECT_NE(std::find(t.labels.begin(), t.labels.end(), t.background_label), t.labels.end());
    }
  }
  EXPECT_EQ(tool_spec("slowSeizBckg").labels, (std::vector<std::string>{"slow", "seiz", "bckg"}));
  EXPECT_EQ(tool_spec("eyemMuscle").labels, (std::vector<std::string>{"eyem", "muscle", "none"}));
  EXPECT_EQ(error_of([] { tool_spec("deepMagic"); }), ErrorCode::UnknownTool);
}

TEST(Softmax, Basics) {
  Eigen::Vector3d z(1.0, 2.0, 3.0);
  const Eigen::Vector3d p = softmax(z);
  const double d = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / d, 1e-15);
  EXPECT_NEAR(p[2], std::exp(3.0) / d, 1e-15);
  const Eigen::Vector3d big = softmax(Eigen::Vector3d(1000.0, 1000.0, 0.0));
  EXPECT_NEAR(big[0], 0.5, 1e-12);
}

TEST(BaselineRules, DeltaRatioPointNineMeansSlow) {
  const BaselineConfig cfg;
  const auto bands = bands_from_ratios({0.9, 0.025, 0.025, 0.025, 0.025});
  const auto amp = amp_with_rms(cfg.amplitude_ref_uv);
  const auto p = baseline_rules("slowSeizBckg", bands, amp, {}, cfg);
  // By hand: slow = 0.9, seiz = (0.025 + 0.025)/2 * e^0, bckg = (0.025 + 0.025)/2.
  const double es = std::exp(10.0 * 0.9), ez = std::exp(10.0 * 0.025), eb = std::exp(10.0 * 0.025);
  EXPECT_NEAR(p.at("slow"), es / (es + ez + eb), 1e-12);
  EXPECT_GT(p.at("slow"), 0.5);
  EXPECT_EQ(p.argmax(), "slow");
}

TEST(BaselineRules, GammaRatioPointEightMeansMuscle) {
  const auto bands = bands_from_ratios({0.05, 0.05, 0.05, 0.05, 0.8});
  const auto p = baseline_rules("eyemMuscle", bands, amp_with_rms(20.0), {true, 0.1});
  const double em = std::exp(10.0 * 0.05 * 0.1), mu = std::exp(10.0 * 0.8), no = std::exp(10.0 * 0.05);
  EXPECT_NEAR(p.at("muscle"), mu / (em + mu + no), 1e-12);
  EXPECT_EQ(p.argmax(), "muscle");
}

TEST(BaselineRules, EqualRatiosGiveUniform) {
  const BaselineConfig cfg;
  const auto bands = bands_from_ratios({0.2, 0.2, 0.2, 0.2, 0.2});
  const auto amp = amp_with_rms(cfg.amplitude_ref_uv);
  const RuleContext ctx{true, 1.0};
  for (const auto& t : tool_table()) {
    if (!t.parametric()) continue;
    const auto p = baseline_rules(t.name, bands, amp, ctx, cfg);
    for (Eigen::Index i = 0; i < p.values.size(); ++i) {
      EXPECT_NEAR(p.values[i], 1.0 / static_cast<double>(p.values.size()), 1e-12) << t.name;
    }
  }
}

TEST(BaselineRules, NonParametricToolRejected) {
  EXPECT_EQ(error_of([] { baseline_rules("compute_psd", {}, {}); }), ErrorCode::UnknownTool);
}

TEST(BaselineBackend, SlowRhythmIsSlow) {
  const auto rec = synth::make_recording(synth::bipolar_banana(), 250.0, 20.0,
                                         [](std::size_t, double t) { return synth::slow_wave(t); });
  BaselineBackend backend;
  const auto out = classify(tool_spec("slowSeizBckg"), rec, Segment::whole_channels(rec, 0, 10), backend);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].channel, "all");
  EXPECT_EQ(out[0].probs.argmax(), "slow");
}

TEST(BaselineBackend, SilenceIsBackground) {
  const auto rec = synth::zeros({"C3", "C4"}, 250.0, 10.0);
  BaselineBackend backend;
  const auto out = classify(tool_spec("seizNormal"), rec, Segment::whole_channels(rec, 2, 3), backend);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& cp : out) EXPECT_EQ(cp.probs.argmax(), "normal");
  EXPECT_EQ(classify(tool_spec("slowSeizBckg"), rec, Segment::whole_channels(rec, 0, 10), backend)[0].probs.argmax(),
            "bckg");
}

TEST(BaselineBackend, NormalBackgroundIsBackground) {
  const auto rec = synth::make_recording(synth::bipolar_banana(), 250.0, 10.0, synth::background);
  BaselineBackend backend;
  EXPECT_EQ(classify(tool_spec("slowSeizBckg"), rec, Segment::whole_channels(rec, 0, 10), backend)[0].probs.argmax(),
            "bckg");
  for (const auto& cp : classify(tool_spec("seizNormal"), rec, Segment::whole_channels(rec, 3, 4), backend)) {
    EXPECT_EQ(cp.probs.argmax(), "normal") << cp.channel;
  }
}

TEST(BaselineBackend, FocalBurstIsSeizureOnItsChannelOnly) {
  const auto& labels = synth::bipolar_banana();
  const auto f4c4 = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), "F4-C4") - labels.begin());
  const auto rec = synth::make_recording(labels, 250.0, 10.0, [&](std::size_t c, double t) {
    return synth::background(c, t) + (c == f4c4 && t < 1.0 ? synth::seizure_burst(t) : 0.0);
  });
  BaselineBackend backend;
  const auto fine = classify(tool_spec("seizNormal"), rec, Segment::whole_channels(rec, 0, 1), backend);
  for (const auto& cp : fine) EXPECT_EQ(cp.probs.argmax(), cp.channel == "F4-C4" ? "seiz" : "normal") << cp.channel;
  const auto coarse = classify(tool_spec("slowSeizBckg"), rec, Segment::whole_channels(rec, 0, 10), backend);
  EXPECT_EQ(coarse[0].probs.argmax(), "seiz");
  const auto later = classify(tool_spec("seizNormal"), rec, Segment::whole_channels(rec, 1, 2), backend);
  for (const auto& cp : later) EXPECT_EQ(cp.probs.argmax(), "normal") << cp.channel;
}

TEST(BaselineBackend, OutputsAreDistributionsAndDeterministic) {
  std::mt19937_64 rng(99);
  auto rec = synth::zeros(synth::bipolar_banana(), 128.0, 30.0);
  for (auto& s : rec.signals) s = synth::white_noise(s.size(), 30.0, rng);
  BaselineBackend backend;
  for (const auto& t : tool_table()) {
    if (!t.parametric()) continue;
    Segment seg = Segment::whole_channels(rec, 0, 30);
    if (t.time == TimeGranularity::OneSecond) seg = Segment::whole_channels(rec, 4, 5);
    if (t.time == TimeGranularity::TenSeconds) seg = Segment::whole_channels(rec, 10, 20);
    const auto a = classify(t, rec, seg, backend);
    const auto b = classify(t, rec, seg, backend);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_TRUE(a[i].probs.is_distribution()) << t.name;
      EXPECT_EQ(a[i].probs, b[i].probs);
    }
  }
}

TEST(BaselineBackend, RatioRuleArgmaxScaleInvariant) {
  std::mt19937_64 rng(5);
  auto rec = synth::zeros({"FP1", "FP2", "C3"}, 256.0, 4.0);
  for (auto& s : rec.signals) s = synth::white_noise(s.size(), 10.0, rng);
  BaselineBackend backend;
  const auto& tool = tool_spec("eyemMuscle");
  const auto base = classify(tool, rec, Segment::whole_channels(rec, 1, 2), backend);
  for (double c : {0.01, 3.0, 250.0}) {
    auto scaled = rec;
    for (auto& s : scaled.signals) s *= c;
    const auto out = classify(tool, scaled, Segment::whole_channels(scaled, 1, 2), backend);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].probs.argmax(), base[i].probs.argmax()) << c;
  }
}

TEST(Granularity, Checks) {
  const auto rec = synth::zeros({"C3"}, 250.0, 25.0);
  BaselineBackend b;
  const auto& one = tool_spec("seizNormal");
  EXPECT_NO_THROW(classify(one, rec, Segment{"", 0.0, 1.0, {"C3"}}, b));
  EXPECT_NO_THROW(classify(one, rec, Segment{"", 0.0, 1.004, {"C3"}}, b));
  EXPECT_EQ(error_of([&] { classify(one, rec, Segment{"", 0.0, 1.5, {"C3"}}, b); }), ErrorCode::GranularityMismatch);
  const auto& ten = tool_spec("slowSeizBckg");
  EXPECT_NO_THROW(classify(ten, rec, Segment{"", 10.0, 20.0, {"C3"}}, b));
  EXPECT_NO_THROW(classify(ten, rec, Segment{"", 20.0, 25.0, {"C3"}}, b));
  EXPECT_EQ(error_of([&] { classify(ten, rec, Segment{"", 0.0, 5.0, {"C3"}}, b); }), ErrorCode::GranularityMismatch);
  const auto& full = tool_spec("normalAbnormal");
  EXPECT_NO_THROW(classify(full, rec, Segment{"", 0.0, 25.0, {"C3"}}, b));
  EXPECT_EQ(error_of([&] { classify(full, rec, Segment{"", 0.0, 20.0, {"C3"}}, b); }), ErrorCode::GranularityMismatch);
}

TEST(ScriptedBackend, ReplaysFixtureVerbatim) {
  const auto fixture = nlohmann::json::parse(R"({
    "entries": [
      {"tool": "seizNormal", "channel": "F4-C4", "t_start": 0, "t_end": 1, "probs": {"seizure": 0.92, "normal": 0.08}}
    ],
    "defaults": {"slowSeizBckg": {"bckg": 0.7, "slow": 0.2, "seiz": 0.1}}
  })");
  const auto backend = ScriptedBackend::from_json(fixture);
  const auto rec = synth::zeros({"F4-C4", "F3-C3"}, 100.0, 20.0);
  const auto out = classify(tool_spec("seizNormal"), rec, Segment::whole_channels(rec, 0, 1), backend);
  EXPECT_DOUBLE_EQ(out[0].probs.at("seizure"), 0.92);
  EXPECT_DOUBLE_EQ(out[0].probs.at("normal"), 0.08);
  EXPECT_EQ(out[1].probs.argmax(), "normal");
  EXPECT_DOUBLE_EQ(out[1].probs.at("normal"), 1.0);
  const auto later = classify(tool_spec("seizNormal"), rec, Segment::whole_channels(rec, 1, 2), backend);
  EXPECT_DOUBLE_EQ(later[0].probs.at("normal"), 1.0);
  const auto coarse = classify(tool_spec("slowSeizBckg"), rec, Segment::whole_channels(rec, 0, 10), backend);
  EXPECT_DOUBLE_EQ(coarse[0].probs.at("slow"), 0.2);
}

TEST(ScriptedBackend, RejectsProbabilitiesOffTheSimplex) {
  const auto fixture = nlohmann::json::parse(
      R"({"entries": [{"tool": "seizNormal", "probs": {"seiz": 0.5, "normal": 0.6}}]})");
  EXPECT_THROW(ScriptedBackend::from_json(fixture), Error);
}
