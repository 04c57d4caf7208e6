// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per primary criterion.
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eegagent/agent.hpp"
#include "eegagent/detection.hpp"
#include "eegagent/edf.hpp"
#include "eegagent/error.hpp"
#include "eegagent/exploration.hpp"
#include "eegagent/features.hpp"
#include "eegagent/reporting.hpp"
#include "eegagent/service.hpp"
#include "support/cases.hpp"
#include "support/edf_builder.hpp"
#include "support/synth.hpp"
#include "support/tempdir.hpp"

using namespace eegagent;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  int failures = 0;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (failures++ < 5) detail += (detail.empty() ? "" : "; ") + what;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// EDF round trip -------------------------------------------------------------

Recording random_recording(std::mt19937_64& rng) {
  const auto& pool = synth::referential_1020();
  std::uniform_int_distribution<int> nch(1, static_cast<int>(pool.size())), nrec(1, 12), age(0, 99), year(1990, 2030),
      month(1, 12), day(1, 28), hour(0, 23), minute(0, 59), sexd(0, 2), namelen(1, 12);
  const std::vector<double> rates = {100.0, 128.0, 200.0, 250.0, 256.0, 500.0};
  std::uniform_int_distribution<std::size_t> rate_pick(0, rates.size() - 1);
  std::uniform_real_distribution<double> range(200.0, 5000.0);

  auto labels = pool;
  std::shuffle(labels.begin(), labels.end(), rng);
  labels.resize(static_cast<std::size_t>(nch(rng)));
  const double record_s = (rng() % 4 == 0) ? 2.0 : 1.0;
  const int records = nrec(rng);
  auto rec = synth::zeros(labels, 100.0, 1.0);
  rec.record_duration_s = record_s;
  rec.num_records = records;
  std::string name;
  for (int i = namelen(rng); i > 0; --i) name.push_back(static_cast<char>('A' + rng() % 26));
  rec.patient.id = "P" + std::to_string(rng() % 100000);
  rec.patient.name = name;
  rec.patient.sex = std::array{Sex::Male, Sex::Female, Sex::Unknown}[static_cast<std::size_t>(sexd(rng))];
  rec.patient.age_years = rng() % 5 == 0 ? std::nullopt : std::optional<int>(age(rng));
  rec.start = {year(rng), month(rng), day(rng), hour(rng), minute(rng), minute(rng)};
  rec.recording_info = "Startdate X X X X";
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto& ch = rec.channels[c];
    const double rate = rates[rate_pick(rng)];
    const double half = std::round(range(rng) * 10.0) / 10.0;
    ch.sample_rate_hz = rate;
    ch.samples_per_record = static_cast<int>(std::llround(rate * record_s));
    ch.physical_min = -half;
    ch.physical_max = half;
    ch.prefilter = "HP:0.5Hz LP:70Hz";
    ch.transducer = "AgAgCl";
    const auto n = static_cast<Eigen::Index>(ch.samples_per_record) * records;
    rec.signals[c].resize(n);
    for (Eigen::Index k = 0; k < n; ++k) rec.signals[c][k] = std::clamp(0.2 * half * noise(rng), -half, half);
  }
  synth::quantize(rec);
  return rec;
}

std::vector<std::pair<std::string, std::string>> malformed_corpus() {
  using synth::RawEdf;
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](const std::string& name, const std::function<void(RawEdf&)>& edit) {
    RawEdf raw;
    raw.signals[0].samples = {1, 2, 3, 4};
    edit(raw);
    out.emplace_back(name, raw.bytes());
  };
  out.emplace_back("empty file", std::string());
  out.emplace_back("shorter than the fixed header", std::string(100, ' '));
  out.emplace_back("BDF variant", std::string("\xff" "BIOSEMI", 8) + std::string(248, ' '));
  add("version not 0", [](RawEdf& r) { r.version = "7"; });
  add("header byte count mismatch", [](RawEdf& r) { r.header_bytes = "1024"; });
  add("non-numeric header byte count", [](RawEdf& r) { r.header_bytes = "abc"; });
  add("non-numeric signal count", [](RawEdf& r) { r.num_signals = "x"; });
  add("zero signals", [](RawEdf& r) { r.num_signals = "0"; r.header_bytes = "256"; });
  add("signal count exceeds header", [](RawEdf& r) { r.num_signals = "3"; });
  add("non-numeric record count", [](RawEdf& r) { r.num_records = "many"; });
  add("negative record count", [](RawEdf& r) { r.num_records = "-7"; });
  add("zero record duration", [](RawEdf& r) { r.record_duration = "0"; });
  add("negative record duration", [](RawEdf& r) { r.record_duration = "-1"; });
  add("equal physical bounds", [](RawEdf& r) { r.signals[0].physical_max = "-3276.8"; });
  add("non-numeric physical minimum", [](RawEdf& r) { r.signals[0].physical_min = "low"; });
  add("digital min above max", [](RawEdf& r) { r.signals[0].digital_min = "40000"; });
  add("zero samples per record", [](RawEdf& r) { r.signals[0].samples_per_record = "0"; });
  add("invalid start date", [](RawEdf& r) { r.start_date = "31.13.21"; });
  add("invalid start time", [](RawEdf& r) { r.start_time = "25.61.00"; });
  add("truncated data record", [](RawEdf& r) { r.drop_tail_bytes = 2; });
  add("duplicate labels", [](RawEdf& r) {
    r.signals.push_back(r.signals[0]);
    r.signals[1].label = "FP1";
  });
  return out;
}

Outcome edf_round_trip() {
  const auto t0 = Clock::now();
  Outcome o;
  std::mt19937_64 rng(20240501);
  for (int i = 0; i < 200; ++i) {
    const auto rec = random_recording(rng);
    const auto back = parse_edf(std::span<const std::uint8_t>(serialize_edf(rec)));
    o.check(back == rec, "recording " + std::to_string(i) + " differs after round trip");
  }
  int rejected = 0;
  const auto corpus = malformed_corpus();
  for (const auto& [name, bytes] : corpus) {
    try {
      parse_edf(bytes);
      o.check(false, "accepted: " + name);
    } catch (const Error&) {
      ++rejected;
    } catch (const std::exception& e) {
      o.check(false, name + " raised an untyped error: " + e.what());
    }
  }
  const double secs = seconds_since(t0);
  o.check(corpus.size() >= 20, "corpus has fewer than 20 cases");
  o.check(secs < 30.0, "took " + fmt(secs) + " s");
  o.detail = "200 recordings round-tripped, " + std::to_string(rejected) + "/" + std::to_string(corpus.size()) +
             " malformed files rejected with typed errors, " + fmt(secs) + " s" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Feature oracles ------------------------------------------------------------

Outcome feature_oracles() {
  Outcome o;
  std::mt19937_64 rng(77);

  // amplitude statistics against the single-pass reference
  const auto noisy = [&] {
    auto rec = synth::zeros({"FP1", "C3", "O2"}, 200.0, 120.0);
    std::uniform_real_distribution<double> offset(-50.0, 50.0);
    for (auto& s : rec.signals) s = (synth::white_noise(s.size(), 25.0, rng).array() + offset(rng)).matrix();
    return rec;
  }();
  std::uniform_real_distribution<double> start(0.0, 100.0), length(0.05, 20.0);
  double worst_amp = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double a = start(rng);
    const Segment seg = Segment::whole_channels(noisy, a, a + length(rng));
    const auto got = compute_amplitude(noisy, seg);
    const auto slices = slice(noisy, seg);
    for (std::size_t c = 0; c < slices.size(); ++c) {
      const auto ref = synth::ref_amplitude(synth::to_std(slices[c].samples));
      const auto& st = got.channels[c].stats;
      const double rel = std::max(std::abs(st.mean_abs - ref.mean_abs) / ref.mean_abs, std::abs(st.rms - ref.rms) / ref.rms);
      worst_amp = std::max(worst_amp, rel);
      o.check(rel <= 1e-9 && st.max == ref.max && st.min == ref.min, "amplitude segment " + std::to_string(i));
    }
  }

  // sine waves over whole cycles
  double worst_sine = 0.0;
  const std::vector<double> freqs = {1.0, 2.0, 4.0, 5.0, 8.0, 10.0, 20.0, 25.0};
  std::uniform_int_distribution<int> cycles(10, 40);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * synth::kPi), amp(5.0, 300.0);
  for (int i = 0; i < 40; ++i) {
    const double f = freqs[static_cast<std::size_t>(i) % freqs.size()], A = amp(rng), ph = phase(rng);
    const int n = std::min(cycles(rng), static_cast<int>(60.0 * f));
    const auto rec = synth::make_recording({"O1"}, 1000.0, 60.0, [&](std::size_t, double t) { return synth::sine(t, f, A, ph); });
    const auto st = compute_amplitude(rec, Segment::whole_channels(rec, 0.0, n / f)).channels[0].stats;
    const double e_rms = std::abs(st.rms - A / std::sqrt(2.0)) / (A / std::sqrt(2.0));
    const double e_abs = std::abs(st.mean_abs - 2.0 * A / synth::kPi) / (2.0 * A / synth::kPi);
    worst_sine = std::max({worst_sine, e_rms, e_abs});
    o.check(e_rms <= 0.005 && e_abs <= 0.005, "sine " + fmt(f) + " Hz x" + std::to_string(n));
  }

  // Welch PSD: Parseval on white noise, 10 Hz sine in alpha
  double worst_parseval = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 g(seed);
    auto rec = synth::zeros({"C3"}, 256.0, 60.0);
    rec.signals[0] = synth::white_noise(rec.signals[0].size(), 20.0, g);
    const auto b = compute_psd(rec, Segment::whole_channels(rec, 0, 60)).channels[0].bands;
    const double var = synth::ref_variance(synth::to_std(rec.signals[0]));
    worst_parseval = std::max(worst_parseval, std::abs(b.total - var) / var);
    o.check(std::abs(b.total - var) <= 0.10 * var, "Parseval seed " + std::to_string(seed));
  }
  const auto alpha_rec = synth::make_recording({"O1"}, 256.0, 10.0, [](std::size_t, double t) { return synth::sine(t, 10.0, 50.0); });
  const auto ab = compute_psd(alpha_rec, Segment::whole_channels(alpha_rec, 0, 10)).channels[0].bands;
  const double alpha_share = ab[Band::Alpha] / ab.total;
  o.check(alpha_share >= 0.95, "alpha share " + fmt(alpha_share));

  // Pearson r against the covariance formula
  double worst_r = 0.0;
  std::uniform_real_distribution<double> mix(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd a = synth::white_noise(100 + i * 10, 10.0, rng);
    const Eigen::VectorXd b = mix(rng) * a + synth::white_noise(a.size(), 10.0, rng);
    const double ref = synth::ref_pearson(synth::to_std(a), synth::to_std(b));
    const auto r = pearson(a, b);
    const double err = r ? std::abs(*r - ref) / std::max(std::abs(ref), 1e-12) : 1.0;
    worst_r = std::max(worst_r, std::abs(*r - ref));
    o.check(r && (err <= 1e-9 || std::abs(*r - ref) <= 1e-12), "pearson pair " + std::to_string(i));
  }
  o.detail = "amplitude rel err " + fmt(worst_amp) + ", sine err " + fmt(worst_sine) + ", Parseval err " +
             fmt(worst_parseval) + ", alpha share " + fmt(alpha_share) + ", Pearson abs err " + fmt(worst_r) +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Partition ------------------------------------------------------------------

Outcome partition_properties() {
  Outcome o;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> start(0.0, 3600.0), len(0.01, 600.0), step(0.05, 60.0);
  int tails = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    double t0 = start(rng), t1 = t0 + len(rng), dt = step(rng);
    if (trial % 10 == 0) {
      t0 = std::floor(t0);
      dt = 10.0;
      t1 = t0 + 10.0 * static_cast<double>(1 + trial % 7);
    }
    const auto segs = partition(t0, t1, dt);
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
    const double tol = 1e-9 * std::max(1.0, t1);
    bool ok = segs.size() == n && segs.front().t_start_s == t0 && segs.back().t_end_s == t1;
    double covered = 0.0;
    for (std::size_t i = 0; ok && i < segs.size(); ++i) {
      ok = segs[i].index == static_cast<int>(i) && segs[i].t_start_s < segs[i].t_end_s;
      if (ok && i + 1 < segs.size()) {
        ok = segs[i].t_end_s == segs[i + 1].t_start_s && std::abs(segs[i].length() - dt) <= tol;
      }
      covered += segs[i].length();
    }
    ok = ok && segs.back().length() <= dt + tol && std::abs(covered - (t1 - t0)) <= 1e-6 * std::max(1.0, t1 - t0);
    if (ok && segs.back().length() < dt - tol) ++tails;
    o.check(ok, "triple (" + fmt(t0) + ", " + fmt(t1) + ", " + fmt(dt) + ")");
  }
  o.detail = "1000 triples, " + std::to_string(tails) + " with a shorter tail" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Detection ------------------------------------------------------------------

std::vector<EventInterval> random_events(std::mt19937_64& rng, const std::vector<std::string>& channels, int duration) {
  std::uniform_int_distribution<int> count(1, 5), ch(0, static_cast<int>(channels.size()) - 1), len(1, 4),
      start(0, duration - 5);
  std::vector<EventInterval> out;
  const int n = count(rng);
  while (static_cast<int>(out.size()) < n) {
    EventInterval e{channels[static_cast<std::size_t>(ch(rng))], 0, 0, "seiz", 1.0};
    e.t_start_s = start(rng);
    e.t_end_s = e.t_start_s + len(rng);
    const bool clash = std::any_of(out.begin(), out.end(), [&](const EventInterval& x) {
      return x.channel == e.channel && e.t_start_s < x.t_end_s + 2.0 && x.t_start_s < e.t_end_s + 2.0;
    });
    if (!clash) out.push_back(e);
  }
  sort_events(out);
  return out;
}

Outcome detection_oracle() {
  Outcome o;
  std::mt19937_64 rng(42);
  const std::vector<std::string> labels = {"FP1-F3", "F3-C3", "F4-C4", "C4-P4", "T3-T5", "O1-O2"};
  int events = 0;
  for (int i = 0; i < 50; ++i) {
    const auto rec = synth::zeros(labels, 32.0, 95.0 + 10.0 * (i % 5));
    const auto truth = random_events(rng, labels, 95);
    events += static_cast<int>(truth.size());
    DetectionConfig cfg;
    cfg.threads = 1 + i % 4;
    const auto r = detect(rec, oracle_backend(truth), {"seiz"}, cfg);
    const auto e = evaluate(r.events, truth);
    o.check(e.hit_rate == 1.0 && e.false_rate == 0.0,
            "recording " + std::to_string(i) + ": hit " + fmt(e.hit_rate) + ", false " + fmt(e.false_rate));
  }
  const double third = iou({"C3", 0, 10, "seiz", 1}, {"C3", 5, 15, "seiz", 1});
  o.check(std::abs(third - 1.0 / 3.0) <= 1e-9, "IoU([0,10],[5,15]) = " + fmt(third));
  o.check(iou({"C3", 0, 10, "seiz", 1}, {"C4", 0, 10, "seiz", 1}) == 0.0, "cross-channel IoU not 0");

  for (int i = 0; i < 100; ++i) {
    std::uniform_real_distribution<double> t(0.0, 50.0), l(0.1, 5.0);
    std::vector<EventInterval> raw;
    for (int k = 0; k < 12; ++k) {
      const double a = std::round(t(rng) * 4) / 4;
      raw.push_back({labels[rng() % 3], a, a + std::round(l(rng) * 4) / 4, "seiz", 0.5});
    }
    const auto once = merge_adjacent(raw);
    o.check(merge_adjacent(once) == once, "merge not idempotent on list " + std::to_string(i));
  }
  const auto exact = merge_adjacent({{"C3", 0, 1, "seiz", 1}, {"C3", 2, 3, "seiz", 1}}, 1.0);
  const auto below = merge_adjacent({{"C3", 0, 1, "seiz", 1}, {"C3", 1.999, 3, "seiz", 1}}, 1.0);
  o.check(exact.size() == 2, "a gap of exactly 1.0 s was merged");
  o.check(below.size() == 1, "a gap below 1.0 s was not merged");
  o.detail = "50 recordings, " + std::to_string(events) + " events: hit 1, false 0; IoU " + fmt(third) +
             "; gap of 1.0 s kept apart" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

Outcome cost_bound() {
  Outcome o;
  const auto rec = synth::zeros(synth::bipolar_banana(), 32.0, 1200.0);
  const std::vector<EventInterval> truth = {{"F4-C4", 200, 201, "seiz", 1.0}, {"FP1-F3", 905, 907, "seiz", 1.0}};
  const auto r = detect(rec, oracle_backend(truth), {"seiz"});
  const int channels = static_cast<int>(rec.channels.size());
  const int expected_coarse = static_cast<int>(std::ceil(rec.duration_s() / 10.0));
  o.check(r.stats.coarse_windows == expected_coarse, "coarse " + std::to_string(r.stats.coarse_windows));
  o.check(r.stats.fine_windows <= 2 * 10 * channels, "fine " + std::to_string(r.stats.fine_windows));
  o.check(r.events == truth, "events differ from ground truth");
  o.detail = "coarse " + std::to_string(r.stats.coarse_windows) + " == ceil(1200/10); fine " +
             std::to_string(r.stats.fine_windows) + " <= " + std::to_string(2 * 10 * channels) +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Replay ---------------------------------------------------------------------

Outcome deterministic_replay() {
  Outcome o;
  const auto rec = synth::make_recording(synth::bipolar_banana(), 128.0, 420.0,
                                         [](std::size_t, double t) { return synth::slow_wave(t); }, 72);
  const auto kb = KnowledgeBase::builtin();
  const auto fixture = json::parse(cases::read_file(cases::fixture_path("fig3_policy.json")));
  const std::string task = "Please analyze the EEG from minute 5 to 6.";
  std::string traces[2];
  std::vector<std::string> order;
  for (auto& t : traces) {
    BaselineBackend backend;
    const Toolbox box(rec, kb, backend);
    auto policy = ScriptedPolicy::from_json(fixture);
    const auto r = run_task(task, box, policy);
    t = r.trace.to_jsonl();
    order = r.trace.tool_order();
  }
  const std::vector<std::string> fig3 = {"slowSeizBckg", "compute_amplitude"};
  o.check(!traces[0].empty() && traces[0] == traces[1], "scripted traces differ");
  o.check(order == fig3, "scripted tool order differs");

  BaselineBackend backend;
  const Toolbox box(rec, kb, backend);
  HeuristicPolicy heuristic(rec);
  const auto h = run_task(task, box, heuristic);
  o.check(h.trace.tool_order() == fig3, "heuristic tool order differs");

  const auto report = generate_report(cases::fig5_recording(), kb, cases::fig5_backend(), DeterministicDecider());
  const auto golden = cases::read_file(cases::golden_path("report_fig5.txt"));
  o.check(!golden.empty() && report.text == golden, "template report differs from the golden file");
  o.detail = "trace " + std::to_string(traces[0].size()) + " bytes identical twice; tool order [slowSeizBckg, "
             "compute_amplitude]; report golden " + std::to_string(golden.size()) + " bytes equal" +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Report structure -----------------------------------------------------------

Outcome report_structure() {
  Outcome o;
  std::mt19937_64 rng(2024);
  const auto kb = KnowledgeBase::builtin();
  const BaselineBackend backend;
  const auto& labels = synth::bipolar_banana();
  int events = 0;
  for (int i = 0; i < 20; ++i) {
    const double dur = 30.0 + 10.0 * static_cast<double>(rng() % 10);
    const auto burst_ch = static_cast<std::size_t>(rng() % labels.size());
    const double burst_at = std::floor(static_cast<double>(rng() % static_cast<unsigned>(dur - 5.0)));
    const int kind = i % 4;
    const auto rec = synth::make_recording(
        labels, 128.0, dur,
        [&](std::size_t c, double t) {
          double v = kind == 1 ? synth::slow_wave(t) : synth::background(c, t);
          if ((kind == 2 || kind == 3) && c == burst_ch && t >= burst_at && t < burst_at + 2.0) v += synth::seizure_burst(t);
          return v;
        },
        i % 5 == 0 ? std::nullopt : std::optional<int>(5 + 4 * i));
    const auto r = generate_report(rec, kb, backend, DeterministicDecider());
    const std::vector<std::string> heads = {"1. BASIC INFORMATION", "2. BACKGROUND ACTIVITY", "3. ABNORMAL EVENTS",
                                            "4. IMPRESSION"};
    std::size_t pos = 0;
    for (const auto& h : heads) {
      const auto at = r.text.find(h, pos);
      o.check(at != std::string::npos, "report " + std::to_string(i) + " lacks " + h);
      if (at != std::string::npos) pos = at;
    }
    o.check(!r.draft.basic_info.empty() && !r.draft.background_activity.empty() && !r.draft.impression.empty(),
            "report " + std::to_string(i) + " has an empty section");
    for (const auto& e : r.draft.abnormal_events) o.check(!e.provenance.empty(), "event without provenance");
    events += static_cast<int>(r.draft.abnormal_events.size());
    const auto bad = provenance_violations(r.draft);
    o.check(bad.empty(), "report " + std::to_string(i) + ": " + std::to_string(bad.size()) + " unprovenanced statements");
  }
  o.detail = "20 reports, four sections each, " + std::to_string(events) +
             " abnormal events all with provenance, 0 unprovenanced statements" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Service --------------------------------------------------------------------

class BlockingPolicy final : public PlannerPolicy {
 public:
  BlockingPolicy(std::shared_future<void> gate, std::atomic<int>& entered) : gate_(std::move(gate)), entered_(entered) {}
  std::string next(const Context&) override {
    ++entered_;
    gate_.wait();
    return R"({"thought": "done", "final_answer": "ok"})";
  }

 private:
  std::shared_future<void> gate_;
  std::atomic<int>& entered_;
};

std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), root).string()] = cases::read_file(e.path().string());
  }
  return files;
}

Outcome service_contract() {
  Outcome o;
  support::TempDir dir;
  ServiceConfig cfg;
  cfg.store = dir.path();
  ServiceDeps deps;
  deps.backend = std::make_shared<ScriptedBackend>(ScriptedBackend::load(cases::fixture_path("demo_backend.json")));

  const auto& labels = synth::bipolar_banana();
  const auto rec = synth::make_recording(
      labels, 128.0, 120.0,
      [&](std::size_t c, double t) { return synth::background(c, t) + (labels[c] == "F4-C4" && t < 1.0 ? synth::seizure_burst(t) : 0.0); },
      78);
  const auto edf = serialize_edf(rec);
  auto call = [](ServiceCore& core, const std::string& m, const std::string& path, const std::string& body = {}) {
    return core.handle({m, path, {}, body, {}});
  };

  std::map<std::string, std::string> responses;
  std::string rid, sid;
  {
    ServiceCore core(cfg, deps);
    const auto up = call(core, "POST", "/recordings", std::string(edf.begin(), edf.end()));
    o.check(up.status == 201, "upload status " + std::to_string(up.status));
    rid = json::parse(up.body).at("id");
    const auto info = call(core, "GET", "/recordings/" + rid + "/info");
    o.check(info.status == 200, "info status " + std::to_string(info.status));
    const auto det = call(core, "POST", "/recordings/" + rid + "/detect", R"({"targets": ["seiz"]})");
    o.check(det.status == 201, "detect status " + std::to_string(det.status));
    const auto rep = call(core, "POST", "/recordings/" + rid + "/report", R"({"mode": "template"})");
    o.check(rep.status == 201, "report status " + std::to_string(rep.status));
    const auto ses = call(core, "POST", "/sessions", json{{"recording_id", rid}}.dump());
    sid = json::parse(ses.body).at("id");
    const auto q = call(core, "POST", "/sessions/" + sid + "/query", R"({"task": "Analyze minute 0 to 1."})");
    o.check(q.status == 200, "query status " + std::to_string(q.status));
    for (const auto& path : {"/recordings/" + rid + "/info",
                             "/recordings/" + rid + "/artifacts/" + json::parse(det.body).at("artifact_id").get<std::string>(),
                             "/recordings/" + rid + "/artifacts/" + json::parse(rep.body).at("artifact_id").get<std::string>(),
                             "/sessions/" + sid + "/trace/" + json::parse(q.body).at("trace_id").get<std::string>(),
                             "/sessions/" + sid}) {
      const auto r = call(core, "GET", path);
      o.check(r.status == 200, path + " status " + std::to_string(r.status));
      responses[path] = r.body;
    }
  }
  const auto before = snapshot(dir.path());
  {
    ServiceCore restarted(cfg, deps);
    for (const auto& [path, body] : responses) {
      const auto r = call(restarted, "GET", path);
      o.check(r.status == 200 && r.body == body, "after restart " + path + " differs");
    }
  }
  o.check(snapshot(dir.path()) == before, "stored files changed across the restart");

  std::promise<void> release;
  std::shared_future<void> gate = release.get_future().share();
  std::atomic<int> entered{0};
  auto blocking = deps;
  blocking.policy = [&](const Recording&) { return std::make_unique<BlockingPolicy>(gate, entered); };
  ServiceCore core(cfg, blocking);
  auto first = std::async(std::launch::async, [&] { return call(core, "POST", "/sessions/" + sid + "/query", R"({"task": "a"})"); });
  while (entered.load() == 0) std::this_thread::yield();
  const auto second = call(core, "POST", "/sessions/" + sid + "/query", R"({"task": "b"})");
  release.set_value();
  const auto first_status = first.get().status;
  o.check(second.status == 409, "concurrent query got " + std::to_string(second.status));
  o.check(first_status == 200, "held query got " + std::to_string(first_status));
  o.detail = "upload/info/detect/report/query then restart: " + std::to_string(responses.size()) +
             " GET responses and " + std::to_string(before.size()) + " stored files byte-identical; concurrent query " +
             std::to_string(second.status) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"edf_round_trip", edf_round_trip},
      {"feature_oracles", feature_oracles},
      {"partition_properties", partition_properties},
      {"detection_oracle_equivalence", detection_oracle},
      {"hierarchical_cost_bound", cost_bound},
      {"deterministic_replay", deterministic_replay},
      {"report_structure_audit", report_structure},
      {"service_contract", service_contract},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (name == "service_contract") {
      const double total = seconds_since(t0);
      o.check(total < 300.0, "suite took " + fmt(total) + " s");
      o.detail += "; suite runtime " + fmt(total) + " s, scripted backends only";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt(seconds_since(start)) << " s): " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed in "
            << fmt(seconds_since(t0)) << " s" << std::endl;
  return failed == 0 ? 0 : 1;
}
