// SPDX-License-Identifier: Apache-2.0
#include "eegagent/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "eegagent/error.hpp"
#include "eegagent/exploration.hpp"
#include "eegagent/features.hpp"
#include "eegagent/montage.hpp"
#include "eegagent/perception.hpp"
#include "eegagent/text.hpp"
#include "parallel.hpp"

namespace eegagent {
namespace {

constexpr double kEps = 1e-9;
constexpr double kAlphaSlowingHz = 8.0;
constexpr std::size_t kCoarsePerBatch = 6;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string span_text(double a, double b) { return format_number(a) + " s to " + format_number(b) + " s"; }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

bool is_occipital(const std::string& channel) {
  for (const auto& e : electrodes_of(channel)) {
    try {
      if (RegionMap::standard().electrode(e).region == Region::Occipital) return true;
    } catch (const Error&) {
    }
  }
  return false;
}

/// Best non-background label of one output and its probability.
std::pair<std::string, double> strongest(const ToolSpec& tool, const ClassProbabilities& p) {
  std::string label;
  double best = -1.0;
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    if (p.labels[i] == tool.background_label) continue;
    if (p.values[static_cast<Eigen::Index>(i)] > best) {
      best = p.values[static_cast<Eigen::Index>(i)];
      label = p.labels[i];
    }
  }
  return {label, best};
}

struct FinePositive {
  EventInterval event;
  std::string record;
};

nlohmann::json error_json(const Error& e) {
  return {{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
}

}  // namespace

std::string_view to_string(Decision d) { return d == Decision::Refine ? "refine" : "coarse_sufficient"; }

RefineDecision DeterministicDecider::decide(int segment_index, const ToolSpec& tool,
                                            const ClassProbabilities& coarse) const {
  const auto [label, p] = strongest(tool, coarse);
  RefineDecision d;
  d.segment_index = segment_index;
  d.decision = p >= threshold_ ? Decision::Refine : Decision::CoarseSufficient;
  d.reason = label.empty() ? "no non-background class"
                           : "max non-background " + label + " = " + format_number(p) +
                                 (d.decision == Decision::Refine ? " >= " : " < ") + format_number(threshold_);
  return d;
}

std::optional<Decision> parse_decision(std::string_view reply) {
  const auto t = lower(reply);
  const bool cs = t.find("coarse_sufficient") != std::string::npos || t.find("coarse sufficient") != std::string::npos;
  const bool rf = t.find("refine") != std::string::npos;
  if (cs == rf) return std::nullopt;
  return cs ? Decision::CoarseSufficient : Decision::Refine;
}

RefineDecision ChatDecider::decide(int segment_index, const ToolSpec& tool, const ClassProbabilities& coarse) const {
  const std::vector<ChatMessage> messages = {
      {"system",
       "You decide whether a 10 s EEG window needs re-analysis at 1 s resolution. Answer with one word: refine or "
       "coarse_sufficient."},
      {"user", "Window " + std::to_string(segment_index) + ", " + tool.name + " probabilities: " +
                   nlohmann::json(coarse).dump()}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto reply = generator_->complete(messages);
    if (auto d = parse_decision(reply)) return {segment_index, *d, "chat: " + reply};
  }
  spdlog::warn("refine decision for window {}: two unusable replies, using the deterministic rule", segment_index);
  auto d = fallback_.decide(segment_index, tool, coarse);
  d.reason = "fallback: " + d.reason;
  return d;
}

RenderMode render_mode_from_string(std::string_view s) {
  if (s == "template") return RenderMode::Template;
  if (s == "chat") return RenderMode::Chat;
  fail(ErrorCode::InvalidArgument, "render mode must be 'template' or 'chat', got '" + std::string(s) + "'");
}

ReportResult generate_report(const Recording& rec, const KnowledgeBase& kb, const ClassifierBackend& backend,
                             const RefineDecider& decider, const ReportOptions& opt) {
  ReportDraft d;
  const double duration = rec.duration_s();
  const auto channels = rec.channel_labels();
  const auto& coarse_tool = tool_spec("slowSeizBckg");
  const auto& fine_tool = tool_spec("seizArtiBckg");

  // basic information
  const auto info = base_info(rec, kb);
  d.analyses.push_back({"info", "info", "baseInfo", 0.0, duration, true, info});
  {
    const auto& p = info.patient;
    std::ostringstream s;
    s << "Patient: " << (p.id.empty() ? "unknown id" : p.id) << ", " << to_string(p.sex) << ", age "
      << (p.age_years ? std::to_string(*p.age_years) : std::string("unknown")) << ".";
    d.basic_info.push_back({s.str(), {"info"}});
    std::set<std::string> rates;
    for (const auto& c : rec.channels) rates.insert(format_number(c.sample_rate_hz));
    d.basic_info.push_back({"Recording: started " + info.start + ", duration " + format_number(duration) + " s, " +
                                std::to_string(rec.channels.size()) + " channels at " +
                                join(std::vector<std::string>(rates.begin(), rates.end()), "/") + " Hz.",
                            {"info"}});
    if (info.age_band) {
      std::string text = "Age band: " + *info.age_band + ".";
      if (info.age_note) text += " " + info.age_note->title + ".";
      d.basic_info.push_back({text, {"info"}});
    }
  }

  // coarse sweep
  const auto windows = partition(0.0, duration, kReportCoarseWindowS, duration);
  std::vector<Segment> coarse;
  for (const auto& w : windows) coarse.push_back(Segment::whole_channels(rec, w.t_start_s, w.t_end_s));
  std::vector<std::optional<ClassProbabilities>> coarse_probs(coarse.size());
  std::vector<AnalysisRecord> coarse_records(coarse.size());
  const std::size_t batches = (coarse.size() + kCoarsePerBatch - 1) / kCoarsePerBatch;
  detail::parallel_for(batches, opt.threads, [&](std::size_t b) {
    const auto first = b * kCoarsePerBatch;
    const auto n = std::min(kCoarsePerBatch, coarse.size() - first);
    std::vector<WindowProbabilities> out;
    std::optional<Error> failure;
    try {
      out = classify(coarse_tool, rec, std::span<const Segment>(coarse).subspan(first, n), backend);
    } catch (const Error& e) {
      failure = e;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = first + k;
      auto& r = coarse_records[i];
      r = {"coarse-" + std::to_string(i), "coarse", coarse_tool.name, coarse[i].t_start_s, coarse[i].t_end_s, true, {}};
      if (failure) {
        r.ok = false;
        r.result = error_json(*failure);
      } else {
        r.result = out[k];
        coarse_probs[i] = out[k].front().probs;
      }
    }
  });
  d.coarse_analyses = static_cast<int>(coarse.size());
  for (auto& r : coarse_records) d.analyses.push_back(r);

  // decisions
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (!coarse_probs[i]) {
      d.decisions.push_back({static_cast<int>(i), Decision::CoarseSufficient, "coarse analysis failed"});
      continue;
    }
    d.decisions.push_back(decider.decide(static_cast<int>(i), coarse_tool, *coarse_probs[i]));
  }

  // refinement on full 1 s subwindows
  std::vector<std::size_t> refined;
  for (const auto& dec : d.decisions) {
    if (dec.decision == Decision::Refine) refined.push_back(static_cast<std::size_t>(dec.segment_index));
  }
  std::vector<std::vector<AnalysisRecord>> fine_records(refined.size());
  std::vector<FinePositive> positives;
  std::mutex mutex;
  detail::parallel_for(refined.size(), opt.threads, [&](std::size_t k) {
    const auto i = refined[k];
    std::vector<Segment> fine;
    for (double a = coarse[i].t_start_s; a + kReportFineWindowS <= coarse[i].t_end_s + kEps; a += kReportFineWindowS) {
      fine.push_back(Segment{{}, a, a + kReportFineWindowS, channels});
    }
    auto& records = fine_records[k];
    try {
      const auto out = classify(fine_tool, rec, std::span<const Segment>(fine), backend);
      std::vector<FinePositive> found;
      for (std::size_t j = 0; j < fine.size(); ++j) {
        const auto id = "fine-" + std::to_string(i) + "-" + std::to_string(j);
        records.push_back({id, "fine", fine_tool.name, fine[j].t_start_s, fine[j].t_end_s, true, out[j]});
        for (const auto& ch : out[j]) {
          const auto [label, p] = strongest(fine_tool, ch.probs);
          if (!label.empty() && p >= opt.event_threshold) {
            found.push_back({{ch.channel, fine[j].t_start_s, fine[j].t_end_s, label, p}, id});
          }
        }
      }
      std::lock_guard lock(mutex);
      std::move(found.begin(), found.end(), std::back_inserter(positives));
    } catch (const Error& e) {
      records.push_back({"fine-" + std::to_string(i), "fine", fine_tool.name, coarse[i].t_start_s, coarse[i].t_end_s,
                         false, error_json(e)});
    }
  });
  for (auto& rs : fine_records) {
    for (auto& r : rs) {
      if (r.ok) ++d.fine_analyses;
      d.analyses.push_back(std::move(r));
    }
  }

  // feature blocks
  std::vector<std::string> amp_ids, psd_ids, sym_ids;
  std::vector<double> rms, occipital_alpha, all_peaks, pair_r;
  double rms_min = 0.0, rms_max = 0.0;
  bool have_rms = false;
  const auto blocks = partition(0.0, duration, kReportFeatureBlockS, duration);
  for (const auto& b : blocks) {
    const Segment seg = Segment::whole_channels(rec, b.t_start_s, b.t_end_s);
    const auto tag = std::to_string(b.index);
    auto run = [&](const std::string& tool, const std::string& id, auto&& fn) {
      AnalysisRecord r{id, "feature", tool, b.t_start_s, b.t_end_s, true, {}};
      try {
        r.result = fn();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoPairs) return false;
        r.ok = false;
        r.result = error_json(e);
        d.background_activity.push_back(
            {"Analysis incomplete: " + tool + " over " + span_text(b.t_start_s, b.t_end_s) + " failed (" + e.what() + ").",
             {id}});
        d.degraded = true;
      }
      d.analyses.push_back(r);
      return r.ok;
    };
    if (run("compute_amplitude", "amplitude-" + tag, [&] { return nlohmann::json(compute_amplitude(rec, seg)); })) {
      amp_ids.push_back("amplitude-" + tag);
      for (const auto& c : d.analyses.back().result) {
        const double v = c.at("rms_uv").get<double>();
        rms.push_back(v);
        rms_min = have_rms ? std::min(rms_min, v) : v;
        rms_max = have_rms ? std::max(rms_max, v) : v;
        have_rms = true;
      }
    }
    if (b.length() >= kMinPsdWindowS - kEps &&
        run("compute_psd", "psd-" + tag, [&] { return nlohmann::json(compute_psd(rec, seg)); })) {
      psd_ids.push_back("psd-" + tag);
      for (const auto& c : d.analyses.back().result.at("channels")) {
        const double alpha = c.at("alpha_range_peak_hz").get<double>();
        const double peak = c.at("peak_frequency_hz").get<double>();
        if (peak > 0.0) all_peaks.push_back(peak);
        if (alpha > 0.0 && is_occipital(c.at("channel").get<std::string>())) occipital_alpha.push_back(alpha);
      }
    }
    if (run("compute_symmetry", "symmetry-" + tag, [&] { return nlohmann::json(compute_symmetry(rec, seg)); })) {
      sym_ids.push_back("symmetry-" + tag);
      for (const auto& p : d.analyses.back().result) {
        if (p.at("r").is_number()) pair_r.push_back(p.at("r").get<double>());
      }
    }
  }

  // failed classifier analyses
  for (const auto& r : d.analyses) {
    if (r.ok || (r.stage != "coarse" && r.stage != "fine")) continue;
    d.degraded = true;
    d.background_activity.push_back({"Analysis incomplete: " + r.tool + " over " + span_text(r.t_start_s, r.t_end_s) +
                                         " failed (" + r.result.at("error").at("message").get<std::string>() + ").",
                                     {r.id}});
  }

  // background activity
  std::vector<std::string> ok_coarse, slow_ids;
  std::vector<std::pair<double, double>> slow_spans;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (!coarse_probs[i]) continue;
    ok_coarse.push_back(coarse_records[i].id);
    if (coarse_probs[i]->argmax() == "slow") {
      slow_ids.push_back(coarse_records[i].id);
      slow_spans.emplace_back(coarse[i].t_start_s, coarse[i].t_end_s);
    }
  }
  const bool diffuse_slowing = !ok_coarse.empty() && 2 * slow_ids.size() >= ok_coarse.size() && !slow_ids.empty();
  bool alpha_slowing = false;

  if (!occipital_alpha.empty()) {
    const double f = median(occipital_alpha);
    alpha_slowing = f < kAlphaSlowingHz;
    d.background_activity.push_back(
        {alpha_slowing ? "Occipital alpha slowing: posterior dominant rhythm at " + format_number(f, 1) + " Hz."
                       : "Posterior dominant rhythm at " + format_number(f, 1) + " Hz.",
         psd_ids});
  } else if (!all_peaks.empty()) {
    d.background_activity.push_back(
        {"Dominant frequency " + format_number(median(all_peaks), 1) + " Hz (no occipital channels).", psd_ids});
  } else if (!psd_ids.empty()) {
    d.background_activity.push_back({"No measurable rhythm: signal power is zero.", psd_ids});
  }
  if (have_rms) {
    double mean = 0.0;
    for (double v : rms) mean += v;
    mean /= static_cast<double>(rms.size());
    d.background_activity.push_back({"Amplitude: mean RMS " + format_number(mean, 1) + " uV (channel range " +
                                         format_number(rms_min, 1) + " to " + format_number(rms_max, 1) + " uV).",
                                     amp_ids});
  }
  if (!sym_ids.empty()) {
    d.background_activity.push_back(
        {pair_r.empty() ? std::string("Hemispheric symmetry: not assessable (no defined homologous correlation).")
                        : "Hemispheric symmetry: median homologous correlation r = " + format_number(median(pair_r), 2) +
                              " over " + std::to_string(pair_r.size()) + " pair measurements.",
         sym_ids});
  }
  if (!slow_ids.empty()) {
    std::ostringstream s;
    s << (diffuse_slowing ? "Diffuse slow waves" : "Intermittent slow waves") << " in " << slow_ids.size() << " of "
      << ok_coarse.size() << " 10 s windows";
    if (!diffuse_slowing) {
      std::vector<std::string> spans;
      std::vector<EventInterval> merged;
      for (const auto& [a, b] : slow_spans) merged.push_back({"all", a, b, "slow", 1.0});
      for (const auto& e : merge_adjacent(merged, kEps)) spans.push_back(span_text(e.t_start_s, e.t_end_s));
      s << " (" << join(spans, ", ") << ")";
    }
    s << ".";
    d.background_activity.push_back({s.str(), slow_ids});
  } else if (!ok_coarse.empty()) {
    d.background_activity.push_back({"Background unremarkable: no slowing detected in " +
                                         std::to_string(ok_coarse.size()) + " 10 s windows.",
                                     ok_coarse});
  }
  std::vector<std::string> artifact_ids;
  std::set<std::string> artifact_channels;
  for (const auto& p : positives) {
    if (p.event.label != "artf") continue;
    artifact_ids.push_back(p.record);
    artifact_channels.insert(p.event.channel);
  }
  std::sort(artifact_ids.begin(), artifact_ids.end());
  artifact_ids.erase(std::unique(artifact_ids.begin(), artifact_ids.end()), artifact_ids.end());
  if (!artifact_ids.empty()) {
    d.background_activity.push_back(
        {"Artifacts in " + std::to_string(artifact_ids.size()) + " one-second windows (" +
             join(std::vector<std::string>(artifact_channels.begin(), artifact_channels.end()), ", ") + ").",
         artifact_ids});
  }

  // abnormal events: merged per channel, then grouped across channels
  std::vector<EventInterval> seiz;
  for (const auto& p : positives) {
    if (p.event.label == "seiz") seiz.push_back(p.event);
  }
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (!coarse_probs[i] || d.decisions[i].decision == Decision::Refine) continue;
    const auto& p = *coarse_probs[i];
    if (p.argmax() == "seiz") {
      AbnormalEvent ev{"seiz", coarse[i].t_start_s, coarse[i].t_end_s, {"all"}, p.at("seiz"),
                       "Seizure-like activity on the whole-head screen from " +
                           span_text(coarse[i].t_start_s, coarse[i].t_end_s) + ".",
                       {coarse_records[i].id}};
      d.abnormal_events.push_back(std::move(ev));
    }
  }
  auto merged = merge_adjacent(seiz, kEps);
  std::sort(merged.begin(), merged.end(), [](const EventInterval& a, const EventInterval& b) {
    return std::tie(a.t_start_s, a.channel) < std::tie(b.t_start_s, b.channel);
  });
  std::vector<AbnormalEvent> groups;
  for (const auto& e : merged) {
    if (!groups.empty() && e.t_start_s < groups.back().t_end_s - kEps) {
      auto& g = groups.back();
      g.t_end_s = std::max(g.t_end_s, e.t_end_s);
      g.confidence = std::max(g.confidence, e.confidence);
      g.channels.push_back(e.channel);
    } else {
      groups.push_back({"seiz", e.t_start_s, e.t_end_s, {e.channel}, e.confidence, {}, {}});
    }
  }
  for (auto& g : groups) {
    std::sort(g.channels.begin(), g.channels.end());
    std::set<std::string> ids;
    for (const auto& p : positives) {
      if (p.event.label == "seiz" && p.event.t_start_s >= g.t_start_s - kEps && p.event.t_end_s <= g.t_end_s + kEps &&
          std::binary_search(g.channels.begin(), g.channels.end(), p.event.channel)) {
        ids.insert(p.record);
      }
    }
    g.provenance.assign(ids.begin(), ids.end());
    g.description = "Epileptiform discharges over the " + describe_location(g.channels) + " region (" +
                    join(g.channels, ", ") + ") from " + span_text(g.t_start_s, g.t_end_s) + ", peak probability " +
                    format_number(g.confidence, 2) + ".";
    d.abnormal_events.push_back(std::move(g));
  }
  std::sort(d.abnormal_events.begin(), d.abnormal_events.end(),
            [](const AbnormalEvent& a, const AbnormalEvent& b) { return a.t_start_s < b.t_start_s; });

  // impression
  std::map<std::string, std::vector<std::string>> by_location;
  for (const auto& e : d.abnormal_events) {
    auto& ids = by_location[e.channels == std::vector<std::string>{"all"} ? "whole-head" : describe_location(e.channels)];
    ids.insert(ids.end(), e.provenance.begin(), e.provenance.end());
  }
  for (auto& [where, ids] : by_location) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    d.impression.push_back({where == "whole-head" ? "Abnormal EEG: seizure-like activity on the whole-head screen."
                                                  : "Abnormal EEG: epileptiform discharges over the " + where + " region.",
                            ids});
  }
  if (diffuse_slowing) d.impression.push_back({"Diffuse background slowing.", slow_ids});
  if (alpha_slowing) d.impression.push_back({"Slowing of the posterior dominant rhythm.", psd_ids});
  if (d.impression.empty()) {
    if (!ok_coarse.empty()) {
      d.impression.push_back({slow_ids.empty() ? "Normal EEG. No epileptiform abnormalities identified."
                                               : "No epileptiform abnormalities identified; intermittent slowing noted.",
                              slow_ids.empty() ? ok_coarse : slow_ids});
    } else {
      std::vector<std::string> failed;
      for (const auto& r : d.analyses) {
        if (!r.ok) failed.push_back(r.id);
      }
      d.impression.push_back({"No conclusion: the screening analyses failed.", failed});
    }
  }

  ReportResult out;
  out.text = render(d, opt.mode, opt.narrator.get());
  out.draft = std::move(d);
  return out;
}

std::string render(const ReportDraft& d, RenderMode mode, const TextGenerator* narrator) {
  std::ostringstream out;
  out << "EEG REPORT\n\n";
  out << "1. BASIC INFORMATION\n";
  for (const auto& s : d.basic_info) out << "- " << s.text << "\n";
  out << "\n2. BACKGROUND ACTIVITY\n";
  for (const auto& s : d.background_activity) out << "- " << s.text << "\n";
  out << "\n3. ABNORMAL EVENTS\n";
  if (d.abnormal_events.empty()) out << "No epileptiform abnormalities identified.\n";
  for (const auto& e : d.abnormal_events) out << "- " << e.description << "\n";
  out << "\n4. IMPRESSION\n";
  for (const auto& s : d.impression) out << "- " << s.text << "\n";
  out << "\nAnalyses: " << d.coarse_analyses << " coarse 10 s windows, " << d.fine_analyses << " refined 1 s windows"
      << (d.degraded ? "; some analyses failed" : "") << ".\n";
  if (mode == RenderMode::Template) return out.str();
  if (!narrator) fail(ErrorCode::InvalidArgument, "chat rendering needs a text generator");
  return narrator->complete(
      {{"system",
        "Rewrite this EEG report draft as a clinical report with the sections Basic information, Background "
        "activity, Abnormal events and Impression. Use only the statements given."},
       {"user", out.str()}});
}

void to_json(nlohmann::json& j, const ReportDraft& d) {
  auto statements = [](const std::vector<Statement>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : v) a.push_back({{"text", s.text}, {"provenance", s.provenance}});
    return a;
  };
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : d.abnormal_events) {
    events.push_back({{"label", e.label},
                      {"t_start", e.t_start_s},
                      {"t_end", e.t_end_s},
                      {"channels", e.channels},
                      {"confidence", e.confidence},
                      {"description", e.description},
                      {"provenance", e.provenance}});
  }
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& x : d.decisions) {
    decisions.push_back(
        {{"segment_index", x.segment_index}, {"decision", std::string(to_string(x.decision))}, {"reason", x.reason}});
  }
  nlohmann::json analyses = nlohmann::json::array();
  for (const auto& a : d.analyses) {
    analyses.push_back({{"id", a.id},
                        {"stage", a.stage},
                        {"tool", a.tool},
                        {"t_start", a.t_start_s},
                        {"t_end", a.t_end_s},
                        {"ok", a.ok},
                        {"result", a.result}});
  }
  j = {{"sections",
        {{"basic_info", statements(d.basic_info)},
         {"background_activity", statements(d.background_activity)},
         {"abnormal_events", events},
         {"impression", statements(d.impression)}}},
       {"decisions", decisions},
       {"analyses", analyses},
       {"coarse_analyses", d.coarse_analyses},
       {"fine_analyses", d.fine_analyses},
       {"degraded", d.degraded}};
}

void from_json(const nlohmann::json& j, ReportDraft& d) {
  d = ReportDraft{};
  auto statements = [](const nlohmann::json& a) {
    std::vector<Statement> v;
    for (const auto& s : a) v.push_back({s.at("text").get<std::string>(), s.at("provenance").get<std::vector<std::string>>()});
    return v;
  };
  const auto& s = j.at("sections");
  d.basic_info = statements(s.at("basic_info"));
  d.background_activity = statements(s.at("background_activity"));
  d.impression = statements(s.at("impression"));
  for (const auto& e : s.at("abnormal_events")) {
    d.abnormal_events.push_back({e.at("label").get<std::string>(), e.at("t_start").get<double>(),
                                 e.at("t_end").get<double>(), e.at("channels").get<std::vector<std::string>>(),
                                 e.at("confidence").get<double>(), e.at("description").get<std::string>(),
                                 e.at("provenance").get<std::vector<std::string>>()});
  }
  for (const auto& x : j.value("decisions", nlohmann::json::array())) {
    d.decisions.push_back({x.at("segment_index").get<int>(),
                           x.at("decision").get<std::string>() == "refine" ? Decision::Refine : Decision::CoarseSufficient,
                           x.value("reason", std::string())});
  }
  for (const auto& a : j.value("analyses", nlohmann::json::array())) {
    d.analyses.push_back({a.at("id").get<std::string>(), a.at("stage").get<std::string>(), a.at("tool").get<std::string>(),
                          a.at("t_start").get<double>(), a.at("t_end").get<double>(), a.at("ok").get<bool>(),
                          a.value("result", nlohmann::json())});
  }
  d.coarse_analyses = j.value("coarse_analyses", 0);
  d.fine_analyses = j.value("fine_analyses", 0);
  d.degraded = j.value("degraded", false);
}

std::vector<std::string> provenance_violations(const ReportDraft& d) {
  std::set<std::string> known;
  for (const auto& a : d.analyses) known.insert(a.id);
  std::vector<std::string> out;
  auto check = [&](const std::string& section, std::size_t i, const std::vector<std::string>& prov) {
    if (prov.empty()) out.push_back(section + "[" + std::to_string(i) + "]");
    for (const auto& id : prov) {
      if (!known.count(id)) out.push_back(id);
    }
  };
  for (std::size_t i = 0; i < d.basic_info.size(); ++i) check("basic_info", i, d.basic_info[i].provenance);
  for (std::size_t i = 0; i < d.background_activity.size(); ++i) {
    check("background_activity", i, d.background_activity[i].provenance);
  }
  for (std::size_t i = 0; i < d.abnormal_events.size(); ++i) check("abnormal_events", i, d.abnormal_events[i].provenance);
  for (std::size_t i = 0; i < d.impression.size(); ++i) check("impression", i, d.impression[i].provenance);
  return out;
}

}  // namespace eegagent
