// SPDX-License-Identifier: Apache-2.0
#include "eegagent/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "eegagent/error.hpp"
#include "eegagent/features.hpp"
#include "eegagent/perception.hpp"
#include "eegagent/text.hpp"
#include "parallel.hpp"

namespace eegagent {
namespace {

constexpr double kEps = 1e-9;
constexpr double kScoreTie = 1e-12;
constexpr std::size_t kPersistentRun = 3;

bool near_multiple(double len, double step, int max_count) {
  const double k = std::round(len / step);
  return k >= 1 && k <= max_count && std::abs(len - k * step) <= 1e-6;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string interval_text(double a, double b) {
  return "from " + format_number(a) + " s to " + format_number(b) + " s";
}

}  // namespace

std::vector<TimeSegment> partition(double t_start_s, double t_end_s, double dt_s, std::optional<double> duration_s) {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) fail(ErrorCode::OutOfRange, "step must be positive");
  if (!std::isfinite(t_start_s) || !std::isfinite(t_end_s) || t_start_s < 0.0 || !(t_start_s < t_end_s)) {
    fail(ErrorCode::OutOfRange, "interval [" + format_number(t_start_s) + ", " + format_number(t_end_s) +
                                    "] must satisfy 0 <= start < end");
  }
  if (duration_s && t_end_s > *duration_s + kEps) {
    fail(ErrorCode::OutOfRange, "interval ends at " + format_number(t_end_s) + " s, after the recording end (" +
                                    format_number(*duration_s) + " s)");
  }
  const auto n = static_cast<int>(std::ceil((t_end_s - t_start_s) / dt_s - kEps));
  std::vector<TimeSegment> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 1)));
  for (int i = 0; i < std::max(n, 1); ++i) {
    TimeSegment s;
    s.index = i;
    s.t_start_s = i == 0 ? t_start_s : out.back().t_end_s;
    s.t_end_s = i + 1 >= n ? t_end_s : t_start_s + dt_s * static_cast<double>(i + 1);
    s.partial = s.length() < dt_s - kEps;
    out.push_back(s);
  }
  return out;
}

ToolPlan default_plan(const TimeSegment& seg, double recording_duration_s) {
  ToolPlan p;
  p.segment_index = seg.index;
  const double len = seg.length();
  const bool at_end = std::abs(seg.t_end_s - recording_duration_s) <= 1e-6;
  if (len <= kMaxFeatureWindowS + kEps) {
    if (near_multiple(len, 10.0, 6) || (at_end && len > 10.0 - kEps && len <= kMaxFeatureWindowS) ||
        (at_end && seg.t_start_s <= kEps && len < 10.0)) {
      p.tools.push_back("slowSeizBckg");
    } else if (near_multiple(len, 1.0, 60)) {
      p.tools.push_back("seizArtiBckg");
    }
    p.tools.push_back("compute_amplitude");
    if (len >= kMinPsdWindowS - kEps) p.tools.push_back("compute_psd");
  }
  return p;
}

double FusionConfig::weight(const std::string& tool) const {
  auto it = tool_weights.find(tool);
  return it == tool_weights.end() ? 1.0 : it->second;
}

int FusionConfig::rank(const std::string& tool) const {
  auto it = std::find(priority.begin(), priority.end(), tool);
  return static_cast<int>(it - priority.begin());
}

SpatialExtent spatial_extent(const nlohmann::json& amplitude_payload) {
  SpatialExtent e;
  double max_rms = 0.0;
  for (const auto& c : amplitude_payload) max_rms = std::max(max_rms, c.at("rms_uv").get<double>());
  if (amplitude_payload.empty() || max_rms <= kEps) return e;
  for (const auto& c : amplitude_payload) {
    if (c.at("rms_uv").get<double>() >= 0.5 * max_rms) e.channels.push_back(c.at("channel").get<std::string>());
  }
  e.kind = static_cast<double>(e.channels.size()) >= 0.75 * static_cast<double>(amplitude_payload.size())
               ? "generalized"
               : "focal";
  return e;
}

std::string describe_label(const std::string& label) {
  if (label == "slow") return "slow-wave activity";
  if (label == "seiz") return "seizure-like rhythmic activity";
  if (label == "artf") return "artifact";
  if (label == "eyem") return "eye-movement activity";
  if (label == "muscle") return "muscle artifact";
  if (label == "abnormal") return "abnormal activity";
  if (is_background_label(label)) return "background activity";
  return label + " activity";
}

bool is_background_label(const std::string& label) {
  return label == "bckg" || label == "normal" || label == "none" || label == "unclassified";
}

FusedResult fuse(const TimeSegment& seg, const std::vector<ToolResult>& results, const FusionConfig& cfg) {
  FusedResult r;
  r.segment_index = seg.index;
  r.t_start_s = seg.t_start_s;
  r.t_end_s = seg.t_end_s;
  r.label = "unclassified";
  r.extent = "unknown";
  bool any_ok = false;
  double best = -1.0;
  int best_rank = 0;

  for (const auto& res : results) {
    Evidence ev{res.tool, res.ok, {}};
    if (!res.ok) {
      ev.digest = res.error_code + ": " + res.error_message;
      r.degraded = true;
      r.evidence.push_back(std::move(ev));
      continue;
    }
    any_ok = true;
    const auto* spec = find_tool(res.tool);
    if (spec && spec->parametric()) {
      const auto sum = summarize_classifier_payload(*spec, res.payload);
      const double w = cfg.weight(spec->name);
      const int rank = cfg.rank(spec->name);
      std::ostringstream d;
      for (const auto& [label, p] : sum.max_probability) {
        d << (d.tellp() > 0 ? " " : "") << label << "=" << format_number(p);
        const double score = w * p;
        const bool better = score > best + kScoreTie;
        const bool tie_won = std::abs(score - best) <= kScoreTie && rank < best_rank;
        if (better || tie_won) {
          best = score;
          best_rank = rank;
          r.label = label;
          r.source_tool = spec->name;
        }
      }
      ev.digest = d.str();
    } else if (res.tool == "compute_amplitude") {
      const auto ext = spatial_extent(res.payload);
      double sum = 0.0, max_rms = 0.0;
      std::string max_channel;
      for (const auto& c : res.payload) {
        const double v = c.at("rms_uv").get<double>();
        sum += v;
        if (v > max_rms) {
          max_rms = v;
          max_channel = c.at("channel").get<std::string>();
        }
      }
      const double mean = res.payload.empty() ? 0.0 : sum / static_cast<double>(res.payload.size());
      r.features["mean_rms_uv"] = mean;
      r.features["max_rms_uv"] = max_rms;
      r.features["max_rms_channel"] = max_channel;
      r.extent = ext.kind;
      r.focal_channels = ext.kind == "focal" ? ext.channels : std::vector<std::string>{};
      ev.digest = "mean RMS " + format_number(mean, 2) + " uV, " + ext.kind;
    } else if (res.tool == "compute_psd") {
      std::vector<double> peaks, alpha_peaks;
      std::map<std::string, double> band_sum;
      double all = 0.0;
      for (const auto& c : res.payload.at("channels")) {
        peaks.push_back(c.at("peak_frequency_hz").get<double>());
        alpha_peaks.push_back(c.at("alpha_range_peak_hz").get<double>());
        for (const auto& [band, p] : c.at("bands_uv2").items()) {
          band_sum[band] += p.get<double>();
          all += p.get<double>();
        }
      }
      nlohmann::json ratios = nlohmann::json::object();
      for (const auto& [band, p] : band_sum) ratios[band] = all > 0.0 ? p / all : 0.0;
      r.features["peak_frequency_hz"] = median(peaks);
      r.features["alpha_range_peak_hz"] = median(alpha_peaks);
      r.features["band_ratio"] = ratios;
      ev.digest = "median peak " + format_number(median(peaks), 2) + " Hz";
    } else if (res.tool == "compute_symmetry") {
      std::optional<double> lowest;
      for (const auto& p : res.payload) {
        if (p.at("r").is_number()) lowest = std::min(lowest.value_or(1.0), p.at("r").get<double>());
      }
      r.features["min_pair_r"] = lowest ? nlohmann::json(*lowest) : nlohmann::json("undefined");
      ev.digest = lowest ? "lowest pair r " + format_number(*lowest) : "no defined pair correlation";
    } else {
      ev.digest = "completed";
    }
    r.evidence.push_back(std::move(ev));
  }
  if (!any_ok) fail(ErrorCode::NoResults, "segment " + std::to_string(seg.index) + " has no successful tool result");
  r.score = best < 0.0 ? 0.0 : best;
  return r;
}

void to_json(nlohmann::json& j, const FusedResult& r) {
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& e : r.evidence) evidence.push_back({{"tool", e.tool}, {"ok", e.ok}, {"digest", e.digest}});
  j = {{"index", r.segment_index}, {"t_start", r.t_start_s},     {"t_end", r.t_end_s},
       {"label", r.label},         {"source_tool", r.source_tool}, {"score", r.score},
       {"extent", r.extent},       {"focal_channels", r.focal_channels}, {"degraded", r.degraded},
       {"evidence", evidence},     {"features", r.features}};
}

void to_json(nlohmann::json& j, const ExplorationSummary& s) {
  j = {{"interval", {s.t_start_s, s.t_end_s}},
       {"dt", s.dt_s},
       {"segments", s.segments},
       {"assessment", s.assessment},
       {"rhythms", s.rhythms},
       {"localized_events", s.localized_events},
       {"segments_summarized", s.segments_summarized},
       {"degraded_segments", s.degraded_segments}};
}

void summarize_template(ExplorationSummary& s, const std::optional<std::string>& age_band) {
  s.rhythms.clear();
  s.localized_events.clear();
  s.segments_summarized = 0;
  s.degraded_segments = 0;

  std::vector<std::string> findings;
  std::size_t i = 0;
  while (i < s.segments.size()) {
    const auto& head = s.segments[i];
    std::size_t j = i + 1;
    while (j < s.segments.size() && s.segments[j].label == head.label) ++j;
    bool generalized = true;
    std::set<std::string> channels;
    std::vector<double> freqs;
    for (std::size_t k = i; k < j; ++k) {
      const auto& seg = s.segments[k];
      ++s.segments_summarized;
      if (seg.degraded) ++s.degraded_segments;
      generalized = generalized && seg.extent == "generalized";
      channels.insert(seg.focal_channels.begin(), seg.focal_channels.end());
      if (seg.features.contains("peak_frequency_hz")) freqs.push_back(seg.features["peak_frequency_hz"].get<double>());
    }
    if (!is_background_label(head.label)) {
      const auto run = j - i;
      const std::string where = interval_text(head.t_start_s, s.segments[j - 1].t_end_s);
      std::ostringstream text;
      text << (run >= kPersistentRun ? "persistent " : "intermittent ") << (generalized ? "generalized " : "focal ")
           << describe_label(head.label) << " " << where;
      if (!freqs.empty()) text << " (dominant frequency " << format_number(median(freqs), 1) << " Hz)";
      if (!generalized && !channels.empty()) {
        text << " over";
        for (const auto& c : channels) text << " " << c;
      }
      findings.push_back(text.str());
      if (generalized && (head.label == "slow" || head.label == "seiz")) {
        s.rhythms.push_back(text.str());
      } else {
        s.localized_events.push_back(text.str());
      }
    }
    i = j;
  }

  std::ostringstream out;
  out << "Explored " << interval_text(s.t_start_s, s.t_end_s) << " in " << s.segments.size() << " segment"
      << (s.segments.size() == 1 ? "" : "s") << " of " << format_number(s.dt_s) << " s (" << s.segments_summarized
      << " summarized";
  if (s.degraded_segments) out << ", " << s.degraded_segments << " degraded";
  out << ").\n";
  if (age_band) out << "Patient age band: " << *age_band << ".\n";
  if (findings.empty()) {
    out << "Global assessment: background activity throughout; no slowing or seizure-like activity identified.\n";
  } else {
    out << "Global assessment: " << findings.front() << ".\n";
    for (std::size_t k = 1; k < findings.size(); ++k) out << "Also: " << findings[k] << ".\n";
  }
  s.assessment = out.str();
}

ExplorationSummary explore(const Toolbox& toolbox, double t_start_s, double t_end_s, const ExploreOptions& opt) {
  const auto& rec = toolbox.recording();
  const auto segments = partition(t_start_s, t_end_s, opt.dt_s, rec.duration_s());
  ExplorationSummary s;
  s.t_start_s = t_start_s;
  s.t_end_s = t_end_s;
  s.dt_s = opt.dt_s;
  s.segments.resize(segments.size());

  auto analyse = [&](const TimeSegment& seg) {
    const auto plan = opt.planner ? opt.planner(seg) : default_plan(seg, rec.duration_s());
    std::vector<ToolResult> results;
    for (const auto& tool : plan.tools) {
      results.push_back(toolbox.dispatch({tool, {{"start", seg.t_start_s}, {"end", seg.t_end_s}}}));
    }
    try {
      return fuse(seg, results, opt.fusion);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoResults) throw;
      FusedResult r;
      r.segment_index = seg.index;
      r.t_start_s = seg.t_start_s;
      r.t_end_s = seg.t_end_s;
      r.label = "unclassified";
      r.extent = "unknown";
      r.degraded = true;
      for (const auto& res : results) r.evidence.push_back({res.tool, false, res.error_code + ": " + res.error_message});
      if (plan.tools.empty()) r.evidence.push_back({"plan", false, "no tool fits a segment of this length"});
      return r;
    }
  };

  detail::parallel_for(segments.size(), opt.threads, [&](std::size_t k) { s.segments[k] = analyse(segments[k]); });

  const auto info = base_info(rec, toolbox.knowledge());
  summarize_template(s, info.age_band);
  if (opt.narrator) {
    const nlohmann::json digest = s;
    s.assessment = opt.narrator->complete(
        {{"system",
          "Write a short clinical summary of these EEG segment findings. Mention global assessments, rhythmic "
          "patterns and localized events. Use only the findings given."},
         {"user", digest.dump(2)}});
  }
  return s;
}

std::string to_text(const ExplorationSummary& s) {
  std::ostringstream out;
  out << s.assessment;
  out << "\nSegments:\n";
  for (const auto& r : s.segments) {
    out << "  [" << format_number(r.t_start_s) << ", " << format_number(r.t_end_s) << ") " << r.label;
    if (!r.source_tool.empty()) out << " (" << r.source_tool << " " << format_fixed(r.score, 3) << ")";
    out << " " << r.extent;
    if (r.degraded) out << " degraded";
    out << "\n";
  }
  return out.str();
}

}  // namespace eegagent
