// SPDX-License-Identifier: Apache-2.0
#include "eegagent/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <tuple>

#include "eegagent/error.hpp"
#include "eegagent/montage.hpp"
#include "eegagent/text.hpp"
#include "parallel.hpp"

namespace eegagent {
namespace {

constexpr double kEps = 1e-9;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r\"");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(a, b - a + 1));
}

double probability_of(const WindowProbabilities& w, const std::string& label, std::size_t output = 0) {
  return w.at(output).probs.at(label);
}

}  // namespace

void to_json(nlohmann::json& j, const EventInterval& e) {
  j = {{"channel", e.channel}, {"start", e.t_start_s}, {"end", e.t_end_s}, {"label", e.label},
       {"confidence", e.confidence}};
}

void from_json(const nlohmann::json& j, EventInterval& e) {
  e.channel = j.at("channel").get<std::string>();
  e.t_start_s = j.at("start").get<double>();
  e.t_end_s = j.at("end").get<double>();
  e.label = j.at("label").get<std::string>();
  e.confidence = j.value("confidence", 1.0);
  if (!(e.t_start_s < e.t_end_s)) fail(ErrorCode::InvalidArgument, "event must have start < end");
  if (e.confidence < 0.0 || e.confidence > 1.0) fail(ErrorCode::InvalidArgument, "event confidence must be in [0, 1]");
}

void DetectionConfig::validate() const {
  if (!(fine_window_s > 0.0 && fine_window_s < coarse_window_s && coarse_window_s <= scan_window_s)) {
    fail(ErrorCode::InvalidArgument, "detection windows must satisfy 0 < fine < coarse <= scan");
  }
  if (!(escalation_threshold > 0.0 && escalation_threshold < 1.0)) {
    fail(ErrorCode::InvalidArgument, "escalation threshold must be in (0, 1)");
  }
  if (merge_gap_s < 0.0) fail(ErrorCode::InvalidArgument, "merge gap must be non-negative");
}

DetectionConfig detection_config_from_json(const nlohmann::json& j) {
  DetectionConfig c;
  c.coarse_window_s = j.value("coarse_window_s", c.coarse_window_s);
  c.fine_window_s = j.value("fine_window_s", c.fine_window_s);
  c.scan_window_s = j.value("scan_window_s", c.scan_window_s);
  c.escalation_threshold = j.value("escalation_threshold", c.escalation_threshold);
  c.merge_gap_s = j.value("merge_gap_s", c.merge_gap_s);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const DetectionConfig& c) {
  j = {{"coarse_window_s", c.coarse_window_s}, {"fine_window_s", c.fine_window_s},
       {"scan_window_s", c.scan_window_s},     {"escalation_threshold", c.escalation_threshold},
       {"merge_gap_s", c.merge_gap_s},         {"threads", c.threads}};
}

TargetRoute target_route(const std::string& target) {
  const auto t = lower(target);
  if (t == "seiz" || t == "spsw" || t == "gped" || t == "pled") return {"seiz", "seiz", "seizNormal", "seiz"};
  if (t == "slow") return {"slow", "slow", "", ""};
  if (t == "artf") return {"artf", "", "seizArtiBckg", "artf"};
  if (t == "eyem") return {"eyem", "", "eyemMuscle", "eyem"};
  if (t == "muscle") return {"muscle", "", "eyemMuscle", "muscle"};
  fail(ErrorCode::InvalidArgument, "unknown detection target '" + target + "' (use seiz, slow, artf, eyem or muscle)");
}

void sort_events(std::vector<EventInterval>& events) {
  std::sort(events.begin(), events.end(), [](const EventInterval& a, const EventInterval& b) {
    return std::tie(a.channel, a.t_start_s, a.t_end_s, a.label, a.confidence) <
           std::tie(b.channel, b.t_start_s, b.t_end_s, b.label, b.confidence);
  });
}

std::vector<EventInterval> merge_adjacent(std::vector<EventInterval> events, double gap_s) {
  std::sort(events.begin(), events.end(), [](const EventInterval& a, const EventInterval& b) {
    return std::tie(a.channel, a.label, a.t_start_s, a.t_end_s) < std::tie(b.channel, b.label, b.t_start_s, b.t_end_s);
  });
  std::vector<EventInterval> out;
  for (auto& e : events) {
    if (!out.empty()) {
      auto& last = out.back();
      if (last.channel == e.channel && last.label == e.label && e.t_start_s - last.t_end_s < gap_s) {
        last.t_end_s = std::max(last.t_end_s, e.t_end_s);
        last.confidence = std::max(last.confidence, e.confidence);
        continue;
      }
    }
    out.push_back(std::move(e));
  }
  sort_events(out);
  return out;
}

double iou(const EventInterval& a, const EventInterval& b) {
  if (a.channel != b.channel) return 0.0;
  const double inter = std::max(0.0, std::min(a.t_end_s, b.t_end_s) - std::max(a.t_start_s, b.t_start_s));
  const double uni = std::max(a.t_end_s, b.t_end_s) - std::min(a.t_start_s, b.t_start_s);
  return uni > 0.0 ? inter / uni : 0.0;
}

DetectionResult detect(const Recording& rec, const ClassifierBackend& backend, const std::vector<std::string>& targets,
                       const DetectionConfig& cfg) {
  cfg.validate();
  if (targets.empty()) fail(ErrorCode::InvalidArgument, "at least one detection target is required");
  std::vector<TargetRoute> routes;
  for (const auto& t : targets) routes.push_back(target_route(t));

  const double duration = rec.duration_s();
  const auto& coarse_tool = tool_spec("slowSeizBckg");
  const auto channels = rec.channel_labels();

  DetectionResult result;
  std::mutex mutex;

  // (a) scan: one batch of coarse windows per scan window
  std::vector<Segment> coarse;
  for (double a = 0.0; a < duration - kEps; a += cfg.coarse_window_s) {
    coarse.push_back(Segment::whole_channels(rec, a, std::min(a + cfg.coarse_window_s, duration)));
  }
  const auto per_scan = static_cast<std::size_t>(std::max(1.0, std::floor(cfg.scan_window_s / cfg.coarse_window_s + kEps)));
  const std::size_t scans = (coarse.size() + per_scan - 1) / per_scan;
  std::vector<WindowProbabilities> coarse_out(coarse.size());
  const bool need_coarse = std::any_of(routes.begin(), routes.end(), [](const auto& r) { return !r.coarse_label.empty(); });
  if (need_coarse) {
    detail::parallel_for(scans, cfg.threads, [&](std::size_t s) {
      const auto first = s * per_scan;
      const auto n = std::min(per_scan, coarse.size() - first);
      auto part = classify(coarse_tool, rec, std::span<const Segment>(coarse).subspan(first, n), backend);
      std::move(part.begin(), part.end(), coarse_out.begin() + static_cast<std::ptrdiff_t>(first));
    });
    result.stats.scan_windows = static_cast<int>(scans);
    result.stats.coarse_windows = static_cast<int>(coarse.size());
    result.stats.backend_calls += static_cast<int>(scans);
  }

  // (b) escalate
  struct Job {
    std::size_t window;
    const TargetRoute* route;
  };
  std::vector<Job> jobs;
  std::vector<bool> escalated(coarse.size(), false);
  for (const auto& route : routes) {
    for (std::size_t w = 0; w < coarse.size(); ++w) {
      const bool positive =
          route.coarse_label.empty() || probability_of(coarse_out[w], route.coarse_label) >= cfg.escalation_threshold;
      if (!positive) continue;
      if (route.fine_tool.empty()) {
        result.events.push_back({std::string(kWholeChannel), coarse[w].t_start_s, coarse[w].t_end_s, route.target,
                                 probability_of(coarse_out[w], route.coarse_label)});
        continue;
      }
      escalated[w] = true;
      jobs.push_back({w, &route});
    }
  }
  result.stats.escalated_windows = static_cast<int>(std::count(escalated.begin(), escalated.end(), true));

  // (c) fine analysis per channel on the full 1 s subwindows
  detail::parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto& job = jobs[k];
    const auto& tool = tool_spec(job.route->fine_tool);
    const auto& win = coarse[job.window];
    std::vector<Segment> fine;
    for (double a = win.t_start_s; a + cfg.fine_window_s <= win.t_end_s + kEps; a += cfg.fine_window_s) {
      fine.push_back(Segment{{}, a, a + cfg.fine_window_s, channels});
    }
    if (fine.empty()) return;
    const auto out = classify(tool, rec, std::span<const Segment>(fine), backend);
    std::vector<EventInterval> found;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      for (const auto& ch : out[i]) {
        const double p = ch.probs.at(job.route->fine_label);
        if (p >= cfg.escalation_threshold) {
          found.push_back({ch.channel, fine[i].t_start_s, fine[i].t_end_s, job.route->target, p});
        }
      }
    }
    std::lock_guard lock(mutex);
    result.stats.fine_windows += static_cast<int>(fine.size() * channels.size());
    result.stats.backend_calls += 1;
    std::move(found.begin(), found.end(), std::back_inserter(result.events));
  });

  result.events = merge_adjacent(std::move(result.events), cfg.merge_gap_s);
  return result;
}

EvalReport evaluate(const std::vector<EventInterval>& predictions, const std::vector<EventInterval>& references,
                    double iou_threshold) {
  EvalReport r;
  r.empty_predictions = predictions.empty();
  r.empty_references = references.empty();
  struct Pair {
    double iou;
    std::size_t ref, pred;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < references.size(); ++i) {
    for (std::size_t j = 0; j < predictions.size(); ++j) {
      const double v = iou(references[i], predictions[j]);
      if (v > iou_threshold && references[i].label == predictions[j].label) pairs.push_back({v, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.iou, a.ref, a.pred) < std::tie(a.iou, b.ref, b.pred);
  });
  std::vector<bool> ref_used(references.size(), false), pred_used(predictions.size(), false);
  for (const auto& p : pairs) {
    if (ref_used[p.ref] || pred_used[p.pred]) continue;
    ref_used[p.ref] = pred_used[p.pred] = true;
    r.matches.emplace_back(p.ref, p.pred);
  }
  std::sort(r.matches.begin(), r.matches.end());
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (!ref_used[i]) r.unmatched_references.push_back(i);
  }
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (!pred_used[j]) r.unmatched_predictions.push_back(j);
  }
  const auto m = static_cast<double>(r.matches.size());
  r.hit_rate = references.empty() ? 0.0 : m / static_cast<double>(references.size());
  r.false_rate = predictions.empty()
                     ? 0.0
                     : static_cast<double>(r.unmatched_predictions.size()) / static_cast<double>(predictions.size());
  return r;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::json matches = nlohmann::json::array();
  for (const auto& [ref, pred] : r.matches) matches.push_back({{"reference", ref}, {"prediction", pred}});
  j = {{"hit_rate", r.hit_rate},
       {"false_rate", r.false_rate},
       {"matches", matches},
       {"unmatched_references", r.unmatched_references},
       {"unmatched_predictions", r.unmatched_predictions},
       {"empty_predictions", r.empty_predictions},
       {"empty_references", r.empty_references}};
}

ScriptedBackend oracle_backend(const std::vector<EventInterval>& events) {
  ScriptedBackend b;
  const auto& coarse = tool_spec("slowSeizBckg");
  for (const auto& e : events) {
    const auto route = target_route(e.label);
    if (!route.coarse_label.empty()) {
      b.add({coarse.name, "*", e.t_start_s, e.t_end_s, one_hot(coarse, route.coarse_label), {}});
    }
    if (!route.fine_tool.empty()) {
      const auto& fine = tool_spec(route.fine_tool);
      b.add({fine.name, e.channel, e.t_start_s, e.t_end_s, one_hot(fine, route.fine_label), {}});
    }
  }
  return b;
}

std::string events_to_jsonl(const std::vector<EventInterval>& events) {
  std::string out;
  for (const auto& e : events) out += nlohmann::json(e).dump() + "\n";
  return out;
}

std::vector<EventInterval> events_from_jsonl(std::string_view text) {
  std::vector<EventInterval> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<EventInterval>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidArgument, "events line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EventInterval> read_reference_csv(std::string_view text, const std::vector<std::string>& channel_names) {
  static const char* kCodes[] = {"", "spsw", "gped", "pled", "eyem", "artf", "bckg"};
  std::vector<EventInterval> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(t);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(trim(cell));
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::InvalidArgument, "reference line " + std::to_string(n) + ": " + why);
    };
    if (f.size() < 4 || f.size() > 5) bad("expected channel,start,end,label[,confidence]");
    double start = 0.0, end = 0.0, conf = 1.0;
    try {
      start = std::stod(f[1]);
      end = std::stod(f[2]);
      if (f.size() == 5) conf = std::stod(f[4]);
    } catch (const std::exception&) {
      if (out.empty() && n == 1) continue;  // header
      bad("start, end and confidence must be numbers");
    }
    std::string channel = f[0];
    if (!channel.empty() && std::all_of(channel.begin(), channel.end(), ::isdigit)) {
      const auto idx = std::stoul(channel);
      if (idx >= channel_names.size()) bad("channel index " + channel + " has no name");
      channel = channel_names[idx];
    }
    channel = channel == kWholeChannel ? channel : normalize_label(channel);
    std::string label = lower(f[3]);
    if (!label.empty() && std::all_of(label.begin(), label.end(), ::isdigit)) {
      const auto code = std::stoul(label);
      if (code < 1 || code > 6) bad("unknown label code " + label);
      label = kCodes[code];
    }
    if (label == "bckg") continue;
    if (label == "spsw" || label == "gped" || label == "pled") label = "seiz";
    if (!(start < end)) bad("start must be before end");
    out.push_back({channel, start, end, label, conf});
  }
  return merge_adjacent(std::move(out), kEps);
}

std::vector<EventInterval> load_reference_csv(const std::filesystem::path& path,
                                              const std::vector<std::string>& channel_names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_reference_csv(ss.str(), channel_names);
}

}  // namespace eegagent
