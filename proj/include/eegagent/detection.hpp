// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eegagent/classifiers.hpp"
#include "eegagent/edf.hpp"
#include "json.hpp"

namespace eegagent {

/// A detected or annotated event. Channel "all" marks whole-channel events.
struct EventInterval {
  std::string channel;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::string label;
  double confidence = 1.0;

  bool operator==(const EventInterval&) const = default;
};

void to_json(nlohmann::json& j, const EventInterval& e);
void from_json(const nlohmann::json& j, EventInterval& e);

struct DetectionConfig {
  double coarse_window_s = 10.0;
  double fine_window_s = 1.0;
  double scan_window_s = 60.0;
  double escalation_threshold = 0.5;
  double merge_gap_s = 1.0;
  int threads = 1;

  /// Throws InvalidArgument unless 0 < fine < coarse <= scan and the threshold is in (0, 1).
  void validate() const;
};

DetectionConfig detection_config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const DetectionConfig& c);

/// How a target label is searched for.
struct TargetRoute {
  std::string target;       // requested label
  std::string coarse_label;  // slowSeizBckg label that escalates; empty: every window escalates
  std::string fine_tool;     // empty: coarse windows are the events
  std::string fine_label;
};

/// Route for "seiz", "slow", "artf", "eyem" or "muscle"; SPSW/GPED/PLED-style
/// names map to "seiz". Throws InvalidArgument.
TargetRoute target_route(const std::string& target);

struct DetectionStats {
  int scan_windows = 0;
  int coarse_windows = 0;
  int escalated_windows = 0;
  int fine_windows = 0;  // per-channel 1 s analyses
  int backend_calls = 0;
};

struct DetectionResult {
  std::vector<EventInterval> events;
  DetectionStats stats;
};

/// Coarse-to-fine search. Output is sorted by (channel, t_start).
DetectionResult detect(const Recording& rec, const ClassifierBackend& backend, const std::vector<std::string>& targets,
                       const DetectionConfig& cfg = {});

/// Merges same-channel, same-label events whose gap is strictly below
/// `gap_s`. Canonically sorted; idempotent.
std::vector<EventInterval> merge_adjacent(std::vector<EventInterval> events, double gap_s = 1.0);

/// Canonical order: channel, start, end, label, confidence.
void sort_events(std::vector<EventInterval>& events);

/// Temporal intersection over union; 0 across channels.
double iou(const EventInterval& a, const EventInterval& b);

struct EvalReport {
  double hit_rate = 0.0;
  double false_rate = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (reference, prediction)
  std::vector<std::size_t> unmatched_references;
  std::vector<std::size_t> unmatched_predictions;
  bool empty_predictions = false;
  bool empty_references = false;
};

void to_json(nlohmann::json& j, const EvalReport& r);

/// Greedy one-to-one matching by descending IoU; a pair counts when IoU
/// strictly exceeds the threshold.
EvalReport evaluate(const std::vector<EventInterval>& predictions, const std::vector<EventInterval>& references,
                    double iou_threshold = 0.7);

/// Backend that answers exactly like the given ground truth: coarse windows
/// overlapping an event are positive, and so are that event's fine windows on its channel.
ScriptedBackend oracle_backend(const std::vector<EventInterval>& events);

/// One JSON object per line.
std::string events_to_jsonl(const std::vector<EventInterval>& events);
std::vector<EventInterval> events_from_jsonl(std::string_view text);

/// Reference annotations, one event per line: channel,start,end,label[,confidence].
/// A header line, blank lines and '#' comments are skipped. A numeric channel
/// indexes `channel_names`; numeric labels use the TUEV codes (1 spsw, 2 gped,
/// 3 pled, 4 eyem, 5 artf, 6 bckg). spsw/gped/pled become "seiz"; bckg rows
/// are dropped. Contiguous rows are merged.
std::vector<EventInterval> read_reference_csv(std::string_view text, const std::vector<std::string>& channel_names = {});
std::vector<EventInterval> load_reference_csv(const std::filesystem::path& path,
                                              const std::vector<std::string>& channel_names = {});

}  // namespace eegagent
