// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eegagent/llm.hpp"
#include "eegagent/toolbox.hpp"
#include "json.hpp"

namespace eegagent {

inline constexpr double kDefaultExplorationStepS = 10.0;

/// One piece of an explored interval: [t_start_s, t_end_s).
struct TimeSegment {
  int index = 0;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  bool partial = false;  // shorter than the step (last segment only)

  double length() const { return t_end_s - t_start_s; }
};

/// Splits [t_start, t_end] into ceil((t_end - t_start) / dt) consecutive
/// segments; only the last may be shorter. Throws OutOfRange.
std::vector<TimeSegment> partition(double t_start_s, double t_end_s, double dt_s,
                                   std::optional<double> duration_s = std::nullopt);

struct ToolPlan {
  int segment_index = 0;
  std::vector<std::string> tools;
};

/// slowSeizBckg (seizArtiBckg when the segment is not a 10 s multiple),
/// compute_amplitude, and compute_psd when the segment is at least 2 s.
ToolPlan default_plan(const TimeSegment& seg, double recording_duration_s);

using SegmentPlanner = std::function<ToolPlan(const TimeSegment&)>;

struct FusionConfig {
  std::map<std::string, double> tool_weights;  // missing tools weigh 1
  std::vector<std::string> priority = {"slowSeizBckg", "seizNormal", "seizArtiBckg", "eyemMuscle", "normalAbnormal"};

  double weight(const std::string& tool) const;
  int rank(const std::string& tool) const;  // lower wins ties
};

struct Evidence {
  std::string tool;
  bool ok = true;
  std::string digest;
};

struct FusedResult {
  int segment_index = 0;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::string label;        // winning classifier label, or "unclassified"
  std::string source_tool;  // tool that produced the label
  double score = 0.0;       // weight x probability of the winner
  std::vector<Evidence> evidence;
  nlohmann::json features = nlohmann::json::object();
  std::string extent;  // generalized | focal | none | unknown
  std::vector<std::string> focal_channels;
  bool degraded = false;
};

/// Weighted argmax over the classifier results of one segment; numeric tools
/// contribute features. Throws NoResults when no result succeeded.
FusedResult fuse(const TimeSegment& seg, const std::vector<ToolResult>& results, const FusionConfig& cfg = {});

/// Spatial extent from a compute_amplitude payload: generalized when at least
/// 75% of channels reach half the largest RMS.
struct SpatialExtent {
  std::string kind = "none";
  std::vector<std::string> channels;  // channels at or above half the max RMS
};

SpatialExtent spatial_extent(const nlohmann::json& amplitude_payload);

/// "slow-wave activity", "seizure-like rhythmic activity", ...
std::string describe_label(const std::string& label);

bool is_background_label(const std::string& label);

struct ExplorationSummary {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double dt_s = kDefaultExplorationStepS;
  std::vector<FusedResult> segments;
  std::string assessment;
  std::vector<std::string> rhythms;
  std::vector<std::string> localized_events;
  int segments_summarized = 0;
  int degraded_segments = 0;
};

void to_json(nlohmann::json& j, const FusedResult& r);
void to_json(nlohmann::json& j, const ExplorationSummary& s);

struct ExploreOptions {
  double dt_s = kDefaultExplorationStepS;
  SegmentPlanner planner;  // default_plan when empty
  FusionConfig fusion;
  std::shared_ptr<const TextGenerator> narrator;  // template summary when null
  int threads = 1;
};

/// Partition, plan, execute, fuse, summarize. Tool failures mark segments
/// degraded; BackendUnavailable propagates.
ExplorationSummary explore(const Toolbox& toolbox, double t_start_s, double t_end_s, const ExploreOptions& opt = {});

/// Deterministic text summary; also fills rhythms and localized events.
void summarize_template(ExplorationSummary& s, const std::optional<std::string>& age_band);

std::string to_text(const ExplorationSummary& s);

}  // namespace eegagent
