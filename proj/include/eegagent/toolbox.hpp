// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "eegagent/classifiers.hpp"
#include "eegagent/edf.hpp"
#include "eegagent/knowledge.hpp"
#include "json.hpp"

namespace eegagent {

/// A named tool invocation. Arguments: optional "start"/"end" (seconds) and
/// optional "channels" (list of labels).
struct ToolCall {
  std::string tool;
  nlohmann::json arguments = nlohmann::json::object();
};

/// The observation fed back to the planner.
struct ToolResult {
  std::string tool;
  nlohmann::json arguments = nlohmann::json::object();
  std::optional<double> t_start_s;
  std::optional<double> t_end_s;
  bool ok = true;
  std::string error_code;  // set when !ok
  std::string error_message;
  nlohmann::json payload;
  double wall_time_ms = 0.0;
  int backend_calls = 0;

  double seconds_analyzed() const { return t_start_s && t_end_s ? *t_end_s - *t_start_s : 0.0; }
};

/// Canonical form: everything except wall time, so traces replay byte-identically.
void to_json(nlohmann::json& j, const ToolResult& r);

/// Validated, resolved form of a call.
struct ResolvedCall {
  const ToolSpec* spec = nullptr;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::vector<std::string> channels;
  std::vector<Segment> windows;  // classifier windows; empty for non-parametric tools
};

/// Binds the tool table to one recording and its backends.
class Toolbox {
 public:
  Toolbox(const Recording& rec, const KnowledgeBase& kb, const ClassifierBackend& backend,
          std::string recording_ref = {})
      : rec_(rec), kb_(kb), backend_(backend), ref_(std::move(recording_ref)) {}

  /// Checks a call against the tool table. Throws UnknownTool or ArgumentValidation.
  ResolvedCall resolve(const ToolCall& call) const;

  /// Runs a call. Tool failures become error observations; only
  /// BackendUnavailable propagates.
  ToolResult dispatch(const ToolCall& call) const;

  /// Runs a call and returns its payload; every failure throws.
  nlohmann::json run(const ToolCall& call) const;

  const Recording& recording() const { return rec_; }
  const KnowledgeBase& knowledge() const { return kb_; }
  const ClassifierBackend& backend() const { return backend_; }
  const std::string& recording_ref() const { return ref_; }

  int backend_calls() const { return backend_calls_.load(); }

 private:
  nlohmann::json execute(const ResolvedCall& call) const;

  const Recording& rec_;
  const KnowledgeBase& kb_;
  const ClassifierBackend& backend_;
  std::string ref_;
  mutable std::atomic<int> backend_calls_{0};
};

/// Parametric payload digest: highest probability per label across windows
/// and channels, and the label holding the overall maximum among non-background
/// classes when it reaches `threshold`, else the background label.
struct ClassifierSummary {
  std::vector<std::pair<std::string, double>> max_probability;
  std::string label;
  int positive_windows = 0;
};

ClassifierSummary summarize_classifier_payload(const ToolSpec& tool, const nlohmann::json& payload,
                                               double threshold = 0.5);

/// Markdown-ish listing of the tools for prompts.
std::string describe_tools();

}  // namespace eegagent
