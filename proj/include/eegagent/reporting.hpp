// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "eegagent/classifiers.hpp"
#include "eegagent/detection.hpp"
#include "eegagent/knowledge.hpp"
#include "eegagent/llm.hpp"
#include "json.hpp"

namespace eegagent {

inline constexpr double kReportCoarseWindowS = 10.0;
inline constexpr double kReportFineWindowS = 1.0;
inline constexpr double kReportFeatureBlockS = 60.0;

/// One tool result a statement can point to.
struct AnalysisRecord {
  std::string id;     // "info", "coarse-3", "fine-3-7", "feature-0"
  std::string stage;  // info | coarse | fine | feature
  std::string tool;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  bool ok = true;
  nlohmann::json result;
};

struct Statement {
  std::string text;
  std::vector<std::string> provenance;  // AnalysisRecord ids
};

struct AbnormalEvent {
  std::string label;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::vector<std::string> channels;
  double confidence = 0.0;
  std::string description;
  std::vector<std::string> provenance;
};

enum class Decision { CoarseSufficient, Refine };
std::string_view to_string(Decision d);

struct RefineDecision {
  int segment_index = 0;
  Decision decision = Decision::CoarseSufficient;
  std::string reason;
};

struct ReportDraft {
  std::vector<Statement> basic_info;
  std::vector<Statement> background_activity;
  std::vector<AbnormalEvent> abnormal_events;
  std::vector<Statement> impression;
  std::vector<RefineDecision> decisions;
  std::vector<AnalysisRecord> analyses;
  int coarse_analyses = 0;
  int fine_analyses = 0;
  bool degraded = false;
};

void to_json(nlohmann::json& j, const ReportDraft& d);
void from_json(const nlohmann::json& j, ReportDraft& d);

/// Ids referenced by statements that name no analysis in the draft, plus
/// one "<section>[i]" entry per statement without any provenance.
std::vector<std::string> provenance_violations(const ReportDraft& d);

class RefineDecider {
 public:
  virtual ~RefineDecider() = default;
  virtual RefineDecision decide(int segment_index, const ToolSpec& tool, const ClassProbabilities& coarse) const = 0;
};

/// Refine iff the largest non-background probability reaches the threshold.
class DeterministicDecider final : public RefineDecider {
 public:
  explicit DeterministicDecider(double threshold = 0.5) : threshold_(threshold) {}
  RefineDecision decide(int segment_index, const ToolSpec& tool, const ClassProbabilities& coarse) const override;

 private:
  double threshold_;
};

/// Asks a chat model; replies are coerced to the two decisions. After two
/// unusable replies for one window the deterministic rule decides.
class ChatDecider final : public RefineDecider {
 public:
  explicit ChatDecider(std::shared_ptr<const TextGenerator> generator, double fallback_threshold = 0.5)
      : generator_(std::move(generator)), fallback_(fallback_threshold) {}
  RefineDecision decide(int segment_index, const ToolSpec& tool, const ClassProbabilities& coarse) const override;

 private:
  std::shared_ptr<const TextGenerator> generator_;
  DeterministicDecider fallback_;
};

/// "refine" / "coarse_sufficient" from free text; nullopt when neither is clear.
std::optional<Decision> parse_decision(std::string_view reply);

enum class RenderMode { Template, Chat };
RenderMode render_mode_from_string(std::string_view s);

struct ReportOptions {
  RenderMode mode = RenderMode::Template;
  std::shared_ptr<const TextGenerator> narrator;  // required for chat mode
  double event_threshold = 0.5;
  int threads = 1;
};

struct ReportResult {
  std::string text;
  ReportDraft draft;
};

/// Full-recording 10 s sweep, decision-gated 1 s refinement, template accumulation.
ReportResult generate_report(const Recording& rec, const KnowledgeBase& kb, const ClassifierBackend& backend,
                             const RefineDecider& decider, const ReportOptions& opt = {});

/// Template rendering is byte-deterministic; chat mode returns the narrator's text.
std::string render(const ReportDraft& draft, RenderMode mode = RenderMode::Template,
                   const TextGenerator* narrator = nullptr);

}  // namespace eegagent
