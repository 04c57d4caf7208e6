// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eegagent/knowledge.hpp"
#include "eegagent/llm.hpp"
#include "eegagent/toolbox.hpp"
#include "json.hpp"

namespace eegagent {

/// One planner decision: a tool call or a final answer.
struct Action {
  enum class Kind { ToolCall, FinalAnswer };
  Kind kind = Kind::FinalAnswer;
  std::string thought;  // stored, never interpreted
  ToolCall call;
  std::string answer;
};

/// Parses {"thought", "action": {"tool", "arguments"}} or {"thought", "final_answer"}.
/// Surrounding prose is ignored. Throws PolicyProtocolError.
Action parse_action(std::string_view text);

/// Serialized action in the wire format parse_action accepts.
std::string format_action(const Action& a);

/// A completed question/answer exchange kept in session memory.
struct Turn {
  std::string task;
  std::string answer;
  std::vector<ToolResult> observations;
};

struct SessionMemory {
  std::vector<Turn> turns;
};

void to_json(nlohmann::json& j, const Turn& t);
void from_json(const nlohmann::json& j, Turn& t);
void from_json(const nlohmann::json& j, ToolResult& r);

struct TraceStep {
  int index = 0;
  std::string thought;
  Action::Kind kind = Action::Kind::ToolCall;
  ToolCall call;
  std::optional<ToolResult> observation;
  std::string answer;
};

/// Everything the planner sees when choosing its next action.
struct Context {
  std::string task;
  std::string recording_summary;
  std::vector<RetrievedEntry> knowledge;
  std::vector<Turn> memory;
  std::vector<TraceStep> steps;
  std::string protocol_error;  // feedback after an unparseable action
  std::size_t token_budget = 8000;

  /// Prompt text within token_budget: the oldest tool observations are
  /// dropped first, then the oldest prior turns; the task is always kept.
  std::string render() const;
};

/// Rough token count used for the context budget: ceil(chars / 4).
std::size_t estimate_tokens(std::string_view text);

Context assemble_context(std::string task, std::string recording_summary, std::vector<RetrievedEntry> knowledge,
                         const SessionMemory& memory, std::size_t token_budget = 8000);

/// Chooses the next action from the context. Returns raw action text; the
/// loop parses it. Policies may hold per-run state.
class PlannerPolicy {
 public:
  virtual ~PlannerPolicy() = default;
  virtual std::string next(const Context& ctx) = 0;
};

/// Replays a fixed action sequence. Throws PolicyProtocolError once exhausted.
class ScriptedPolicy final : public PlannerPolicy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> actions) : actions_(std::move(actions)) {}
  static ScriptedPolicy from_actions(const std::vector<Action>& actions);
  static ScriptedPolicy from_json(const nlohmann::json& fixture);
  std::string next(const Context& ctx) override;

 private:
  std::vector<std::string> actions_;
  std::size_t next_ = 0;
};

/// Offline planner: screens the requested interval with slowSeizBckg,
/// characterizes it with compute_amplitude, then answers from the evidence.
class HeuristicPolicy final : public PlannerPolicy {
 public:
  explicit HeuristicPolicy(const Recording& rec) : rec_(rec) {}
  std::string next(const Context& ctx) override;

 private:
  const Recording& rec_;
};

/// Asks a chat model for the next action.
class ChatPolicy final : public PlannerPolicy {
 public:
  explicit ChatPolicy(std::shared_ptr<const TextGenerator> generator) : generator_(std::move(generator)) {}
  std::string next(const Context& ctx) override;

 private:
  std::shared_ptr<const TextGenerator> generator_;
};

/// System prompt sent ahead of the rendered context.
std::string planner_instructions();

/// "minute 5 to 6" → [300, 360]; "10 s to 40 s" → [10, 40]. nullopt when absent.
std::optional<std::pair<double, double>> parse_interval(std::string_view task);

struct Budget {
  int max_steps = 16;
  int max_backend_calls = 20;
};

struct AgentTrace {
  std::string task;
  std::vector<TraceStep> steps;
  int steps_used = 0;
  double tool_seconds_analyzed = 0.0;
  int backend_calls = 0;
  bool budget_exhausted = false;
  std::string answer;

  /// Line-delimited JSON export: a header line, one line per step, a summary
  /// line. Contains no timing, so identical runs export identical bytes.
  std::string to_jsonl() const;

  std::vector<std::string> tool_order() const;
};

struct TaskResult {
  std::string answer;
  AgentTrace trace;
};

/// The planning loop. Throws PolicyProtocolError after two unparseable
/// actions in a row and propagates BackendUnavailable.
TaskResult run_task(const std::string& task, const Toolbox& toolbox, PlannerPolicy& policy, const Budget& budget = {},
                    const SessionMemory& memory = {}, std::size_t knowledge_k = kDefaultRetrievalK);

/// Same as run_task, also exposing the context of the first planner call.
TaskResult run_task(const std::string& task, const Toolbox& toolbox, PlannerPolicy& policy, const Budget& budget,
                    const SessionMemory& memory, std::size_t knowledge_k, Context* first_context);

/// Thread-safe in-memory session memories.
class SessionRegistry {
 public:
  void create(const std::string& session_id);
  bool contains(const std::string& session_id) const;
  void remember(const std::string& session_id, Turn turn);
  /// Throws UnknownSession.
  SessionMemory recall(const std::string& session_id) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, SessionMemory> sessions_;
};

}  // namespace eegagent
