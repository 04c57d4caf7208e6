// SPDX-License-Identifier: Apache-2.0
#include "eegagent/agent.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "eegagent/error.hpp"
#include "eegagent/exploration.hpp"
#include "eegagent/perception.hpp"
#include "eegagent/text.hpp"

namespace eegagent {
namespace {

[[noreturn]] void protocol(const std::string& msg) { fail(ErrorCode::PolicyProtocolError, msg); }

/// First balanced {...} block, honouring JSON strings.
std::string_view first_object(std::string_view text) {
  const auto open = text.find('{');
  if (open == std::string_view::npos) protocol("no JSON object in the reply");
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return text.substr(open, i - open + 1);
  }
  protocol("unterminated JSON object in the reply");
}

nlohmann::json action_json(const TraceStep& s) {
  nlohmann::json j = {{"type", "step"}, {"index", s.index}, {"thought", s.thought}};
  if (s.kind == Action::Kind::FinalAnswer) {
    j["final_answer"] = s.answer;
  } else {
    j["action"] = {{"tool", s.call.tool}, {"arguments", s.call.arguments}};
    if (s.observation) j["observation"] = *s.observation;
  }
  return j;
}

std::string render_observation(const ToolResult& r) { return nlohmann::json(r).dump(); }

std::string partial_findings(const AgentTrace& trace) {
  std::ostringstream out;
  out << "Budget exhausted after " << trace.steps_used << " step" << (trace.steps_used == 1 ? "" : "s") << " and "
      << trace.backend_calls << " backend call" << (trace.backend_calls == 1 ? "" : "s") << ".";
  if (trace.steps.empty()) {
    out << " No findings yet.";
    return out.str();
  }
  out << " Partial findings:";
  for (const auto& s : trace.steps) {
    if (!s.observation) continue;
    const auto& r = *s.observation;
    out << "\n- " << r.tool;
    if (r.t_start_s && r.t_end_s) out << " [" << format_number(*r.t_start_s) << ", " << format_number(*r.t_end_s) << "] s";
    if (!r.ok) {
      out << ": error " << r.error_code << " (" << r.error_message << ")";
      continue;
    }
    const auto* spec = find_tool(r.tool);
    if (spec && spec->parametric()) {
      const auto sum = summarize_classifier_payload(*spec, r.payload);
      double p = 0.0;
      for (const auto& [label, v] : sum.max_probability) {
        if (label == sum.label) p = v;
      }
      out << ": " << sum.label << " (max p " << format_number(p) << ")";
    } else {
      out << ": completed";
    }
  }
  return out.str();
}

}  // namespace

Action parse_action(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(first_object(text));
  } catch (const nlohmann::json::exception& e) {
    protocol(std::string("reply is not valid JSON: ") + e.what());
  }
  Action a;
  if (j.contains("thought")) {
    if (!j["thought"].is_string()) protocol("'thought' must be a string");
    a.thought = j["thought"].get<std::string>();
  }
  const bool has_final = j.contains("final_answer");
  const bool has_action = j.contains("action");
  if (has_final == has_action) protocol("reply needs exactly one of 'action' or 'final_answer'");
  if (has_final) {
    if (!j["final_answer"].is_string()) protocol("'final_answer' must be a string");
    a.kind = Action::Kind::FinalAnswer;
    a.answer = j["final_answer"].get<std::string>();
    return a;
  }
  const auto& act = j["action"];
  if (!act.is_object() || !act.contains("tool") || !act["tool"].is_string()) {
    protocol("'action' must be an object with a string 'tool'");
  }
  a.kind = Action::Kind::ToolCall;
  a.call.tool = act["tool"].get<std::string>();
  if (act.contains("arguments")) {
    if (!act["arguments"].is_object()) protocol("'arguments' must be an object");
    a.call.arguments = act["arguments"];
  }
  return a;
}

std::string format_action(const Action& a) {
  nlohmann::json j = {{"thought", a.thought}};
  if (a.kind == Action::Kind::FinalAnswer) {
    j["final_answer"] = a.answer;
  } else {
    j["action"] = {{"tool", a.call.tool}, {"arguments", a.call.arguments}};
  }
  return j.dump();
}

void from_json(const nlohmann::json& j, ToolResult& r) {
  r = ToolResult{};
  r.tool = j.at("tool").get<std::string>();
  r.arguments = j.value("arguments", nlohmann::json::object());
  r.ok = j.at("ok").get<bool>();
  if (j.contains("window")) {
    r.t_start_s = j["window"].at(0).get<double>();
    r.t_end_s = j["window"].at(1).get<double>();
  }
  if (r.ok) {
    r.payload = j.value("payload", nlohmann::json());
  } else {
    r.error_code = j.at("error").at("code").get<std::string>();
    r.error_message = j.at("error").at("message").get<std::string>();
  }
}

void to_json(nlohmann::json& j, const Turn& t) {
  j = {{"task", t.task}, {"answer", t.answer}, {"observations", t.observations}};
}

void from_json(const nlohmann::json& j, Turn& t) {
  t.task = j.at("task").get<std::string>();
  t.answer = j.at("answer").get<std::string>();
  t.observations.clear();
  for (const auto& o : j.value("observations", nlohmann::json::array())) t.observations.push_back(o.get<ToolResult>());
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

Context assemble_context(std::string task, std::string recording_summary, std::vector<RetrievedEntry> knowledge,
                         const SessionMemory& memory, std::size_t token_budget) {
  Context c;
  c.task = std::move(task);
  c.recording_summary = std::move(recording_summary);
  c.knowledge = std::move(knowledge);
  c.memory = memory.turns;
  c.token_budget = token_budget;
  return c;
}

std::string Context::render() const {
  std::size_t memory_obs = 0;
  for (const auto& t : memory) memory_obs += t.observations.size();
  const std::size_t total_obs = memory_obs + steps.size();

  auto build = [&](std::size_t drop_obs, std::size_t drop_turns) {
    std::ostringstream out;
    out << "## Task\n" << task << "\n\n";
    out << "## Recording\n" << recording_summary << "\n";
    if (!knowledge.empty()) {
      out << "\n## Knowledge\n";
      for (const auto& k : knowledge) out << "[" << k.entry.id << "] " << k.entry.title << ": " << k.entry.body << "\n";
    }
    std::size_t obs = 0;
    if (!memory.empty()) {
      out << "\n## Earlier turns\n";
      for (std::size_t i = 0; i < memory.size(); ++i) {
        const auto& t = memory[i];
        if (i < drop_turns) {
          obs += t.observations.size();
          out << "Turn " << i + 1 << ": (omitted)\n";
          continue;
        }
        out << "Turn " << i + 1 << " task: " << t.task << "\n";
        for (const auto& o : t.observations) {
          out << "  observation: " << (obs++ < drop_obs ? std::string("(omitted)") : render_observation(o)) << "\n";
        }
        out << "Turn " << i + 1 << " answer: " << t.answer << "\n";
      }
    }
    if (!steps.empty()) {
      out << "\n## Steps so far\n";
      for (const auto& s : steps) {
        out << "Step " << s.index << " action: " << nlohmann::json{{"tool", s.call.tool}, {"arguments", s.call.arguments}}.dump()
            << "\n";
        if (s.observation) {
          out << "Observation: " << (obs++ < drop_obs ? std::string("(omitted)") : render_observation(*s.observation))
              << "\n";
        }
      }
    }
    if (!protocol_error.empty()) {
      out << "\n## Protocol error\nYour previous reply could not be used: " << protocol_error
          << "\nReply again with a single JSON action.\n";
    }
    return out.str();
  };

  std::size_t drop_obs = 0, drop_turns = 0;
  auto text = build(0, 0);
  while (estimate_tokens(text) > token_budget) {
    if (drop_obs < total_obs) {
      ++drop_obs;
    } else if (drop_turns < memory.size()) {
      ++drop_turns;
    } else {
      break;
    }
    text = build(drop_obs, drop_turns);
  }
  return text;
}

ScriptedPolicy ScriptedPolicy::from_actions(const std::vector<Action>& actions) {
  std::vector<std::string> texts;
  for (const auto& a : actions) texts.push_back(format_action(a));
  return ScriptedPolicy(std::move(texts));
}

ScriptedPolicy ScriptedPolicy::from_json(const nlohmann::json& fixture) {
  const auto& list = fixture.is_array() ? fixture : fixture.at("actions");
  std::vector<std::string> texts;
  for (const auto& a : list) texts.push_back(a.is_string() ? a.get<std::string>() : a.dump());
  return ScriptedPolicy(std::move(texts));
}

std::string ScriptedPolicy::next(const Context&) {
  if (next_ >= actions_.size()) protocol("scripted policy has no actions left");
  return actions_[next_++];
}

std::string planner_instructions() {
  return "You analyse one EEG recording by calling tools. Reply with exactly one JSON object and nothing else:\n"
         "{\"thought\": \"...\", \"action\": {\"tool\": \"<name>\", \"arguments\": {\"start\": <s>, \"end\": <s>, "
         "\"channels\": [\"F4-C4\"]}}}\n"
         "or, when you can answer:\n"
         "{\"thought\": \"...\", \"final_answer\": \"...\"}\n"
         "All arguments are optional where the tool allows it. Times are seconds from the recording start.\n"
         "Tools:\n" +
         describe_tools();
}

std::string ChatPolicy::next(const Context& ctx) {
  return generator_->complete({{"system", planner_instructions()}, {"user", ctx.render()}});
}

std::optional<std::pair<double, double>> parse_interval(std::string_view task) {
  static const std::regex minutes(
      R"(min(?:ute)?s?\s*(\d+(?:\.\d+)?)\s*(?:-|to|and|until|through)\s*(?:min(?:ute)?s?\s*)?(\d+(?:\.\d+)?))",
      std::regex::icase);
  static const std::regex seconds(
      R"((\d+(?:\.\d+)?)\s*(?:s|sec|secs|seconds)?\s*(?:-|to|until|through)\s*(\d+(?:\.\d+)?)\s*(?:s|sec|secs|seconds)\b)",
      std::regex::icase);
  const std::string s(task);
  std::smatch m;
  if (std::regex_search(s, m, minutes)) return std::pair{std::stod(m[1]) * 60.0, std::stod(m[2]) * 60.0};
  if (std::regex_search(s, m, seconds)) return std::pair{std::stod(m[1]), std::stod(m[2])};
  return std::nullopt;
}

std::string HeuristicPolicy::next(const Context& ctx) {
  const double duration = rec_.duration_s();
  double a = 0.0, b = std::min(duration, kMaxFeatureWindowS);
  if (auto iv = parse_interval(ctx.task)) std::tie(a, b) = *iv;
  a = std::clamp(a, 0.0, duration);
  b = std::clamp(b, a, std::min(duration, a + kMaxFeatureWindowS));
  if (b < duration - kTimeEpsilon) {
    const double whole = std::floor((b - a) / 10.0 + 1e-9) * 10.0;
    b = whole >= 10.0 ? a + whole : std::min(duration, a + 10.0);
  }
  const nlohmann::json window = {{"start", a}, {"end", b}};

  const ToolResult* screen = nullptr;
  const ToolResult* amplitude = nullptr;
  for (const auto& s : ctx.steps) {
    if (!s.observation) continue;
    if (!s.observation->ok) {
      Action done;
      done.thought = "A tool failed; reporting what is known.";
      done.answer = "Could not complete the analysis: " + s.observation->tool + " failed (" +
                    s.observation->error_message + ").";
      return format_action(done);
    }
    if (s.observation->tool == "slowSeizBckg") screen = &*s.observation;
    if (s.observation->tool == "compute_amplitude") amplitude = &*s.observation;
  }

  Action act;
  act.kind = Action::Kind::ToolCall;
  if (!screen) {
    act.thought = "Screen the interval for slowing and seizure activity.";
    act.call = {"slowSeizBckg", window};
    return format_action(act);
  }
  if (!amplitude) {
    act.thought = "Characterize amplitude and spatial distribution.";
    act.call = {"compute_amplitude", window};
    return format_action(act);
  }

  const auto& spec = tool_spec("slowSeizBckg");
  const auto sum = summarize_classifier_payload(spec, screen->payload);
  const auto extent = spatial_extent(amplitude->payload);
  const int windows = static_cast<int>(screen->payload.at("windows").size());
  double rms_sum = 0.0;
  for (const auto& c : amplitude->payload) rms_sum += c.at("rms_uv").get<double>();
  const double mean_rms = amplitude->payload.empty() ? 0.0 : rms_sum / static_cast<double>(amplitude->payload.size());

  std::ostringstream out;
  out << "From " << format_number(*screen->t_start_s) << " s to " << format_number(*screen->t_end_s) << " s: ";
  if (is_background_label(sum.label)) {
    out << "no slowing or seizure activity detected";
  } else {
    const bool persistent = sum.positive_windows == windows && windows >= 3;
    out << (persistent ? "persistent " : "") << (extent.kind == "generalized" ? "generalized " : "")
        << describe_label(sum.label);
    if (extent.kind == "focal" && !extent.channels.empty()) {
      out << " over";
      for (const auto& c : extent.channels) out << " " << c;
    }
    out << " (slowSeizBckg: " << sum.label << " in " << sum.positive_windows << " of " << windows << " windows)";
  }
  out << "; mean RMS amplitude " << format_number(mean_rms, 1) << " uV across " << amplitude->payload.size()
      << " channels.";
  Action done;
  done.thought = "Screening and amplitude are enough to answer.";
  done.answer = out.str();
  return format_action(done);
}

std::vector<std::string> AgentTrace::tool_order() const {
  std::vector<std::string> out;
  for (const auto& s : steps) {
    if (s.kind == Action::Kind::ToolCall) out.push_back(s.call.tool);
  }
  return out;
}

std::string AgentTrace::to_jsonl() const {
  std::string out = nlohmann::json{{"type", "task"}, {"task", task}}.dump() + "\n";
  for (const auto& s : steps) out += action_json(s).dump() + "\n";
  out += nlohmann::json{{"type", "summary"},
                        {"answer", answer},
                        {"budget_exhausted", budget_exhausted},
                        {"steps_used", steps_used},
                        {"tool_seconds_analyzed", tool_seconds_analyzed},
                        {"backend_calls", backend_calls}}
             .dump() +
         "\n";
  return out;
}

TaskResult run_task(const std::string& task, const Toolbox& toolbox, PlannerPolicy& policy, const Budget& budget,
                    const SessionMemory& memory, std::size_t knowledge_k) {
  return run_task(task, toolbox, policy, budget, memory, knowledge_k, nullptr);
}

TaskResult run_task(const std::string& task, const Toolbox& toolbox, PlannerPolicy& policy, const Budget& budget,
                    const SessionMemory& memory, std::size_t knowledge_k, Context* first_context) {
  if (budget.max_steps < 1) fail(ErrorCode::InvalidArgument, "budget.max_steps must be at least 1");
  const auto& kb = toolbox.knowledge();
  Context ctx = assemble_context(task, to_text(base_info(toolbox.recording(), kb)),
                                 knowledge_k ? kb.retrieve(task, knowledge_k) : std::vector<RetrievedEntry>{}, memory);
  AgentTrace trace;
  trace.task = task;
  int malformed = 0;
  bool first = true;

  for (;;) {
    if (trace.steps_used >= budget.max_steps || trace.backend_calls >= budget.max_backend_calls) {
      trace.budget_exhausted = true;
      trace.answer = partial_findings(trace);
      break;
    }
    if (first && first_context) *first_context = ctx;
    first = false;
    Action action;
    try {
      action = parse_action(policy.next(ctx));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PolicyProtocolError) throw;
      if (++malformed >= 2) fail(ErrorCode::PolicyProtocolError, std::string("two malformed actions in a row: ") + e.what());
      ctx.protocol_error = e.what();
      continue;
    }
    malformed = 0;
    ctx.protocol_error.clear();

    TraceStep step;
    step.index = trace.steps_used + 1;
    step.thought = action.thought;
    step.kind = action.kind;
    ++trace.steps_used;
    if (action.kind == Action::Kind::FinalAnswer) {
      step.answer = action.answer;
      trace.answer = action.answer;
      trace.steps.push_back(step);
      break;
    }
    step.call = action.call;
    step.observation = toolbox.dispatch(action.call);
    if (step.observation->ok) trace.tool_seconds_analyzed += step.observation->seconds_analyzed();
    trace.backend_calls += step.observation->backend_calls;
    trace.steps.push_back(step);
    ctx.steps.push_back(std::move(step));
  }
  return {trace.answer, std::move(trace)};
}

void SessionRegistry::create(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  sessions_.try_emplace(session_id);
}

bool SessionRegistry::contains(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(session_id) > 0;
}

void SessionRegistry::remember(const std::string& session_id, Turn turn) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
  it->second.turns.push_back(std::move(turn));
}

SessionMemory SessionRegistry::recall(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
  return it->second;
}

}  // namespace eegagent
