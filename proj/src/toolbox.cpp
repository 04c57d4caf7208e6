// SPDX-License-Identifier: Apache-2.0
#include "eegagent/toolbox.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "eegagent/error.hpp"
#include "eegagent/features.hpp"
#include "eegagent/perception.hpp"
#include "eegagent/text.hpp"

namespace eegagent {
namespace {

[[noreturn]] void invalid(const std::string& msg) { fail(ErrorCode::ArgumentValidation, msg); }

double number_arg(const nlohmann::json& args, const char* key) {
  const auto& v = args.at(key);
  if (!v.is_number()) invalid(std::string("argument '") + key + "' must be a number of seconds");
  const double d = v.get<double>();
  if (!std::isfinite(d)) invalid(std::string("argument '") + key + "' must be finite");
  return d;
}

}  // namespace

void to_json(nlohmann::json& j, const ToolResult& r) {
  j = {{"tool", r.tool}, {"arguments", r.arguments}, {"ok", r.ok}};
  if (r.t_start_s && r.t_end_s) j["window"] = {*r.t_start_s, *r.t_end_s};
  if (r.ok) {
    j["payload"] = r.payload;
  } else {
    j["error"] = {{"code", r.error_code}, {"message", r.error_message}};
  }
}

ResolvedCall Toolbox::resolve(const ToolCall& call) const {
  ResolvedCall out;
  out.spec = find_tool(call.tool);
  if (!out.spec) fail(ErrorCode::UnknownTool, "unknown tool '" + call.tool + "'");
  const auto& spec = *out.spec;
  const auto& args = call.arguments.is_null() ? nlohmann::json::object() : call.arguments;
  if (!args.is_object()) invalid("arguments must be an object");
  for (const auto& [key, value] : args.items()) {
    if (key != "start" && key != "end" && key != "channels") invalid("unexpected argument '" + key + "'");
  }

  const double duration = rec_.duration_s();
  if (args.contains("channels")) {
    const auto& ch = args.at("channels");
    if (!ch.is_array() || ch.empty()) invalid("'channels' must be a non-empty list of labels");
    for (const auto& c : ch) {
      if (!c.is_string()) invalid("'channels' must be a non-empty list of labels");
      auto label = normalize_label(c.get<std::string>());
      if (!rec_.channel_index(label)) invalid("unknown channel '" + c.get<std::string>() + "'");
      if (std::find(out.channels.begin(), out.channels.end(), label) == out.channels.end()) out.channels.push_back(label);
    }
  } else {
    out.channels = rec_.channel_labels();
  }

  const bool has_start = args.contains("start"), has_end = args.contains("end");
  if (has_start != has_end) invalid("give both 'start' and 'end' or neither");
  if (has_start) {
    out.t_start_s = number_arg(args, "start");
    out.t_end_s = number_arg(args, "end");
  } else {
    if (spec.time == TimeGranularity::OneSecond || spec.time == TimeGranularity::TenSeconds) {
      invalid(spec.name + " needs 'start' and 'end'");
    }
    out.t_start_s = 0.0;
    out.t_end_s = duration;
  }
  if (out.t_start_s < -kTimeEpsilon || out.t_end_s > duration + kTimeEpsilon || !(out.t_start_s < out.t_end_s)) {
    invalid("window [" + format_number(out.t_start_s) + ", " + format_number(out.t_end_s) +
            "] s is outside the recording (0 to " + format_number(duration) + " s)");
  }

  double tol = kTimeEpsilon;
  for (const auto& c : out.channels) tol = std::max(tol, 1.0 / rec_.channels[*rec_.channel_index(c)].sample_rate_hz);
  const double len = out.t_end_s - out.t_start_s;
  auto window = [&](double a, double b) { return Segment{ref_, a, b, out.channels}; };

  switch (spec.time) {
    case TimeGranularity::UpTo60s:
      if (len > kMaxFeatureWindowS + kTimeEpsilon) {
        invalid("window of " + format_number(len) + " s exceeds 60 s for " + spec.name);
      }
      if (spec.name == "compute_psd" && len < kMinPsdWindowS - kTimeEpsilon) invalid("compute_psd needs at least 2 s");
      break;
    case TimeGranularity::Full:
      if (std::abs(out.t_start_s) > tol || std::abs(out.t_end_s - duration) > tol) {
        invalid(spec.name + " analyses the full recording only");
      }
      if (spec.parametric()) out.windows.push_back(window(0.0, duration));
      break;
    case TimeGranularity::OneSecond: {
      if (len > kMaxFeatureWindowS + tol) invalid("window of " + format_number(len) + " s exceeds 60 s");
      const auto n = std::llround(len);
      if (n < 1 || std::abs(len - static_cast<double>(n)) > tol) {
        invalid(spec.name + " analyses whole 1 s windows; got " + format_number(len) + " s");
      }
      for (long long i = 0; i < n; ++i) {
        out.windows.push_back(window(out.t_start_s + static_cast<double>(i),
                                     i + 1 == n ? out.t_end_s : out.t_start_s + static_cast<double>(i + 1)));
      }
      break;
    }
    case TimeGranularity::TenSeconds: {
      if (len > kMaxFeatureWindowS + tol) invalid("window of " + format_number(len) + " s exceeds 60 s");
      const auto n = static_cast<long long>(std::floor((len + tol) / 10.0));
      const double rest = len - 10.0 * static_cast<double>(n);
      const bool tail = rest > tol;
      if (tail && std::abs(out.t_end_s - duration) > tol) {
        invalid(spec.name + " analyses whole 10 s windows; got " + format_number(len) + " s");
      }
      for (long long i = 0; i < n; ++i) {
        const double a = out.t_start_s + 10.0 * static_cast<double>(i);
        out.windows.push_back(window(a, (!tail && i + 1 == n) ? out.t_end_s : a + 10.0));
      }
      if (tail) out.windows.push_back(window(out.t_start_s + 10.0 * static_cast<double>(n), out.t_end_s));
      break;
    }
  }
  return out;
}

nlohmann::json Toolbox::execute(const ResolvedCall& call) const {
  const auto& spec = *call.spec;
  const Segment seg{ref_, call.t_start_s, call.t_end_s, call.channels};
  if (spec.name == "baseInfo") return base_info(rec_, kb_);
  if (spec.name == "compute_amplitude") return compute_amplitude(rec_, seg);
  if (spec.name == "compute_psd") return compute_psd(rec_, seg);
  if (spec.name == "compute_symmetry") return compute_symmetry(rec_, seg);

  ++backend_calls_;
  const auto results = classify(spec, rec_, std::span<const Segment>(call.windows), backend_);
  nlohmann::json windows = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    windows.push_back({{"t_start", call.windows[i].t_start_s},
                       {"t_end", call.windows[i].t_end_s},
                       {"outputs", results[i]}});
  }
  nlohmann::json payload = {{"windows", windows}};
  const auto summary = summarize_classifier_payload(spec, payload);
  nlohmann::json max_prob = nlohmann::json::object();
  for (const auto& [label, p] : summary.max_probability) max_prob[label] = p;
  payload["summary"] = {{"label", summary.label},
                        {"max_probability", max_prob},
                        {"positive_windows", summary.positive_windows}};
  return payload;
}

nlohmann::json Toolbox::run(const ToolCall& call) const { return execute(resolve(call)); }

ToolResult Toolbox::dispatch(const ToolCall& call) const {
  ToolResult r;
  r.tool = call.tool;
  r.arguments = call.arguments.is_null() ? nlohmann::json::object() : call.arguments;
  const auto t0 = std::chrono::steady_clock::now();
  const int calls_before = backend_calls_.load();
  try {
    const auto resolved = resolve(call);
    r.tool = resolved.spec->name;
    r.t_start_s = resolved.t_start_s;
    r.t_end_s = resolved.t_end_s;
    r.payload = execute(resolved);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BackendUnavailable) throw;
    r.ok = false;
    r.error_code = std::string(to_string(e.code()));
    r.error_message = e.what();
    r.payload = nullptr;
  }
  r.backend_calls = backend_calls_.load() - calls_before;
  r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ClassifierSummary summarize_classifier_payload(const ToolSpec& tool, const nlohmann::json& payload, double threshold) {
  ClassifierSummary s;
  for (const auto& l : tool.labels) s.max_probability.emplace_back(l, 0.0);
  auto slot = [&](const std::string& label) -> double& {
    for (auto& [l, p] : s.max_probability) {
      if (l == label) return p;
    }
    s.max_probability.emplace_back(label, 0.0);
    return s.max_probability.back().second;
  };
  for (const auto& w : payload.at("windows")) {
    bool positive = false;
    for (const auto& o : w.at("outputs")) {
      double best = -1.0;
      std::string best_label;
      for (const auto& [label, p] : o.at("probabilities").items()) {
        auto& m = slot(label);
        m = std::max(m, p.get<double>());
        if (p.get<double>() > best) {
          best = p.get<double>();
          best_label = label;
        }
      }
      positive = positive || best_label != tool.background_label;
    }
    s.positive_windows += positive ? 1 : 0;
  }
  s.label = tool.background_label;
  double best = -1.0;
  for (const auto& [label, p] : s.max_probability) {
    if (label != tool.background_label && p >= threshold && p > best) {
      best = p;
      s.label = label;
    }
  }
  return s;
}

std::string describe_tools() {
  std::ostringstream out;
  for (const auto& t : tool_table()) {
    out << "- " << t.name << " [" << to_string(t.kind) << "; time " << to_string(t.time) << "; space "
        << to_string(t.space) << "]";
    if (!t.labels.empty()) {
      out << " labels:";
      for (const auto& l : t.labels) out << " " << l;
    }
    out << ". " << t.description << "\n";
  }
  return out.str();
}

}  // namespace eegagent
