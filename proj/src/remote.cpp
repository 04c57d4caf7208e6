// SPDX-License-Identifier: Apache-2.0
#include "eegagent/remote.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>

#include "eegagent/error.hpp"

namespace eegagent {
namespace {

void set_timeouts(httplib::Client& cli, double timeout_s) {
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-6; }

}  // namespace

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
  const auto scheme = url.find("://");
  if (url.empty() || scheme == std::string::npos) {
    fail(ErrorCode::InvalidArgument, "endpoint URL must look like http://host:port/path, got '" + url + "'");
  }
  const auto slash = url.find('/', scheme + 3);
  HttpEndpoint ep;
  ep.origin = url.substr(0, slash);
  ep.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  return ep;
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
  peak_ = std::max(peak_, active_);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

int InFlightLimiter::peak() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

nlohmann::json post_json(const HttpEndpoint& endpoint, std::string_view route, const nlohmann::json& body,
                         const RemoteOptions& opt) {
  httplib::Client cli(endpoint.origin);
  set_timeouts(cli, opt.timeout_s);
  httplib::Headers headers;
  if (!opt.api_key.empty()) headers.emplace("Authorization", "Bearer " + opt.api_key);
  const auto path = endpoint.join(route);
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    fail(ErrorCode::BackendUnavailable,
         "request to " + endpoint.origin + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    fail(ErrorCode::BackendUnavailable, endpoint.origin + path + " answered HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BackendUnavailable, endpoint.origin + path + " returned invalid JSON: " + e.what());
  }
}

nlohmann::json classify_request(const ToolSpec& tool, const Recording& rec, std::span<const Segment> windows) {
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& s : slice(rec, w)) {
      channels.push_back({{"label", s.label},
                          {"sample_rate_hz", s.sample_rate_hz},
                          {"samples", std::vector<double>(s.samples.data(), s.samples.data() + s.samples.size())}});
    }
    items.push_back({{"id", i}, {"t_start", w.t_start_s}, {"t_end", w.t_end_s}, {"channels", channels}});
  }
  return {{"schema", kClassifySchema},
          {"tool", tool.name},
          {"labels", tool.labels},
          {"space_granularity", std::string(to_string(tool.space))},
          {"unit", "uV"},
          {"windows", items}};
}

std::vector<WindowProbabilities> parse_classify_response(const ToolSpec& tool, std::span<const Segment> windows,
                                                         const nlohmann::json& response) {
  auto bad = [](const std::string& why) { fail(ErrorCode::BackendUnavailable, "classify response: " + why); };
  try {
    if (response.value("schema", std::string()) != kClassifySchema) bad("unsupported schema");
    if (response.at("tool").get<std::string>() != tool.name) bad("tool name echo mismatch");
    const auto& results = response.at("results");
    if (!results.is_array() || results.size() != windows.size()) bad("result count mismatch");
    std::vector<WindowProbabilities> out(windows.size());
    std::vector<bool> filled(windows.size(), false);
    for (const auto& r : results) {
      const auto id = r.at("id").get<std::size_t>();
      if (id >= windows.size() || filled[id]) bad("unknown or repeated window id");
      if (!same_time(r.at("t_start").get<double>(), windows[id].t_start_s) ||
          !same_time(r.at("t_end").get<double>(), windows[id].t_end_s)) {
        bad("window bounds echo mismatch");
      }
      for (const auto& o : r.at("outputs")) {
        out[id].push_back({o.at("channel").get<std::string>(), probabilities_from_json(tool, o.at("probabilities"))});
      }
      const std::size_t expected =
          tool.space == SpaceGranularity::SingleChannel ? windows[id].channel_labels.size() : 1;
      if (out[id].size() != expected) bad("output count mismatch");
      filled[id] = true;
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    bad(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BackendUnavailable) throw;
    bad(e.what());
  }
  return {};
}

std::vector<WindowProbabilities> RemoteBackend::post(const ToolSpec& tool, const Recording& rec,
                                                     std::span<const Segment> windows) const {
  InFlightLimiter::Slot slot(limiter_);
  return parse_classify_response(tool, windows, post_json(endpoint_, "/v1/classify",
                                                          classify_request(tool, rec, windows), opt_));
}

std::vector<WindowProbabilities> RemoteBackend::classify_batch(const ToolSpec& tool, const Recording& rec,
                                                               std::span<const Segment> windows) const {
  std::vector<WindowProbabilities> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); i += batch_) {
    auto part = post(tool, rec, windows.subspan(i, std::min(batch_, windows.size() - i)));
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

Eigen::VectorXd RemoteEmbedding::embed(std::string_view text) const {
  const auto reply = post_json(endpoint_, "/v1/embeddings", {{"model", model_}, {"input", std::string(text)}}, opt_);
  try {
    const auto v = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (v.empty()) fail(ErrorCode::BackendUnavailable, "embedding endpoint returned an empty vector");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BackendUnavailable, std::string("embedding response: ") + e.what());
  }
}

std::string ChatCompletionsClient::complete(const std::vector<ChatMessage>& messages) const {
  const nlohmann::json body = {{"model", model_}, {"temperature", temperature_}, {"messages", messages}};
  const auto reply = post_json(endpoint_, "/v1/chat/completions", body, opt_);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BackendUnavailable, std::string("chat response: ") + e.what());
  }
}

}  // namespace eegagent
