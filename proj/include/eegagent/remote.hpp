// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>

#include "eegagent/classifiers.hpp"
#include "eegagent/knowledge.hpp"
#include "eegagent/llm.hpp"

namespace eegagent {

/// "http://host:port/prefix" split into origin and path prefix.
struct HttpEndpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // no trailing slash; may be empty

  static HttpEndpoint parse(const std::string& url);
  std::string join(std::string_view route) const { return path + std::string(route); }
};

struct RemoteOptions {
  std::string url;
  std::string api_key;  // sent as a bearer token when non-empty
  double timeout_s = 30.0;
  int max_in_flight = 4;
};

/// Caps the number of concurrent requests issued through it.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : limit_(limit < 1 ? 1 : limit) {}

  class Slot {
   public:
    explicit Slot(InFlightLimiter& l) : l_(l) { l_.acquire(); }
    ~Slot() { l_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    InFlightLimiter& l_;
  };

  int peak() const;

 private:
  void acquire();
  void release();
  int limit_;
  int active_ = 0;
  int peak_ = 0;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
};

inline constexpr std::string_view kClassifySchema = "eegagent.classify/1";

/// Model-serving endpoint speaking the eegagent.classify/1 protocol: one POST
/// to {url}/v1/classify per batch of windows.
class RemoteBackend final : public ClassifierBackend {
 public:
  explicit RemoteBackend(RemoteOptions opt, std::size_t max_windows_per_request = 64)
      : opt_(std::move(opt)), endpoint_(HttpEndpoint::parse(opt_.url)), limiter_(opt_.max_in_flight),
        batch_(max_windows_per_request ? max_windows_per_request : 1) {}

  std::string_view name() const override { return "remote"; }
  std::vector<WindowProbabilities> classify_batch(const ToolSpec& tool, const Recording& rec,
                                                  std::span<const Segment> windows) const override;

  const InFlightLimiter& limiter() const { return limiter_; }

 private:
  std::vector<WindowProbabilities> post(const ToolSpec& tool, const Recording& rec,
                                        std::span<const Segment> windows) const;
  RemoteOptions opt_;
  HttpEndpoint endpoint_;
  mutable InFlightLimiter limiter_;
  std::size_t batch_;
};

/// Request body for a batch of windows (exposed for protocol tests).
nlohmann::json classify_request(const ToolSpec& tool, const Recording& rec, std::span<const Segment> windows);

/// Parses and echo-checks a response. Throws BackendUnavailable on any mismatch.
std::vector<WindowProbabilities> parse_classify_response(const ToolSpec& tool, std::span<const Segment> windows,
                                                         const nlohmann::json& response);

/// OpenAI-style {url}/v1/embeddings client.
class RemoteEmbedding final : public EmbeddingBackend {
 public:
  RemoteEmbedding(RemoteOptions opt, std::string model)
      : opt_(std::move(opt)), endpoint_(HttpEndpoint::parse(opt_.url)), model_(std::move(model)) {}
  Eigen::VectorXd embed(std::string_view text) const override;

 private:
  RemoteOptions opt_;
  HttpEndpoint endpoint_;
  std::string model_;
};

/// OpenAI-style {url}/v1/chat/completions client.
class ChatCompletionsClient final : public TextGenerator {
 public:
  ChatCompletionsClient(RemoteOptions opt, std::string model, double temperature = 0.0)
      : opt_(std::move(opt)), endpoint_(HttpEndpoint::parse(opt_.url)), model_(std::move(model)),
        temperature_(temperature) {}
  std::string complete(const std::vector<ChatMessage>& messages) const override;

 private:
  RemoteOptions opt_;
  HttpEndpoint endpoint_;
  std::string model_;
  double temperature_;
};

/// POSTs `body` as JSON and returns the parsed reply. Throws BackendUnavailable
/// on connection failure, timeout, non-200 status or unparseable JSON.
nlohmann::json post_json(const HttpEndpoint& endpoint, std::string_view route, const nlohmann::json& body,
                         const RemoteOptions& opt);

}  // namespace eegagent
