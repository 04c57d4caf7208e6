// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "eegagent/agent.hpp"
#include "eegagent/classifiers.hpp"
#include "eegagent/detection.hpp"
#include "eegagent/error.hpp"
#include "eegagent/knowledge.hpp"
#include "eegagent/llm.hpp"
#include "eegagent/store.hpp"

namespace eegagent {

struct ServiceConfig {
  std::filesystem::path store = "eegagent-store";
  std::string host = "127.0.0.1";
  int port = 8080;

  std::string classifier_url;      // remote model server; wins over the fixture
  std::string classifier_fixture;  // ScriptedBackend JSON; empty and no URL: baseline rules
  std::string chat_url;
  std::string chat_model = "default";
  std::string embedding_url;
  std::string embedding_model = "default";
  std::string knowledge_dir;  // empty: built-in entries
  std::string api_token;      // empty: no authentication
  int max_in_flight = 4;
  double request_timeout_s = 30.0;

  DetectionConfig detection;
  double refine_threshold = 0.5;
  double report_event_threshold = 0.5;
  Budget budget;
  std::size_t max_signal_points = 4000;
  std::size_t max_upload_bytes = std::size_t{1} << 30;
};

ServiceConfig service_config_from_json(const nlohmann::json& j, ServiceConfig base = {});
void to_json(nlohmann::json& j, const ServiceConfig& c);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

/// Defaults, then the JSON file, then EEGAGENT_* environment variables.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string authorization;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

int http_status(ErrorCode code);

using PolicyFactory = std::function<std::unique_ptr<PlannerPolicy>(const Recording&)>;

struct ServiceDeps {
  std::shared_ptr<const ClassifierBackend> backend;
  std::shared_ptr<const KnowledgeBase> knowledge;
  std::shared_ptr<const TextGenerator> chat;  // may be null
  PolicyFactory policy;                       // null: chat policy when chat is set, else heuristic
};

/// Backends, knowledge base and chat client described by the configuration.
ServiceDeps make_service_deps(const ServiceConfig& cfg);

/// Transport-independent request handling over a FileStore.
class ServiceCore {
 public:
  ServiceCore(ServiceConfig cfg, ServiceDeps deps);

  HttpResponse handle(const HttpRequest& req);

  const ServiceConfig& config() const { return cfg_; }
  FileStore& store() { return store_; }

 private:
  HttpResponse route(const HttpRequest& req);
  HttpResponse upload(const HttpRequest& req);
  HttpResponse info(const std::string& rid);
  HttpResponse detect_route(const std::string& rid, const HttpRequest& req);
  HttpResponse report_route(const std::string& rid, const HttpRequest& req);
  HttpResponse signal(const std::string& rid, const HttpRequest& req);
  HttpResponse create_session(const HttpRequest& req);
  HttpResponse list_sessions();
  HttpResponse session(const std::string& sid);
  HttpResponse query(const std::string& sid, const HttpRequest& req);

  std::shared_ptr<const Recording> recording(const std::string& rid);

  ServiceConfig cfg_;
  ServiceDeps deps_;
  FileStore store_;
  std::mutex cache_mutex_;
  std::map<std::string, std::shared_ptr<const Recording>> cache_;
  std::mutex busy_mutex_;
  std::set<std::string> busy_;
};

/// Min/max binning of one channel into at most `max_points` values
/// (alternating bin minimum and maximum).
struct MinMaxBins {
  std::vector<double> min;
  std::vector<double> max;
  double bin_s = 0.0;
};
MinMaxBins minmax_bins(const Eigen::Ref<const Eigen::VectorXd>& x, double rate_hz, std::size_t max_points);

/// HTTP front end. Every route is forwarded to the core.
class HttpServer {
 public:
  explicit HttpServer(ServiceCore& core);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace eegagent
