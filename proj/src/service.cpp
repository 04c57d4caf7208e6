// SPDX-License-Identifier: Apache-2.0
#include "eegagent/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "eegagent/edf.hpp"
#include "eegagent/perception.hpp"
#include "eegagent/remote.hpp"
#include "eegagent/reporting.hpp"
#include "eegagent/segment.hpp"

namespace eegagent {

using nlohmann::json;

namespace {

HttpResponse json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

HttpResponse error_response(const Error& e, const std::vector<std::string>& diagnostics = {}) {
  json err = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (!diagnostics.empty()) err["diagnostics"] = diagnostics;
  return json_response(http_status(e.code()), {{"error", err}});
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    auto j = json::parse(body);
    if (!j.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
  }
}

double query_number(const HttpRequest& req, const std::string& key, double fallback) {
  const auto it = req.query.find(key);
  if (it == req.query.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "query parameter '" + key + "' must be a number");
  }
}

bool query_flag(const HttpRequest& req, const std::string& key) {
  const auto it = req.query.find(key);
  return it != req.query.end() && (it->second == "1" || it->second == "true" || it->second.empty());
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string part; std::getline(in, part, ',');) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key) && !j.at(key).is_null()) into = j.at(key).get<T>();
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader:
    case ErrorCode::TruncatedData:
    case ErrorCode::UnsupportedVariant: return 422;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::SessionBusy: return 409;
    case ErrorCode::CorruptRecord: return 410;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::BackendUnavailable: return 503;
    case ErrorCode::StorageFull: return 507;
    case ErrorCode::PolicyProtocolError: return 502;
    case ErrorCode::NoResults: return 500;
    default: return 400;
  }
}

ServiceConfig service_config_from_json(const json& j, ServiceConfig c) {
  std::string store = c.store.string();
  take(j, "store", store);
  c.store = store;
  take(j, "host", c.host);
  take(j, "port", c.port);
  take(j, "classifier_url", c.classifier_url);
  take(j, "classifier_fixture", c.classifier_fixture);
  take(j, "chat_url", c.chat_url);
  take(j, "chat_model", c.chat_model);
  take(j, "embedding_url", c.embedding_url);
  take(j, "embedding_model", c.embedding_model);
  take(j, "knowledge_dir", c.knowledge_dir);
  take(j, "api_token", c.api_token);
  take(j, "max_in_flight", c.max_in_flight);
  take(j, "request_timeout_s", c.request_timeout_s);
  if (j.contains("detection")) {
    json d = c.detection;
    d.update(j.at("detection"));
    c.detection = detection_config_from_json(d);
  }
  take(j, "refine_threshold", c.refine_threshold);
  take(j, "report_event_threshold", c.report_event_threshold);
  if (j.contains("budget")) {
    take(j.at("budget"), "max_steps", c.budget.max_steps);
    take(j.at("budget"), "max_backend_calls", c.budget.max_backend_calls);
  }
  take(j, "max_signal_points", c.max_signal_points);
  take(j, "max_upload_bytes", c.max_upload_bytes);
  if (c.max_signal_points < 2) fail(ErrorCode::InvalidArgument, "max_signal_points must be at least 2");
  for (double t : {c.refine_threshold, c.report_event_threshold}) {
    if (!(t > 0.0 && t <= 1.0)) fail(ErrorCode::InvalidArgument, "thresholds must lie in (0, 1]");
  }
  return c;
}

void to_json(json& j, const ServiceConfig& c) {
  j = {{"store", c.store.string()},
       {"host", c.host},
       {"port", c.port},
       {"classifier_url", c.classifier_url},
       {"classifier_fixture", c.classifier_fixture},
       {"chat_url", c.chat_url},
       {"chat_model", c.chat_model},
       {"embedding_url", c.embedding_url},
       {"embedding_model", c.embedding_model},
       {"knowledge_dir", c.knowledge_dir},
       {"api_token", c.api_token.empty() ? "" : "***"},
       {"max_in_flight", c.max_in_flight},
       {"request_timeout_s", c.request_timeout_s},
       {"detection", c.detection},
       {"refine_threshold", c.refine_threshold},
       {"report_event_threshold", c.report_event_threshold},
       {"budget", {{"max_steps", c.budget.max_steps}, {"max_backend_calls", c.budget.max_backend_calls}}},
       {"max_signal_points", c.max_signal_points},
       {"max_upload_bytes", c.max_upload_bytes}};
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  ServiceConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) fail(ErrorCode::NotFound, "config file " + file->string() + " not found");
    try {
      c = service_config_from_json(json::parse(in), c);
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidArgument, "config file " + file->string() + ": " + e.what());
    }
  }
  const std::pair<const char*, std::string*> vars[] = {
      {"EEGAGENT_CLASSIFIER_URL", &c.classifier_url}, {"EEGAGENT_CLASSIFIER_FIXTURE", &c.classifier_fixture},
      {"EEGAGENT_CHAT_URL", &c.chat_url},             {"EEGAGENT_CHAT_MODEL", &c.chat_model},
      {"EEGAGENT_EMBEDDING_URL", &c.embedding_url},   {"EEGAGENT_EMBEDDING_MODEL", &c.embedding_model},
      {"EEGAGENT_KNOWLEDGE_DIR", &c.knowledge_dir},   {"EEGAGENT_API_TOKEN", &c.api_token}};
  for (const auto& [name, field] : vars) {
    if (auto v = env(name)) *field = *v;
  }
  if (auto v = env("EEGAGENT_STORE")) c.store = *v;
  json thresholds = json::object();
  if (auto v = env("EEGAGENT_ESCALATION_THRESHOLD")) thresholds["detection"] = {{"escalation_threshold", std::stod(*v)}};
  if (auto v = env("EEGAGENT_REFINE_THRESHOLD")) thresholds["refine_threshold"] = std::stod(*v);
  if (auto v = env("EEGAGENT_EVENT_THRESHOLD")) thresholds["report_event_threshold"] = std::stod(*v);
  return service_config_from_json(thresholds, c);
}

ServiceDeps make_service_deps(const ServiceConfig& cfg) {
  ServiceDeps d;
  RemoteOptions base{"", cfg.api_token, cfg.request_timeout_s, cfg.max_in_flight};
  base.api_key.clear();
  if (!cfg.classifier_url.empty()) {
    auto o = base;
    o.url = cfg.classifier_url;
    d.backend = std::make_shared<RemoteBackend>(o);
  } else if (!cfg.classifier_fixture.empty()) {
    d.backend = std::make_shared<ScriptedBackend>(ScriptedBackend::load(cfg.classifier_fixture));
  } else {
    d.backend = std::make_shared<BaselineBackend>();
  }
  std::shared_ptr<const EmbeddingBackend> embedding;
  if (!cfg.embedding_url.empty()) {
    auto o = base;
    o.url = cfg.embedding_url;
    embedding = std::make_shared<RemoteEmbedding>(o, cfg.embedding_model);
  }
  d.knowledge = std::make_shared<KnowledgeBase>(cfg.knowledge_dir.empty()
                                                    ? KnowledgeBase::builtin(embedding)
                                                    : KnowledgeBase::load_directory(cfg.knowledge_dir, embedding));
  if (!cfg.chat_url.empty()) {
    auto o = base;
    o.url = cfg.chat_url;
    d.chat = std::make_shared<ChatCompletionsClient>(o, cfg.chat_model);
  }
  return d;
}

MinMaxBins minmax_bins(const Eigen::Ref<const Eigen::VectorXd>& x, double rate_hz, std::size_t max_points) {
  MinMaxBins out;
  const auto n = static_cast<std::size_t>(x.size());
  const std::size_t bins = std::max<std::size_t>(1, std::min(n, max_points / 2));
  out.bin_s = static_cast<double>(n) / static_cast<double>(bins) / rate_hz;
  for (std::size_t b = 0; b < bins; ++b) {
    const auto first = static_cast<Eigen::Index>(b * n / bins);
    const auto last = static_cast<Eigen::Index>((b + 1) * n / bins);
    const auto seg = x.segment(first, std::max<Eigen::Index>(1, last - first));
    out.min.push_back(seg.minCoeff());
    out.max.push_back(seg.maxCoeff());
  }
  return out;
}

ServiceCore::ServiceCore(ServiceConfig cfg, ServiceDeps deps)
    : cfg_(std::move(cfg)), deps_(std::move(deps)), store_(cfg_.store) {
  if (!deps_.backend) fail(ErrorCode::InvalidArgument, "service needs a classifier backend");
  if (!deps_.knowledge) deps_.knowledge = std::make_shared<KnowledgeBase>(KnowledgeBase::builtin());
  if (!deps_.policy) {
    auto chat = deps_.chat;
    deps_.policy = [chat](const Recording& rec) -> std::unique_ptr<PlannerPolicy> {
      if (chat) return std::make_unique<ChatPolicy>(chat);
      return std::make_unique<HeuristicPolicy>(rec);
    };
  }
}

HttpResponse ServiceCore::handle(const HttpRequest& req) {
  try {
    if (!cfg_.api_token.empty() && req.path != "/health" && req.authorization != "Bearer " + cfg_.api_token) {
      fail(ErrorCode::Unauthorized, "missing or wrong bearer token");
    }
    return route(req);
  } catch (const Error& e) {
    if (http_status(e.code()) >= 500) spdlog::warn("{} {}: {}", req.method, req.path, e.what());
    return error_response(e);
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", req.method, req.path, e.what());
    return json_response(500, {{"error", {{"code", "Internal"}, {"message", e.what()}}}});
  }
}

HttpResponse ServiceCore::route(const HttpRequest& req) {
  static const std::regex rec_re("/recordings/([^/]+)(/.*)?");
  static const std::regex art_re("/artifacts/([^/]+)");
  static const std::regex ses_re("/sessions/([^/]+)(/.*)?");
  static const std::regex trace_re("/trace/([^/]+)");
  const auto& m = req.method;
  const auto& p = req.path;
  auto method_not_allowed = [&] { return json_response(405, {{"error", {{"code", "MethodNotAllowed"}, {"message", m + " " + p}}}}); };
  std::smatch sm;

  if (p == "/health") return json_response(200, {{"status", "ok"}, {"backend", std::string(deps_.backend->name())}});
  if (p == "/recordings") {
    if (m == "POST") return upload(req);
    if (m == "GET") return json_response(200, {{"recordings", store_.recording_ids()}});
    return method_not_allowed();
  }
  if (std::regex_match(p, sm, rec_re)) {
    const std::string rid = sm[1];
    const std::string rest = sm[2];
    if (!store_.has_recording(rid)) fail(ErrorCode::NotFound, "recording " + rid + " not found");
    std::smatch am;
    if (rest.empty() || rest == "/info") return m == "GET" ? info(rid) : method_not_allowed();
    if (rest == "/detect") return m == "POST" ? detect_route(rid, req) : method_not_allowed();
    if (rest == "/report") return m == "POST" ? report_route(rid, req) : method_not_allowed();
    if (rest == "/signal") return m == "GET" ? signal(rid, req) : method_not_allowed();
    if (rest == "/artifacts") {
      if (m != "GET") return method_not_allowed();
      return json_response(200, {{"artifacts", store_.artifact_ids(FileStore::Owner::Recording, rid)}});
    }
    if (std::regex_match(rest, am, art_re)) {
      if (m != "GET") return method_not_allowed();
      return {200, store_.get_artifact(FileStore::Owner::Recording, rid, am[1]), "application/json"};
    }
  }
  if (p == "/sessions") {
    if (m == "POST") return create_session(req);
    if (m == "GET") return list_sessions();
    return method_not_allowed();
  }
  if (std::regex_match(p, sm, ses_re)) {
    const std::string sid = sm[1];
    const std::string rest = sm[2];
    if (!store_.has_session(sid)) fail(ErrorCode::UnknownSession, "session " + sid + " not found");
    std::smatch tm;
    if (rest.empty()) return m == "GET" ? session(sid) : method_not_allowed();
    if (rest == "/query") return m == "POST" ? query(sid, req) : method_not_allowed();
    if (std::regex_match(rest, tm, trace_re)) {
      if (m != "GET") return method_not_allowed();
      return {200, store_.get_artifact(FileStore::Owner::Session, sid, tm[1]), "application/x-ndjson"};
    }
  }
  fail(ErrorCode::NotFound, "no route for " + m + " " + p);
}

std::shared_ptr<const Recording> ServiceCore::recording(const std::string& rid) {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(rid); it != cache_.end()) return it->second;
  }
  auto rec = std::make_shared<const Recording>(parse_edf(store_.recording_bytes(rid)));
  std::lock_guard lock(cache_mutex_);
  return cache_.emplace(rid, std::move(rec)).first->second;
}

HttpResponse ServiceCore::upload(const HttpRequest& req) {
  std::vector<std::string> warnings;
  Recording rec;
  try {
    rec = parse_edf(std::string_view(req.body), &warnings);
    validate(rec);
  } catch (const Error& e) {
    auto r = error_response(e, warnings);
    r.status = 422;
    return r;
  }
  const auto rid = store_.add_recording(req.body);
  auto shared = std::make_shared<const Recording>(std::move(rec));
  {
    std::lock_guard lock(cache_mutex_);
    cache_[rid] = shared;
  }
  return json_response(201, {{"id", rid}, {"info", base_info(*shared, *deps_.knowledge)}, {"warnings", warnings}});
}

HttpResponse ServiceCore::info(const std::string& rid) {
  return json_response(200, base_info(*recording(rid), *deps_.knowledge));
}

HttpResponse ServiceCore::detect_route(const std::string& rid, const HttpRequest& req) {
  const auto body = parse_body(req.body);
  std::vector<std::string> targets = {"seiz"};
  if (body.contains("targets")) targets = body.at("targets").get<std::vector<std::string>>();
  if (targets.empty()) fail(ErrorCode::InvalidArgument, "targets must not be empty");
  json cfg = cfg_.detection;
  if (body.contains("config")) cfg.update(body.at("config"));
  const auto config = detection_config_from_json(cfg);
  const auto rec = recording(rid);
  const auto result = detect(*rec, *deps_.backend, targets, config);
  const json artifact = {{"kind", "events"},
                         {"recording_id", rid},
                         {"targets", targets},
                         {"config", config},
                         {"events", result.events},
                         {"stats",
                          {{"scan_windows", result.stats.scan_windows},
                           {"coarse_windows", result.stats.coarse_windows},
                           {"escalated_windows", result.stats.escalated_windows},
                           {"fine_windows", result.stats.fine_windows},
                           {"backend_calls", result.stats.backend_calls}}}};
  const auto aid = store_.put_artifact(FileStore::Owner::Recording, rid, "events", artifact.dump());
  return json_response(201, {{"artifact_id", aid}, {"artifact", artifact}});
}

HttpResponse ServiceCore::report_route(const std::string& rid, const HttpRequest& req) {
  const auto body = parse_body(req.body);
  ReportOptions opt;
  opt.mode = render_mode_from_string(body.value("mode", std::string("template")));
  opt.event_threshold = cfg_.report_event_threshold;
  const auto decider_name = body.value("decider", std::string("deterministic"));
  if ((opt.mode == RenderMode::Chat || decider_name == "chat") && !deps_.chat) {
    fail(ErrorCode::InvalidArgument, "chat rendering and chat decisions need a configured chat endpoint");
  }
  opt.narrator = deps_.chat;
  std::unique_ptr<RefineDecider> decider;
  if (decider_name == "chat") {
    decider = std::make_unique<ChatDecider>(deps_.chat, cfg_.refine_threshold);
  } else if (decider_name == "deterministic") {
    decider = std::make_unique<DeterministicDecider>(cfg_.refine_threshold);
  } else {
    fail(ErrorCode::InvalidArgument, "decider must be 'deterministic' or 'chat'");
  }
  const auto rec = recording(rid);
  const auto r = generate_report(*rec, *deps_.knowledge, *deps_.backend, *decider, opt);
  const json artifact = {{"kind", "report"},
                         {"recording_id", rid},
                         {"mode", opt.mode == RenderMode::Chat ? "chat" : "template"},
                         {"decider", decider_name},
                         {"text", r.text},
                         {"draft", r.draft}};
  const auto aid = store_.put_artifact(FileStore::Owner::Recording, rid, "report", artifact.dump());
  return json_response(201, {{"artifact_id", aid}, {"artifact", artifact}});
}

HttpResponse ServiceCore::signal(const std::string& rid, const HttpRequest& req) {
  const auto rec = recording(rid);
  const double from = query_number(req, "from", 0.0);
  const double to = query_number(req, "to", rec->duration_s());
  Segment seg = Segment::whole_channels(*rec, from, to, rid);
  if (auto it = req.query.find("channels"); it != req.query.end() && !it->second.empty()) {
    seg.channel_labels.clear();
    for (const auto& c : split_csv(it->second)) seg.channel_labels.push_back(normalize_label(c));
  }
  const bool raw = query_flag(req, "raw");
  bool downsampled = false;
  json channels = json::array();
  for (const auto& s : slice(*rec, seg)) {
    const auto n = static_cast<std::size_t>(s.samples.size());
    json c = {{"label", s.label}, {"sample_rate_hz", s.sample_rate_hz}, {"n_samples", n}};
    if (raw || n <= cfg_.max_signal_points) {
      c["samples"] = std::vector<double>(s.samples.data(), s.samples.data() + s.samples.size());
    } else {
      const auto b = minmax_bins(s.samples, s.sample_rate_hz, cfg_.max_signal_points);
      c["bin_s"] = b.bin_s;
      c["min"] = b.min;
      c["max"] = b.max;
      downsampled = true;
    }
    channels.push_back(std::move(c));
  }
  return json_response(200, {{"recording_id", rid},
                             {"t_start", seg.t_start_s},
                             {"t_end", seg.t_end_s},
                             {"mode", downsampled ? "minmax" : "raw"},
                             {"channels", channels}});
}

HttpResponse ServiceCore::create_session(const HttpRequest& req) {
  const auto body = parse_body(req.body);
  if (!body.contains("recording_id") || !body.at("recording_id").is_string()) {
    fail(ErrorCode::InvalidArgument, "body needs a string recording_id");
  }
  const auto sid = store_.create_session(body.at("recording_id").get<std::string>(), utc_now());
  return json_response(201, store_.load_session(sid));
}

HttpResponse ServiceCore::list_sessions() {
  json out = json::array();
  for (const auto& sid : store_.session_ids()) {
    try {
      const auto s = store_.load_session(sid);
      out.push_back({{"id", s.id},
                     {"recording_id", s.recording_id},
                     {"created", s.created},
                     {"updated", s.updated},
                     {"turns", s.memory.turns.size()}});
    } catch (const Error& e) {
      out.push_back({{"id", sid}, {"error", std::string(to_string(e.code()))}});
    }
  }
  return json_response(200, {{"sessions", out}});
}

HttpResponse ServiceCore::session(const std::string& sid) {
  json j = store_.load_session(sid);
  j["traces"] = store_.artifact_ids(FileStore::Owner::Session, sid);
  return json_response(200, j);
}

HttpResponse ServiceCore::query(const std::string& sid, const HttpRequest& req) {
  const auto body = parse_body(req.body);
  const auto task = body.value("task", std::string());
  if (task.empty()) fail(ErrorCode::InvalidArgument, "body needs a non-empty task");
  {
    std::lock_guard lock(busy_mutex_);
    if (!busy_.insert(sid).second) fail(ErrorCode::SessionBusy, "session " + sid + " is already running a query");
  }
  struct Release {
    ServiceCore& core;
    std::string sid;
    ~Release() {
      std::lock_guard lock(core.busy_mutex_);
      core.busy_.erase(sid);
    }
  } release{*this, sid};

  auto s = store_.load_session(sid);
  const auto rec = recording(s.recording_id);
  const Toolbox toolbox(*rec, *deps_.knowledge, *deps_.backend, s.recording_id);
  auto policy = deps_.policy(*rec);
  const auto result = run_task(task, toolbox, *policy, cfg_.budget, s.memory);
  const auto tid = store_.put_artifact(FileStore::Owner::Session, sid, "trace", result.trace.to_jsonl());

  Turn turn{task, result.answer, {}};
  for (const auto& step : result.trace.steps) {
    if (step.observation) turn.observations.push_back(*step.observation);
  }
  s.memory.turns.push_back(std::move(turn));
  s.updated = utc_now();
  store_.save_session(s);
  return json_response(200, {{"answer", result.answer},
                             {"trace_id", tid},
                             {"steps_used", result.trace.steps_used},
                             {"budget_exhausted", result.trace.budget_exhausted},
                             {"tools", result.trace.tool_order()}});
}

struct HttpServer::Impl {
  explicit Impl(ServiceCore& c) : core(c) {}
  ServiceCore& core;
  httplib::Server server;
};

HttpServer::HttpServer(ServiceCore& core) : impl_(std::make_unique<Impl>(core)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.body = req.body;
    r.authorization = req.get_header_value("Authorization");
    const auto out = impl_->core.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  auto& s = impl_->server;
  s.set_payload_max_length(core.config().max_upload_bytes);
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Delete(".*", handler);
  s.Patch(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) fail(ErrorCode::InvalidArgument, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    fail(ErrorCode::InvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace eegagent
