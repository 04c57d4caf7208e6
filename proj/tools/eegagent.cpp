// SPDX-License-Identifier: Apache-2.0
// eegagent command-line front end.
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "eegagent/agent.hpp"
#include "eegagent/detection.hpp"
#include "eegagent/edf.hpp"
#include "eegagent/error.hpp"
#include "eegagent/exploration.hpp"
#include "eegagent/perception.hpp"
#include "eegagent/reporting.hpp"
#include "eegagent/service.hpp"
#include "eegagent/toolbox.hpp"

using namespace eegagent;
using nlohmann::json;

namespace {

struct Globals {
  bool json_out = false;
  std::string config;
  std::string fixture;
  bool verbose = false;
};

ServiceConfig load_config(const Globals& g) {
  auto cfg = load_service_config(g.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(g.config));
  if (!g.fixture.empty()) {
    cfg.classifier_fixture = g.fixture;
    cfg.classifier_url.clear();
  }
  return cfg;
}

Recording load_recording(const std::string& path) {
  std::vector<std::string> warnings;
  auto rec = read_edf_file(path, &warnings);
  for (const auto& w : warnings) spdlog::warn("{}: {}", path, w);
  return rec;
}

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot open " + out + " for writing");
  f << text;
}

int serve(const ServiceConfig& cfg) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceCore core(cfg, make_service_deps(cfg));
  HttpServer server(core);
  const int port = server.bind(cfg.host, cfg.port);
  spdlog::info("listening on http://{}:{} (store {})", cfg.host, port, cfg.store.string());
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG analysis agent: recording summaries, exploration, event detection, reports and an HTTP service."};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json_out, "Print machine-readable JSON");
  app.add_option("--config", g.config, "Service/backends configuration file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--fixture", g.fixture, "Use a scripted classifier fixture instead of the configured backend")
      ->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  std::string file;
  auto* info = app.add_subcommand("info", "Patient, recording and channel summary");
  info->add_option("file", file, "EDF file")->required()->check(CLI::ExistingFile);

  double from = 0.0, to = -1.0, dt = kDefaultExplorationStepS;
  int threads = 1;
  auto* explore_cmd = app.add_subcommand("explore", "Segment-wise exploration of a time range");
  explore_cmd->add_option("file", file, "EDF file")->required()->check(CLI::ExistingFile);
  explore_cmd->add_option("--from", from, "Start time in seconds")->check(CLI::NonNegativeNumber);
  explore_cmd->add_option("--to", to, "End time in seconds (default: end of recording)");
  explore_cmd->add_option("--dt", dt, "Segment length in seconds")->check(CLI::PositiveNumber);
  explore_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> targets = {"seiz"};
  std::string reference, out;
  double iou_threshold = 0.7;
  auto* detect_cmd = app.add_subcommand("detect", "Coarse-to-fine event detection");
  detect_cmd->add_option("file", file, "EDF file")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("-t,--target", targets, "Target label: seiz, slow, artf, eyem, muscle (repeatable)");
  detect_cmd->add_option("--reference", reference, "Reference annotations CSV to evaluate against")
      ->check(CLI::ExistingFile);
  detect_cmd->add_option("--iou", iou_threshold, "IoU threshold for evaluation")->check(CLI::Range(0.0, 1.0));
  detect_cmd->add_option("-o,--out", out, "Write events as JSON lines");
  detect_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string mode = "template", decider_name = "deterministic";
  auto* report_cmd = app.add_subcommand("report", "Generate a structured EEG report");
  report_cmd->add_option("file", file, "EDF file")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--mode", mode, "template or chat")->check(CLI::IsMember({"template", "chat"}));
  report_cmd->add_option("--decider", decider_name, "deterministic or chat")
      ->check(CLI::IsMember({"deterministic", "chat"}));
  report_cmd->add_option("-o,--out", out, "Write the report text (or JSON with --json) here");
  report_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string task, trace_out;
  auto* ask_cmd = app.add_subcommand("ask", "Run one agent task against a recording");
  ask_cmd->add_option("file", file, "EDF file")->required()->check(CLI::ExistingFile);
  ask_cmd->add_option("task", task, "Task text, e.g. \"Analyze minute 5 to 6\"")->required();
  ask_cmd->add_option("--trace", trace_out, "Write the trace as JSON lines");

  std::string store, host;
  int port = -1;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--store", store, "Store directory");
  serve_cmd->add_option("--host", host, "Bind address");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    auto cfg = load_config(g);
    if (*serve_cmd) {
      if (!store.empty()) cfg.store = store;
      if (!host.empty()) cfg.host = host;
      if (port >= 0) cfg.port = port;
      return serve(cfg);
    }

    const auto deps = make_service_deps(cfg);
    const auto rec = load_recording(file);

    if (*info) {
      const auto summary = base_info(rec, *deps.knowledge);
      write_or_print("", g.json_out ? json(summary).dump(2) : to_text(summary));
      return 0;
    }
    if (*explore_cmd) {
      const Toolbox toolbox(rec, *deps.knowledge, *deps.backend, file);
      ExploreOptions opt;
      opt.dt_s = dt;
      opt.threads = threads;
      const auto s = explore(toolbox, from, to < 0 ? rec.duration_s() : to, opt);
      write_or_print("", g.json_out ? json(s).dump(2) : to_text(s));
      return 0;
    }
    if (*detect_cmd) {
      auto dcfg = cfg.detection;
      dcfg.threads = threads;
      const auto result = detect(rec, *deps.backend, targets, dcfg);
      if (!out.empty()) write_or_print(out, events_to_jsonl(result.events));
      json j = {{"events", result.events},
                {"stats",
                 {{"coarse_windows", result.stats.coarse_windows},
                  {"escalated_windows", result.stats.escalated_windows},
                  {"fine_windows", result.stats.fine_windows},
                  {"backend_calls", result.stats.backend_calls}}}};
      std::optional<EvalReport> eval;
      if (!reference.empty()) {
        eval = evaluate(result.events, load_reference_csv(reference, rec.channel_labels()), iou_threshold);
        j["evaluation"] = *eval;
      }
      if (g.json_out) {
        write_or_print("", j.dump(2));
      } else if (out.empty()) {
        std::cout << events_to_jsonl(result.events);
        std::cout << result.events.size() << " events; " << result.stats.coarse_windows << " coarse windows, "
                  << result.stats.escalated_windows << " escalated, " << result.stats.fine_windows
                  << " fine analyses\n";
        if (eval) std::cout << "hit rate " << eval->hit_rate << ", false rate " << eval->false_rate << "\n";
      } else {
        std::cout << result.events.size() << " events written to " << out << "\n";
        if (eval) std::cout << "hit rate " << eval->hit_rate << ", false rate " << eval->false_rate << "\n";
      }
      return 0;
    }
    if (*report_cmd) {
      ReportOptions opt;
      opt.mode = render_mode_from_string(mode);
      opt.narrator = deps.chat;
      opt.threads = threads;
      opt.event_threshold = cfg.report_event_threshold;
      if ((opt.mode == RenderMode::Chat || decider_name == "chat") && !deps.chat) {
        fail(ErrorCode::InvalidArgument, "chat mode needs EEGAGENT_CHAT_URL or chat_url in the config");
      }
      std::unique_ptr<RefineDecider> decider;
      if (decider_name == "chat") {
        decider = std::make_unique<ChatDecider>(deps.chat, cfg.refine_threshold);
      } else {
        decider = std::make_unique<DeterministicDecider>(cfg.refine_threshold);
      }
      const auto r = generate_report(rec, *deps.knowledge, *deps.backend, *decider, opt);
      write_or_print(out, g.json_out ? json{{"text", r.text}, {"draft", r.draft}}.dump(2) : r.text);
      return 0;
    }
    if (*ask_cmd) {
      const Toolbox toolbox(rec, *deps.knowledge, *deps.backend, file);
      std::unique_ptr<PlannerPolicy> policy;
      if (deps.chat) {
        policy = std::make_unique<ChatPolicy>(deps.chat);
      } else {
        policy = std::make_unique<HeuristicPolicy>(rec);
      }
      const auto r = run_task(task, toolbox, *policy, cfg.budget);
      if (!trace_out.empty()) write_or_print(trace_out, r.trace.to_jsonl());
      write_or_print("", g.json_out ? json{{"answer", r.answer}, {"tools", r.trace.tool_order()}}.dump(2) : r.answer);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::BackendUnavailable ? 3 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
