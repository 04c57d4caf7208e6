// SPDX-License-Identifier: Apache-2.0
#include "eegagent/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "eegagent/error.hpp"
#include "eegagent/montage.hpp"

namespace eegagent {
namespace {

std::vector<ToolSpec> build_table() {
  using TG = TimeGranularity;
  using SG = SpaceGranularity;
  const auto P = ToolKind::Parametric;
  const auto N = ToolKind::NonParametric;
  return {
      {"baseInfo", N, TG::Full, SG::Whole, {}, "",
       "Patient demographics, recording metadata, montage regions and age-related expectations."},
      {"normalAbnormal", P, TG::Full, SG::Whole, {"normal", "abnormal"}, "normal",
       "Classifies the whole recording as normal or abnormal."},
      {"eyemMuscle", P, TG::OneSecond, SG::SingleChannel, {"eyem", "muscle", "none"}, "none",
       "Detects eye-movement and muscle artifacts within a 1 s window per channel."},
      {"seizArtiBckg", P, TG::OneSecond, SG::SingleChannel, {"seiz", "artf", "bckg"}, "bckg",
       "Separates seizure activity, artifact and background within a 1 s window per channel."},
      {"seizNormal", P, TG::OneSecond, SG::SingleChannel, {"seiz", "normal"}, "normal",
       "Detects seizure vs. non-seizure within a 1 s window per channel."},
      {"slowSeizBckg", P, TG::TenSeconds, SG::Whole, {"slow", "seiz", "bckg"}, "bckg",
       "Screens a 10 s multichannel window for slowing, seizure activity or background."},
      {"compute_amplitude", N, TG::UpTo60s, SG::Whole, {}, "",
       "Amplitude statistics per channel: mean absolute value, RMS, max and min."},
      {"compute_psd", N, TG::UpTo60s, SG::Whole, {}, "",
       "Welch power spectral density integrated over delta, theta, alpha, beta and gamma."},
      {"compute_symmetry", N, TG::UpTo60s, SG::LrPair, {}, "",
       "Pearson correlation of homologous left/right channel pairs."},
  };
}

double one_sample_s(const Recording& rec, const Segment& seg) {
  double tol = 0.0;
  for (const auto& label : seg.channel_labels) {
    if (auto idx = rec.channel_index(label)) tol = std::max(tol, 1.0 / rec.channels[*idx].sample_rate_hz);
  }
  return tol + kTimeEpsilon;
}

BandPowerT<double> window_bands(const Eigen::Ref<const Eigen::VectorXd>& x, double rate_hz) {
  if (x.size() < 2) {
    BandPowerT<double> empty;
    empty.gamma_available = rate_hz >= kGammaMinRateHz;
    return empty;
  }
  WelchOptions opt;
  opt.window_s = std::min(1.0, static_cast<double>(x.size()) / rate_hz);
  return band_powers(x, rate_hz, opt);
}

bool is_frontal(const std::string& label) {
  try {
    return region_of(label).region == Region::Frontal;
  } catch (const Error&) {
    return false;
  }
}

double asymmetry(double a, double b) {
  const double s = a + b;
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

std::map<std::string, std::string> homologs(const Recording& rec) {
  std::map<std::string, std::string> out;
  for (const auto& p : pairs_in(rec.channel_labels())) {
    out[p.left_label] = p.right_label;
    out[p.right_label] = p.left_label;
  }
  return out;
}

ClassProbabilities make_probs(const ToolSpec& tool, Eigen::VectorXd values) {
  return ClassProbabilities{tool.labels, std::move(values)};
}

}  // namespace

std::string_view to_string(ToolKind k) {
  return k == ToolKind::Parametric ? "parametric" : "non-parametric";
}

std::string_view to_string(TimeGranularity g) {
  switch (g) {
    case TimeGranularity::Full: return "full";
    case TimeGranularity::TenSeconds: return "10s";
    case TimeGranularity::OneSecond: return "1s";
    case TimeGranularity::UpTo60s: return "<=60s";
  }
  return "";
}

std::string_view to_string(SpaceGranularity g) {
  switch (g) {
    case SpaceGranularity::Whole: return "whole";
    case SpaceGranularity::SingleChannel: return "single_channel";
    case SpaceGranularity::LrPair: return "lr_pair";
  }
  return "";
}

double ToolSpec::window_s() const {
  switch (time) {
    case TimeGranularity::OneSecond: return 1.0;
    case TimeGranularity::TenSeconds: return 10.0;
    default: return 0.0;
  }
}

const std::vector<ToolSpec>& tool_table() {
  static const std::vector<ToolSpec> table = build_table();
  return table;
}

const ToolSpec* find_tool(std::string_view name) {
  if (name == "base_info") name = "baseInfo";
  for (const auto& t : tool_table()) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const ToolSpec& tool_spec(std::string_view name) {
  if (const auto* t = find_tool(name)) return *t;
  fail(ErrorCode::UnknownTool, "unknown tool '" + std::string(name) + "'");
}

double ClassProbabilities::at(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return values[static_cast<Eigen::Index>(i)];
  }
  return 0.0;
}

const std::string& ClassProbabilities::argmax() const {
  if (labels.empty()) fail(ErrorCode::InvalidArgument, "argmax of an empty distribution");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return labels[static_cast<std::size_t>(best)];
}

bool ClassProbabilities::is_distribution(double tolerance) const {
  if (labels.empty() || static_cast<std::size_t>(values.size()) != labels.size()) return false;
  if (!values.allFinite()) return false;
  if ((values.array() < -tolerance).any() || (values.array() > 1.0 + tolerance).any()) return false;
  return std::abs(values.sum() - 1.0) <= tolerance;
}

BaselineConfig baseline_config_from_json(const nlohmann::json& j) {
  BaselineConfig c;
  c.sharpness = j.value("sharpness", c.sharpness);
  c.amplitude_ref_uv = j.value("amplitude_ref_uv", c.amplitude_ref_uv);
  c.amplitude_scale_uv = j.value("amplitude_scale_uv", c.amplitude_scale_uv);
  c.silence_power_uv2 = j.value("silence_power_uv2", c.silence_power_uv2);
  c.missing_mirror_asymmetry = j.value("missing_mirror_asymmetry", c.missing_mirror_asymmetry);
  if (!(c.sharpness > 0.0) || !(c.amplitude_scale_uv > 0.0)) {
    fail(ErrorCode::InvalidArgument, "baseline sharpness and amplitude scale must be positive");
  }
  return c;
}

void to_json(nlohmann::json& j, const BaselineConfig& c) {
  j = {{"sharpness", c.sharpness},
       {"amplitude_ref_uv", c.amplitude_ref_uv},
       {"amplitude_scale_uv", c.amplitude_scale_uv},
       {"silence_power_uv2", c.silence_power_uv2},
       {"missing_mirror_asymmetry", c.missing_mirror_asymmetry}};
}

RuleEvidence rule_evidence(const BandPowerT<double>& bands, const AmplitudeStatsT<double>& amp,
                           const RuleContext& ctx, const BaselineConfig& cfg) {
  const bool silent = bands.band_sum() <= cfg.silence_power_uv2;
  const double z = std::clamp((amp.rms - cfg.amplitude_ref_uv) / cfg.amplitude_scale_uv, -20.0, 20.0);
  RuleEvidence ev;
  ev.slow = bands.ratio(Band::Delta);
  ev.seizure = 0.5 * (bands.ratio(Band::Theta) + bands.ratio(Band::Alpha)) * std::exp(z);
  ev.artifact = bands.gamma_available ? bands.ratio(Band::Gamma) : 0.0;
  ev.eye = ctx.frontal ? bands.ratio(Band::Delta) * ctx.delta_asymmetry.value_or(cfg.missing_mirror_asymmetry)
                       : 0.0;
  ev.background = 0.5 * (bands.ratio(Band::Alpha) + bands.ratio(Band::Beta)) + (silent ? 1.0 : 0.0);
  return ev;
}

Eigen::VectorXd rule_scores(std::string_view tool, const RuleEvidence& ev, const BaselineConfig& cfg) {
  const auto& spec = tool_spec(tool);
  if (!spec.parametric()) fail(ErrorCode::UnknownTool, "'" + spec.name + "' has no baseline rule");
  Eigen::VectorXd z(static_cast<Eigen::Index>(spec.labels.size()));
  for (std::size_t i = 0; i < spec.labels.size(); ++i) {
    const auto& l = spec.labels[i];
    double e = ev.background;
    if (l == "slow") e = ev.slow;
    else if (l == "seiz") e = ev.seizure;
    else if (l == "artf" || l == "muscle") e = ev.artifact;
    else if (l == "eyem") e = ev.eye;
    else if (l == "abnormal") e = std::max(ev.slow, ev.seizure);
    z[static_cast<Eigen::Index>(i)] = cfg.sharpness * e;
  }
  return z;
}

ClassProbabilities baseline_rules(std::string_view tool, const BandPowerT<double>& bands,
                                  const AmplitudeStatsT<double>& amp, const RuleContext& ctx,
                                  const BaselineConfig& cfg) {
  const auto& spec = tool_spec(tool);
  return make_probs(spec, softmax(rule_scores(tool, rule_evidence(bands, amp, ctx, cfg), cfg)));
}

WindowProbabilities BaselineBackend::classify_one(const ToolSpec& tool, const Recording& rec,
                                                  const Segment& seg) const {
  const auto slices = slice(rec, seg);
  const auto mirror = homologs(rec);

  auto mirror_bands = [&](const std::string& label, double t0, double t1) -> std::optional<BandPowerT<double>> {
    auto it = mirror.find(label);
    if (it == mirror.end()) return std::nullopt;
    const auto idx = *rec.channel_index(it->second);
    const double rate = rec.channels[idx].sample_rate_hz;
    auto [first, last] = sample_range(t0, t1, rate);
    const auto& sig = rec.signals[idx];
    first = std::clamp<Eigen::Index>(first, 0, sig.size());
    last = std::clamp<Eigen::Index>(last, first, sig.size());
    return window_bands(sig.segment(first, last - first), rate);
  };
  auto context = [&](const std::string& label, const BandPowerT<double>& bands, double t0, double t1) {
    RuleContext ctx;
    ctx.frontal = is_frontal(label);
    if (ctx.frontal) {
      if (auto m = mirror_bands(label, t0, t1)) ctx.delta_asymmetry = asymmetry(bands[Band::Delta], (*m)[Band::Delta]);
    }
    return ctx;
  };

  WindowProbabilities out;
  if (tool.space == SpaceGranularity::SingleChannel) {
    for (const auto& s : slices) {
      if (s.samples.size() == 0) fail(ErrorCode::EmptySegment, "no samples on '" + s.label + "'");
      const auto bands = window_bands(s.samples, s.sample_rate_hz);
      const auto amp = amplitude_stats(s.samples);
      out.push_back({s.label, baseline_rules(tool.name, bands, amp, context(s.label, bands, seg.t_start_s, seg.t_end_s), cfg_)});
    }
    return out;
  }

  // Whole-channel window: diffuse evidence from pooled band powers, focal
  // evidence from the strongest (channel, 1 s epoch) unit.
  BandPowerT<double> pooled;
  pooled.gamma_available = true;
  double sum_sq = 0.0;
  AmplitudeStatsT<double> pooled_amp{0.0, 0.0, -std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity()};
  double focal_seizure = 0.0, focal_artifact = 0.0, focal_eye = 0.0;
  const double duration = seg.duration_s();
  const auto epochs = static_cast<int>(std::floor(duration + kTimeEpsilon));
  for (const auto& s : slices) {
    if (s.samples.size() == 0) fail(ErrorCode::EmptySegment, "no samples on '" + s.label + "'");
    const auto bands = window_bands(s.samples, s.sample_rate_hz);
    const auto amp = amplitude_stats(s.samples);
    for (auto b : kBands) pooled.power[static_cast<std::size_t>(b)] += bands[b];
    pooled.total += bands.total;
    pooled.gamma_available = pooled.gamma_available && bands.gamma_available;
    pooled_amp.mean_abs += amp.mean_abs / static_cast<double>(slices.size());
    sum_sq += amp.rms * amp.rms;
    pooled_amp.max = std::max(pooled_amp.max, amp.max);
    pooled_amp.min = std::min(pooled_amp.min, amp.min);

    auto unit = [&](double t0, double t1) {
      auto [first, last] = sample_range(t0 - seg.t_start_s, t1 - seg.t_start_s, s.sample_rate_hz);
      first = std::clamp<Eigen::Index>(first, 0, s.samples.size());
      last = std::clamp<Eigen::Index>(last, first, s.samples.size());
      if (last - first < 2) return;
      auto x = s.samples.segment(first, last - first);
      const auto ub = window_bands(x, s.sample_rate_hz);
      const auto ev = rule_evidence(ub, amplitude_stats(x), context(s.label, ub, t0, t1), cfg_);
      focal_seizure = std::max(focal_seizure, ev.seizure);
      focal_artifact = std::max(focal_artifact, ev.artifact);
      focal_eye = std::max(focal_eye, ev.eye);
    };
    if (epochs == 0) {
      unit(seg.t_start_s, seg.t_end_s);
    } else {
      for (int e = 0; e < epochs; ++e) unit(seg.t_start_s + e, seg.t_start_s + e + 1);
    }
  }
  pooled_amp.rms = std::sqrt(sum_sq / static_cast<double>(slices.size()));
  auto ev = rule_evidence(pooled, pooled_amp, {}, cfg_);
  ev.seizure = focal_seizure;
  ev.artifact = focal_artifact;
  ev.eye = focal_eye;
  out.push_back({std::string(kWholeChannel), make_probs(tool, softmax(rule_scores(tool.name, ev, cfg_)))});
  return out;
}

std::vector<WindowProbabilities> BaselineBackend::classify_batch(const ToolSpec& tool, const Recording& rec,
                                                                 std::span<const Segment> windows) const {
  if (!tool.parametric()) fail(ErrorCode::UnknownTool, "'" + tool.name + "' is not a classifier");
  std::vector<WindowProbabilities> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(classify_one(tool, rec, w));
  return out;
}

ClassProbabilities probabilities_from_json(const ToolSpec& tool, const nlohmann::json& obj) {
  if (!obj.is_object() || obj.empty()) fail(ErrorCode::InvalidArgument, "probabilities must be a non-empty object");
  ClassProbabilities p;
  std::vector<double> values;
  for (const auto& l : tool.labels) {
    p.labels.push_back(l);
    values.push_back(obj.contains(l) ? obj.at(l).get<double>() : 0.0);
  }
  for (const auto& [k, v] : obj.items()) {
    if (std::find(tool.labels.begin(), tool.labels.end(), k) != tool.labels.end()) continue;
    p.labels.push_back(k);
    values.push_back(v.get<double>());
  }
  p.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (!p.is_distribution()) fail(ErrorCode::InvalidArgument, "probabilities do not sum to 1 for '" + tool.name + "'");
  return p;
}

ClassProbabilities one_hot(const ToolSpec& tool, std::string_view label) {
  ClassProbabilities p{tool.labels, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tool.labels.size()))};
  for (std::size_t i = 0; i < tool.labels.size(); ++i) {
    if (tool.labels[i] == label) {
      p.values[static_cast<Eigen::Index>(i)] = 1.0;
      return p;
    }
  }
  fail(ErrorCode::InvalidArgument, "label '" + std::string(label) + "' not produced by " + tool.name);
}

ScriptedBackend ScriptedBackend::from_json(const nlohmann::json& fixture) {
  ScriptedBackend b;
  for (const auto& e : fixture.value("entries", nlohmann::json::array())) {
    const auto& tool = tool_spec(e.at("tool").get<std::string>());
    ScriptedEntry entry;
    entry.tool = tool.name;
    entry.channel = e.value("channel", std::string("*"));
    entry.t_start_s = e.value("t_start", 0.0);
    entry.t_end_s = e.value("t_end", std::numeric_limits<double>::infinity());
    entry.recording = e.value("recording", std::string());
    entry.probs = probabilities_from_json(tool, e.at("probs"));
    b.add(std::move(entry));
  }
  if (fixture.contains("defaults")) {
    for (const auto& [name, probs] : fixture.at("defaults").items()) {
      const auto& tool = tool_spec(name);
      b.set_default(tool.name, probabilities_from_json(tool, probs));
    }
  }
  return b;
}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open classifier fixture " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, "bad classifier fixture " + path.string() + ": " + e.what());
  }
}

void ScriptedBackend::set_default(const std::string& tool, ClassProbabilities p) {
  for (auto& [name, probs] : defaults_) {
    if (name == tool) {
      probs = std::move(p);
      return;
    }
  }
  defaults_.emplace_back(tool, std::move(p));
}

ClassProbabilities ScriptedBackend::lookup(const ToolSpec& tool, const std::string& recording,
                                           const std::string& channel, double t0, double t1) const {
  for (const auto& e : entries_) {
    if (e.tool != tool.name) continue;
    if (!e.recording.empty() && e.recording != recording) continue;
    if (e.channel != "*" && e.channel != channel) continue;
    if (std::min(t1, e.t_end_s) - std::max(t0, e.t_start_s) > kTimeEpsilon) return e.probs;
  }
  for (const auto& [name, probs] : defaults_) {
    if (name == tool.name) return probs;
  }
  return one_hot(tool, tool.background_label);
}

std::vector<WindowProbabilities> ScriptedBackend::classify_batch(const ToolSpec& tool, const Recording&,
                                                                 std::span<const Segment> windows) const {
  if (!tool.parametric()) fail(ErrorCode::UnknownTool, "'" + tool.name + "' is not a classifier");
  std::vector<WindowProbabilities> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    WindowProbabilities wp;
    if (tool.space == SpaceGranularity::SingleChannel) {
      for (const auto& ch : w.channel_labels) {
        wp.push_back({ch, lookup(tool, w.recording_ref, ch, w.t_start_s, w.t_end_s)});
      }
    } else {
      wp.push_back({std::string(kWholeChannel),
                    lookup(tool, w.recording_ref, std::string(kWholeChannel), w.t_start_s, w.t_end_s)});
    }
    out.push_back(std::move(wp));
  }
  return out;
}

void check_granularity(const ToolSpec& tool, const Recording& rec, const Segment& seg) {
  validate(rec, seg);
  const double tol = one_sample_s(rec, seg);
  const double d = seg.duration_s();
  const double end = rec.duration_s();
  auto mismatch = [&](const std::string& want) {
    fail(ErrorCode::GranularityMismatch, tool.name + " expects " + want + ", got a " + std::to_string(d) + " s window");
  };
  switch (tool.time) {
    case TimeGranularity::OneSecond:
      if (std::abs(d - 1.0) > tol) mismatch("a 1 s window");
      break;
    case TimeGranularity::TenSeconds:
      if (std::abs(d - 10.0) > tol && !(d < 10.0 && std::abs(seg.t_end_s - end) <= tol)) mismatch("a 10 s window");
      break;
    case TimeGranularity::Full:
      if (std::abs(seg.t_start_s) > tol || std::abs(seg.t_end_s - end) > tol) mismatch("the full recording");
      break;
    case TimeGranularity::UpTo60s:
      if (d > kMaxFeatureWindowS + kTimeEpsilon) mismatch("a window of at most 60 s");
      break;
  }
}

std::vector<WindowProbabilities> classify(const ToolSpec& tool, const Recording& rec,
                                          std::span<const Segment> windows, const ClassifierBackend& backend) {
  if (!tool.parametric()) fail(ErrorCode::UnknownTool, "'" + tool.name + "' is not a classifier");
  for (const auto& w : windows) check_granularity(tool, rec, w);
  if (windows.empty()) return {};
  auto out = backend.classify_batch(tool, rec, windows);
  if (out.size() != windows.size()) {
    fail(ErrorCode::BackendUnavailable, std::string(backend.name()) + " returned " + std::to_string(out.size()) +
                                            " results for " + std::to_string(windows.size()) + " windows");
  }
  for (const auto& wp : out) {
    for (const auto& cp : wp) {
      if (!cp.probs.is_distribution()) {
        fail(ErrorCode::BackendUnavailable, std::string(backend.name()) + " returned an invalid distribution");
      }
    }
  }
  return out;
}

WindowProbabilities classify(const ToolSpec& tool, const Recording& rec, const Segment& seg,
                             const ClassifierBackend& backend) {
  return std::move(classify(tool, rec, std::span<const Segment>(&seg, 1), backend).front());
}

void to_json(nlohmann::json& j, const ClassProbabilities& p) {
  j = nlohmann::json::object();
  for (std::size_t i = 0; i < p.labels.size(); ++i) j[p.labels[i]] = p.values[static_cast<Eigen::Index>(i)];
}

void to_json(nlohmann::json& j, const ChannelProbabilities& p) {
  j = {{"channel", p.channel}, {"probabilities", p.probs}, {"label", p.probs.argmax()}};
}

void to_json(nlohmann::json& j, const ToolSpec& t) {
  j = {{"name", t.name},
       {"kind", std::string(to_string(t.kind))},
       {"time_granularity", std::string(to_string(t.time))},
       {"space_granularity", std::string(to_string(t.space))},
       {"labels", t.labels},
       {"description", t.description}};
}

}  // namespace eegagent
