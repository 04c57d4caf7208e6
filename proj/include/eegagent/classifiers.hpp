// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "eegagent/edf.hpp"
#include "eegagent/features.hpp"
#include "eegagent/segment.hpp"
#include "json.hpp"

namespace eegagent {

enum class ToolKind { Parametric, NonParametric };
enum class TimeGranularity { Full, TenSeconds, OneSecond, UpTo60s };
enum class SpaceGranularity { Whole, SingleChannel, LrPair };

std::string_view to_string(ToolKind k);
std::string_view to_string(TimeGranularity g);
std::string_view to_string(SpaceGranularity g);

struct ToolSpec {
  std::string name;
  ToolKind kind = ToolKind::NonParametric;
  TimeGranularity time = TimeGranularity::UpTo60s;
  SpaceGranularity space = SpaceGranularity::Whole;
  std::vector<std::string> labels;  // ordered; empty for non-parametric tools
  std::string background_label;     // the "nothing found" class
  std::string description;

  bool parametric() const { return kind == ToolKind::Parametric; }
  /// Nominal window length: 1 or 10 s; 0 for full-recording and ≤60 s tools.
  double window_s() const;
};

/// Every tool the agent can call, in a fixed order.
const std::vector<ToolSpec>& tool_table();

/// Throws UnknownTool.
const ToolSpec& tool_spec(std::string_view name);
const ToolSpec* find_tool(std::string_view name);

inline constexpr std::string_view kWholeChannel = "all";

/// A distribution over an ordered set of class names.
struct ClassProbabilities {
  std::vector<std::string> labels;
  Eigen::VectorXd values;

  /// 0 for labels outside the set.
  double at(std::string_view label) const;
  /// First label holding the maximum.
  const std::string& argmax() const;
  bool is_distribution(double tolerance = 1e-6) const;

  bool operator==(const ClassProbabilities& other) const {
    return labels == other.labels && values == other.values;
  }
};

/// Output for one channel ("all" for whole-channel tools).
struct ChannelProbabilities {
  std::string channel;
  ClassProbabilities probs;
};

using WindowProbabilities = std::vector<ChannelProbabilities>;

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& z) {
  using Vec = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  Vec e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

/// Tunables of the built-in rule classifier.
struct BaselineConfig {
  double sharpness = 10.0;           // softmax gain applied to rule evidence
  double amplitude_ref_uv = 50.0;    // rms at which the amplitude factor is 1
  double amplitude_scale_uv = 25.0;  // rms change per unit of z
  double silence_power_uv2 = 1e-9;   // band power below which a window is silent
  double missing_mirror_asymmetry = 1.0;
};

BaselineConfig baseline_config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const BaselineConfig& c);

/// Spatial facts the eye-movement rule needs about a channel.
struct RuleContext {
  bool frontal = false;
  std::optional<double> delta_asymmetry;  // |d - d_mirror| / (d + d_mirror)
};

/// Rule evidence on a common ratio scale.
struct RuleEvidence {
  double slow = 0.0;        // delta ratio
  double seizure = 0.0;     // (theta + alpha)/2 ratio × exp(amplitude z)
  double artifact = 0.0;    // gamma ratio
  double eye = 0.0;         // frontal delta ratio × delta asymmetry
  double background = 0.0;  // (alpha + beta)/2 ratio, +1 when silent
};

RuleEvidence rule_evidence(const BandPowerT<double>& bands, const AmplitudeStatsT<double>& amp,
                           const RuleContext& ctx = {}, const BaselineConfig& cfg = {});

/// Logits in the tool's label order. Throws UnknownTool for non-parametric tools.
Eigen::VectorXd rule_scores(std::string_view tool, const RuleEvidence& ev, const BaselineConfig& cfg = {});

/// softmax(rule_scores(...)).
ClassProbabilities baseline_rules(std::string_view tool, const BandPowerT<double>& bands,
                                  const AmplitudeStatsT<double>& amp, const RuleContext& ctx = {},
                                  const BaselineConfig& cfg = {});

/// Maps (tool, windows) to class probabilities. Implementations must be safe
/// to call concurrently.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual std::string_view name() const = 0;
  /// One result per window. Single-channel tools yield one entry per segment
  /// channel; whole-channel tools a single entry for channel "all".
  virtual std::vector<WindowProbabilities> classify_batch(const ToolSpec& tool, const Recording& rec,
                                                          std::span<const Segment> windows) const = 0;
};

/// Deterministic stand-in for the trained models.
class BaselineBackend final : public ClassifierBackend {
 public:
  explicit BaselineBackend(BaselineConfig cfg = {}) : cfg_(cfg) {}
  std::string_view name() const override { return "baseline"; }
  std::vector<WindowProbabilities> classify_batch(const ToolSpec& tool, const Recording& rec,
                                                  std::span<const Segment> windows) const override;
  const BaselineConfig& config() const { return cfg_; }

 private:
  WindowProbabilities classify_one(const ToolSpec& tool, const Recording& rec, const Segment& seg) const;
  BaselineConfig cfg_;
};

/// One fixture row: returned for every query window of `tool` on `channel`
/// that overlaps [t_start_s, t_end_s). Channel "*" matches any channel.
struct ScriptedEntry {
  std::string tool;
  std::string channel;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  ClassProbabilities probs;
  std::string recording;  // empty: any recording
};

/// Replays fixture probabilities; windows without a matching entry get the
/// tool default, else probability 1 on the background label.
class ScriptedBackend final : public ClassifierBackend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<ScriptedEntry> entries) : entries_(std::move(entries)) {}

  static ScriptedBackend from_json(const nlohmann::json& fixture);
  static ScriptedBackend load(const std::filesystem::path& path);

  void add(ScriptedEntry e) { entries_.push_back(std::move(e)); }
  void set_default(const std::string& tool, ClassProbabilities p);

  std::string_view name() const override { return "scripted"; }
  std::vector<WindowProbabilities> classify_batch(const ToolSpec& tool, const Recording& rec,
                                                  std::span<const Segment> windows) const override;
  const std::vector<ScriptedEntry>& entries() const { return entries_; }

 private:
  ClassProbabilities lookup(const ToolSpec& tool, const std::string& recording, const std::string& channel,
                            double t0, double t1) const;
  std::vector<ScriptedEntry> entries_;
  std::vector<std::pair<std::string, ClassProbabilities>> defaults_;
};

/// Probability vector in the tool's label order from a {label: p} object.
/// Extra labels follow in name order. Throws InvalidArgument off the simplex.
ClassProbabilities probabilities_from_json(const ToolSpec& tool, const nlohmann::json& obj);

/// Probability 1 on `label`.
ClassProbabilities one_hot(const ToolSpec& tool, std::string_view label);

/// Throws GranularityMismatch when `seg` does not fit the tool's time
/// granularity: 1 s ± one sample; 10 s (or the recording's shorter tail);
/// the full recording; at most 60 s.
void check_granularity(const ToolSpec& tool, const Recording& rec, const Segment& seg);

/// Validated single-window classification.
WindowProbabilities classify(const ToolSpec& tool, const Recording& rec, const Segment& seg,
                             const ClassifierBackend& backend);

/// Validated batch classification, one backend call.
std::vector<WindowProbabilities> classify(const ToolSpec& tool, const Recording& rec,
                                          std::span<const Segment> windows, const ClassifierBackend& backend);

void to_json(nlohmann::json& j, const ClassProbabilities& p);
void to_json(nlohmann::json& j, const ChannelProbabilities& p);
void to_json(nlohmann::json& j, const ToolSpec& t);

}  // namespace eegagent
