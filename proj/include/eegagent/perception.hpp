// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eegagent/edf.hpp"
#include "eegagent/knowledge.hpp"
#include "eegagent/montage.hpp"
#include "json.hpp"

namespace eegagent {

struct ChannelSummary {
  std::string label;
  double sample_rate_hz = 0.0;
  std::optional<Location> location;  // nullopt for non-10-20 labels
};

/// What the agent knows about a recording before any analysis.
struct BaseInfoSummary {
  PatientInfo patient;
  std::string start;  // ISO 8601
  double duration_s = 0.0;
  std::vector<ChannelSummary> channels;
  std::optional<std::string> age_band;
  std::optional<KnowledgeEntry> age_note;
};

BaseInfoSummary base_info(const Recording& rec, const KnowledgeBase& kb);

void to_json(nlohmann::json& j, const BaseInfoSummary& s);

/// Human-readable rendering used by the CLI and inside prompts.
std::string to_text(const BaseInfoSummary& s);

}  // namespace eegagent
