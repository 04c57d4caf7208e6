// SPDX-License-Identifier: Apache-2.0
#include "eegagent/llm.hpp"

#include "eegagent/error.hpp"

namespace eegagent {

std::string ScriptedGenerator::complete(const std::vector<ChatMessage>& messages) const {
  std::lock_guard lock(mutex_);
  seen_.push_back(messages);
  if (replies_.empty()) fail(ErrorCode::BackendUnavailable, "scripted generator has no replies");
  const auto& reply = replies_[std::min(next_, replies_.size() - 1)];
  ++next_;
  return reply;
}

std::vector<std::vector<ChatMessage>> ScriptedGenerator::transcripts() const {
  std::lock_guard lock(mutex_);
  return seen_;
}

void to_json(nlohmann::json& j, const ChatMessage& m) { j = {{"role", m.role}, {"content", m.content}}; }

}  // namespace eegagent
