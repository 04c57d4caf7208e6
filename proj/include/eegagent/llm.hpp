// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace eegagent {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

/// A chat model: messages in, one reply out. Throws BackendUnavailable.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
};

/// Returns fixture replies in order; the last reply repeats once exhausted.
class ScriptedGenerator final : public TextGenerator {
 public:
  explicit ScriptedGenerator(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string complete(const std::vector<ChatMessage>& messages) const override;

  /// Every message list seen so far, for inspection in tests.
  std::vector<std::vector<ChatMessage>> transcripts() const;

 private:
  std::vector<std::string> replies_;
  mutable std::mutex mutex_;
  mutable std::size_t next_ = 0;
  mutable std::vector<std::vector<ChatMessage>> seen_;
};

void to_json(nlohmann::json& j, const ChatMessage& m);

}  // namespace eegagent
