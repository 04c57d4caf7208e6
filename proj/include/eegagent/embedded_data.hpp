// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>
#include <vector>

namespace eegagent::embedded {

struct EmbeddedDocument {
  std::string_view name;
  std::string_view text;
};

std::string_view montage_table();
std::vector<EmbeddedDocument> knowledge_documents();

}  // namespace eegagent::embedded
