// SPDX-License-Identifier: Apache-2.0
#include "eegagent/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eegagent/embedded_data.hpp"
#include "eegagent/error.hpp"

namespace eegagent {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Eigen::VectorXd normalized(Eigen::VectorXd v) {
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

Eigen::VectorXd HashEmbedding::embed(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension_);
  for (const auto& tok : tokenize(text)) {
    const auto h = fnv1a(tok);
    const auto idx = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_));
    v[idx] += ((h >> 63) & 1u) ? -1.0 : 1.0;
  }
  return normalized(std::move(v));
}

std::string_view age_band(int age_years) {
  if (age_years < 13) return "pediatric";
  if (age_years < 18) return "adolescent";
  if (age_years < 65) return "adult";
  return "elderly";
}

KnowledgeEntry parse_knowledge_document(std::string_view text, std::string_view fallback_id) {
  KnowledgeEntry entry;
  entry.id = std::string(fallback_id);
  std::istringstream in{std::string(text)};
  std::string line;
  std::getline(in, line);
  if (trim(line) != "---") {
    fail(ErrorCode::InvalidArgument, "knowledge document '" + std::string(fallback_id) + "' lacks front matter");
  }
  bool closed = false;
  while (std::getline(in, line)) {
    if (trim(line) == "---") {
      closed = true;
      break;
    }
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    auto key = trim(std::string_view(line).substr(0, colon));
    auto value = trim(std::string_view(line).substr(colon + 1));
    if (key == "id") {
      entry.id = value;
    } else if (key == "title") {
      entry.title = value;
    } else if (key == "tags") {
      std::istringstream tags(value);
      std::string tag;
      while (std::getline(tags, tag, ',')) {
        auto eq = tag.find('=');
        if (eq == std::string::npos) continue;
        entry.tags[trim(std::string_view(tag).substr(0, eq))] = trim(std::string_view(tag).substr(eq + 1));
      }
    }
  }
  if (!closed) fail(ErrorCode::InvalidArgument, "unterminated front matter in '" + entry.id + "'");
  std::ostringstream body;
  body << in.rdbuf();
  entry.body = trim(body.str());
  if (entry.id.empty()) fail(ErrorCode::InvalidArgument, "knowledge document without id");
  return entry;
}

KnowledgeBase::KnowledgeBase(std::vector<KnowledgeEntry> entries,
                             std::shared_ptr<const EmbeddingBackend> backend)
    : entries_(std::move(entries)), backend_(std::move(backend)) {
  if (!backend_) backend_ = std::make_shared<HashEmbedding>();
}

KnowledgeBase KnowledgeBase::builtin(std::shared_ptr<const EmbeddingBackend> backend) {
  std::vector<KnowledgeEntry> entries;
  for (const auto& doc : embedded::knowledge_documents()) {
    auto name = std::string(doc.name);
    entries.push_back(parse_knowledge_document(doc.text, name.substr(0, name.rfind('.'))));
  }
  return KnowledgeBase(std::move(entries), std::move(backend));
}

KnowledgeBase KnowledgeBase::load_directory(const std::filesystem::path& dir,
                                            std::shared_ptr<const EmbeddingBackend> backend) {
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.is_regular_file() && f.path().extension() == ".md") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<KnowledgeEntry> entries;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::ostringstream text;
    text << in.rdbuf();
    entries.push_back(parse_knowledge_document(text.str(), f.stem().string()));
  }
  return KnowledgeBase(std::move(entries), std::move(backend));
}

void KnowledgeBase::ensure_embedded() const {
  std::call_once(*embedded_, [this] {
    std::vector<Eigen::VectorXd> vectors;
    vectors.reserve(entries_.size());
    for (const auto& e : entries_) vectors.push_back(normalized(backend_->embed(e.body)));
    embeddings_ = std::move(vectors);
  });
}

const Eigen::VectorXd& KnowledgeBase::embedding(std::size_t i) const {
  ensure_embedded();
  return embeddings_.at(i);
}

std::vector<RetrievedEntry> KnowledgeBase::retrieve(std::string_view query, std::size_t k) const {
  if (trim(query).empty()) fail(ErrorCode::InvalidArgument, "empty retrieval query");
  if (k < 1) fail(ErrorCode::InvalidArgument, "retrieval k must be at least 1");
  if (entries_.empty()) fail(ErrorCode::EmptyBase, "knowledge base is empty");
  ensure_embedded();
  const Eigen::VectorXd q = normalized(backend_->embed(query));

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    scored.emplace_back(std::clamp(q.dot(embeddings_[i]), -1.0, 1.0), i);
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return entries_[a.second].id < entries_[b.second].id;
  });
  std::vector<RetrievedEntry> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) {
    out.push_back({entries_[scored[i].second], scored[i].first});
  }
  return out;
}

const KnowledgeEntry& KnowledgeBase::age_band_note(std::optional<int> age_years) const {
  if (!age_years) fail(ErrorCode::AgeUnknown, "patient age is unknown");
  const auto band = age_band(*age_years);
  for (const auto& e : entries_) {
    auto it = e.tags.find("age_band");
    if (it != e.tags.end() && it->second == band) return e;
  }
  fail(ErrorCode::InvalidArgument, "knowledge base has no note for age band '" + std::string(band) + "'");
}

void to_json(nlohmann::json& j, const KnowledgeEntry& e) {
  j = {{"id", e.id}, {"title", e.title}, {"body", e.body}, {"tags", e.tags}};
}

}  // namespace eegagent
