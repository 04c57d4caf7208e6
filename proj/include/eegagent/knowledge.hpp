// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace eegagent {

struct KnowledgeEntry {
  std::string id;
  std::string title;
  std::string body;
  std::map<std::string, std::string> tags;  // e.g. age_band=elderly
};

/// Text → fixed-dimension vector. Implementations must be deterministic.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
};

/// Signed feature hashing over lower-cased word tokens, L2-normalized.
/// Offline stand-in for a neural embedding model.
class HashEmbedding final : public EmbeddingBackend {
 public:
  explicit HashEmbedding(Eigen::Index dimension = 256) : dimension_(dimension) {}
  Eigen::VectorXd embed(std::string_view text) const override;

 private:
  Eigen::Index dimension_;
};

/// Lower-cased alphanumeric word tokens.
std::vector<std::string> tokenize(std::string_view text);

/// L2 normalization; the zero vector is returned unchanged.
Eigen::VectorXd normalized(Eigen::VectorXd v);

struct RetrievedEntry {
  KnowledgeEntry entry;
  double score = 0.0;  // cosine similarity
};

inline constexpr std::size_t kDefaultRetrievalK = 3;

/// Immutable set of entries with exact cosine search. Embeddings are computed
/// on first use and cached.
class KnowledgeBase {
 public:
  KnowledgeBase(std::vector<KnowledgeEntry> entries, std::shared_ptr<const EmbeddingBackend> backend);

  /// Entries shipped with the library, embedded with HashEmbedding unless a
  /// backend is given.
  static KnowledgeBase builtin(std::shared_ptr<const EmbeddingBackend> backend = nullptr);

  /// Loads every *.md document (front matter + body) in `dir`.
  static KnowledgeBase load_directory(const std::filesystem::path& dir,
                                      std::shared_ptr<const EmbeddingBackend> backend = nullptr);

  const std::vector<KnowledgeEntry>& entries() const { return entries_; }

  /// Unit-norm embedding of entry `i` (its body text).
  const Eigen::VectorXd& embedding(std::size_t i) const;

  /// Top-k entries by descending cosine similarity; ties broken by id.
  std::vector<RetrievedEntry> retrieve(std::string_view query, std::size_t k = kDefaultRetrievalK) const;

  /// The normative note for the patient's age band. Throws AgeUnknown.
  const KnowledgeEntry& age_band_note(std::optional<int> age_years) const;

 private:
  void ensure_embedded() const;

  std::vector<KnowledgeEntry> entries_;
  std::shared_ptr<const EmbeddingBackend> backend_;
  mutable std::vector<Eigen::VectorXd> embeddings_;
  mutable std::unique_ptr<std::once_flag> embedded_ = std::make_unique<std::once_flag>();
};

/// Age band name: pediatric (<13), adolescent (13-17), adult (18-64), elderly (>=65).
std::string_view age_band(int age_years);

/// Parses one knowledge document. Throws InvalidArgument on a bad front matter.
KnowledgeEntry parse_knowledge_document(std::string_view text, std::string_view fallback_id = {});

void to_json(nlohmann::json& j, const KnowledgeEntry& e);

}  // namespace eegagent
