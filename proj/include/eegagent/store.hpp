// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "eegagent/agent.hpp"
#include "json.hpp"

namespace eegagent {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Writes `bytes` to a temporary sibling, flushes it and renames it over
/// `path`. Throws StorageFull when the device is out of space.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

struct SessionRecord {
  std::string id;
  std::string recording_id;
  std::string created;  // ISO 8601, UTC
  std::string updated;
  SessionMemory memory;
};

void to_json(nlohmann::json& j, const SessionRecord& s);
void from_json(const nlohmann::json& j, SessionRecord& s);

/// Directory-per-object store:
///
///   recordings/<rid>/recording.edf
///   recordings/<rid>/artifacts/<aid>
///   sessions/<sid>/session.json
///   sessions/<sid>/artifacts/<aid>
///   quarantine/
///
/// Every file carries a one-line header with its payload size and checksum.
/// A file that fails the check is moved to quarantine/ and reads as
/// CorruptRecord from then on. Artifacts are write-once.
class FileStore {
 public:
  explicit FileStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::string add_recording(std::string_view edf_bytes);
  std::vector<std::string> recording_ids() const;
  bool has_recording(const std::string& id) const;
  /// Throws NotFound or CorruptRecord.
  std::string recording_bytes(const std::string& id) const;

  std::string create_session(const std::string& recording_id, const std::string& now);
  std::vector<std::string> session_ids() const;
  bool has_session(const std::string& id) const;
  SessionRecord load_session(const std::string& id) const;
  void save_session(const SessionRecord& s);

  enum class Owner { Recording, Session };
  /// Stores a new artifact "<kind>-NNNN" and returns its id.
  std::string put_artifact(Owner owner, const std::string& owner_id, const std::string& kind, std::string_view bytes);
  std::string get_artifact(Owner owner, const std::string& owner_id, const std::string& artifact_id) const;
  std::vector<std::string> artifact_ids(Owner owner, const std::string& owner_id) const;

 private:
  std::filesystem::path owner_dir(Owner owner, const std::string& id) const;
  std::string read_checked(const std::filesystem::path& path, const std::string& what) const;
  void write_checked(const std::filesystem::path& path, std::string_view payload) const;
  std::string allocate(const std::filesystem::path& parent, const std::string& prefix, int width) const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now();

}  // namespace eegagent
