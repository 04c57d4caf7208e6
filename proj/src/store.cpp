// SPDX-License-Identifier: Apache-2.0
#include "eegagent/store.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "eegagent/error.hpp"

namespace fs = std::filesystem;

namespace eegagent {
namespace {

constexpr std::string_view kMagic = "eegagent-store/1";
constexpr std::string_view kTombstone = ".quarantined";

bool valid_id(const std::string& id) {
  static const std::regex re("[a-z]+-[0-9]+");
  return std::regex_match(id, re);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

[[noreturn]] void write_failure(const fs::path& path, int err) {
  const std::string msg = "cannot write " + path.string() + ": " + std::strerror(err);
  fail(err == ENOSPC || err == EDQUOT || err == EFBIG ? ErrorCode::StorageFull : ErrorCode::InvalidArgument, msg);
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) write_failure(tmp, errno);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      ::unlink(tmp.c_str());
      write_failure(tmp, err);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    write_failure(tmp, err);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    write_failure(path, err);
  }
  fsync_dir(path.parent_path());
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void to_json(nlohmann::json& j, const SessionRecord& s) {
  j = {{"id", s.id},
       {"recording_id", s.recording_id},
       {"created", s.created},
       {"updated", s.updated},
       {"memory", s.memory.turns}};
}

void from_json(const nlohmann::json& j, SessionRecord& s) {
  s.id = j.at("id").get<std::string>();
  s.recording_id = j.at("recording_id").get<std::string>();
  s.created = j.value("created", std::string());
  s.updated = j.value("updated", std::string());
  s.memory.turns = j.value("memory", nlohmann::json::array()).get<std::vector<Turn>>();
}

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  for (const char* sub : {"recordings", "sessions", "quarantine"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) fail(ErrorCode::InvalidArgument, "cannot create store directory " + (root_ / sub).string() + ": " + ec.message());
  }
  // leftovers of interrupted writes
  for (const auto& e : fs::recursive_directory_iterator(root_)) {
    if (e.is_regular_file() && e.path().extension() == ".tmp") fs::remove(e.path(), ec);
  }
}

fs::path FileStore::owner_dir(Owner owner, const std::string& id) const {
  return root_ / (owner == Owner::Recording ? "recordings" : "sessions") / id;
}

void FileStore::write_checked(const fs::path& path, std::string_view payload) const {
  std::string out;
  out.reserve(payload.size() + 64);
  out += kMagic;
  out += " size=" + std::to_string(payload.size()) + " fnv1a64=" + hex64(fnv1a64(payload)) + "\n";
  out += payload;
  write_file_atomic(path, out);
}

std::string FileStore::read_checked(const fs::path& path, const std::string& what) const {
  std::lock_guard lock(mutex_);
  const fs::path tomb = path.string() + std::string(kTombstone);
  if (fs::exists(tomb)) fail(ErrorCode::CorruptRecord, what + " is corrupt and was quarantined");
  if (!fs::exists(path)) fail(ErrorCode::NotFound, what + " not found");
  const auto raw = read_all(path);
  const auto nl = raw.find('\n');
  bool ok = false;
  std::string payload;
  if (nl != std::string::npos) {
    std::istringstream header(raw.substr(0, nl));
    std::string magic, size_kv, hash_kv;
    header >> magic >> size_kv >> hash_kv;
    payload = raw.substr(nl + 1);
    ok = magic == kMagic && size_kv == "size=" + std::to_string(payload.size()) &&
         hash_kv == "fnv1a64=" + hex64(fnv1a64(payload));
  }
  if (ok) return payload;

  auto rel = fs::relative(path, root_).string();
  std::replace(rel.begin(), rel.end(), '/', '_');
  std::error_code ec;
  fs::rename(path, root_ / "quarantine" / rel, ec);
  write_file_atomic(tomb, utc_now() + "\n");
  spdlog::error("store: {} failed its integrity check; moved to quarantine/{}", path.string(), rel);
  fail(ErrorCode::CorruptRecord, what + " is corrupt and was quarantined");
}

std::string FileStore::allocate(const fs::path& parent, const std::string& prefix, int width) const {
  long next = 1;
  for (const auto& e : fs::directory_iterator(parent)) {
    auto name = e.path().filename().string();
    if (name.ends_with(kTombstone)) name.resize(name.size() - kTombstone.size());
    if (name.rfind(prefix + "-", 0) != 0 || name.ends_with(".tmp")) continue;
    try {
      next = std::max(next, std::stol(name.substr(prefix.size() + 1)) + 1);
    } catch (const std::exception&) {
    }
  }
  std::string digits = std::to_string(next);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + "-" + digits;
}

std::string FileStore::add_recording(std::string_view edf_bytes) {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = allocate(root_ / "recordings", "rec", 6);
    fs::create_directories(root_ / "recordings" / id / "artifacts");
  }
  write_checked(root_ / "recordings" / id / "recording.edf", edf_bytes);
  return id;
}

std::vector<std::string> FileStore::recording_ids() const {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root_ / "recordings")) {
    if (e.is_directory() && fs::exists(e.path() / "recording.edf")) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool FileStore::has_recording(const std::string& id) const {
  if (!valid_id(id)) return false;
  const auto p = root_ / "recordings" / id / "recording.edf";
  return fs::exists(p) || fs::exists(p.string() + std::string(kTombstone));
}

std::string FileStore::recording_bytes(const std::string& id) const {
  if (!valid_id(id)) fail(ErrorCode::NotFound, "recording " + id + " not found");
  return read_checked(root_ / "recordings" / id / "recording.edf", "recording " + id);
}

std::string FileStore::create_session(const std::string& recording_id, const std::string& now) {
  if (!has_recording(recording_id)) fail(ErrorCode::NotFound, "recording " + recording_id + " not found");
  SessionRecord s;
  {
    std::lock_guard lock(mutex_);
    s.id = allocate(root_ / "sessions", "ses", 6);
    fs::create_directories(root_ / "sessions" / s.id / "artifacts");
  }
  s.recording_id = recording_id;
  s.created = s.updated = now;
  save_session(s);
  return s.id;
}

std::vector<std::string> FileStore::session_ids() const {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root_ / "sessions")) {
    const auto p = e.path() / "session.json";
    if (e.is_directory() && (fs::exists(p) || fs::exists(p.string() + std::string(kTombstone)))) {
      out.push_back(e.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool FileStore::has_session(const std::string& id) const {
  if (!valid_id(id)) return false;
  const auto p = root_ / "sessions" / id / "session.json";
  return fs::exists(p) || fs::exists(p.string() + std::string(kTombstone));
}

SessionRecord FileStore::load_session(const std::string& id) const {
  if (!valid_id(id)) fail(ErrorCode::UnknownSession, "session " + id + " not found");
  const auto path = root_ / "sessions" / id / "session.json";
  if (!has_session(id)) fail(ErrorCode::UnknownSession, "session " + id + " not found");
  const auto text = read_checked(path, "session " + id);
  try {
    return nlohmann::json::parse(text).get<SessionRecord>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptRecord, "session " + id + ": " + e.what());
  }
}

void FileStore::save_session(const SessionRecord& s) {
  write_checked(root_ / "sessions" / s.id / "session.json", nlohmann::json(s).dump());
}

std::string FileStore::put_artifact(Owner owner, const std::string& owner_id, const std::string& kind,
                                    std::string_view bytes) {
  const auto dir = owner_dir(owner, owner_id) / "artifacts";
  if (!valid_id(owner_id) || !fs::is_directory(dir)) fail(ErrorCode::NotFound, owner_id + " not found");
  std::lock_guard lock(mutex_);
  const auto id = allocate(dir, kind, 4);
  write_checked(dir / id, bytes);
  return id;
}

std::string FileStore::get_artifact(Owner owner, const std::string& owner_id, const std::string& artifact_id) const {
  if (!valid_id(owner_id) || !valid_id(artifact_id)) fail(ErrorCode::NotFound, "artifact " + artifact_id + " not found");
  return read_checked(owner_dir(owner, owner_id) / "artifacts" / artifact_id, "artifact " + artifact_id);
}

std::vector<std::string> FileStore::artifact_ids(Owner owner, const std::string& owner_id) const {
  const auto dir = owner_dir(owner, owner_id) / "artifacts";
  if (!valid_id(owner_id) || !fs::is_directory(dir)) fail(ErrorCode::NotFound, owner_id + " not found");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.ends_with(".tmp")) continue;
    out.push_back(name.ends_with(kTombstone) ? name.substr(0, name.size() - kTombstone.size()) : name);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace eegagent
