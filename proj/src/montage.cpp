// SPDX-License-Identifier: Apache-2.0
#include "eegagent/montage.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "eegagent/embedded_data.hpp"
#include "eegagent/error.hpp"

namespace eegagent {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Hemisphere parse_hemisphere(const std::string& s) {
  if (s == "left") return Hemisphere::Left;
  if (s == "right") return Hemisphere::Right;
  if (s == "midline") return Hemisphere::Midline;
  fail(ErrorCode::InvalidArgument, "montage table: unknown hemisphere '" + s + "'");
}

Region parse_region(const std::string& s) {
  if (s == "frontal") return Region::Frontal;
  if (s == "central") return Region::Central;
  if (s == "temporal") return Region::Temporal;
  if (s == "parietal") return Region::Parietal;
  if (s == "occipital") return Region::Occipital;
  fail(ErrorCode::InvalidArgument, "montage table: unknown region '" + s + "'");
}

std::string_view combining_form(Region r) {
  switch (r) {
    case Region::Frontal: return "fronto";
    case Region::Central: return "centro";
    case Region::Temporal: return "temporo";
    case Region::Parietal: return "parieto";
    case Region::Occipital: return "occipito";
  }
  return "";
}

bool is_reference(const std::string& electrode) { return electrode == "A1" || electrode == "A2"; }

}  // namespace

std::string_view to_string(Hemisphere h) {
  switch (h) {
    case Hemisphere::Left: return "left";
    case Hemisphere::Right: return "right";
    case Hemisphere::Midline: return "midline";
  }
  return "";
}

std::string_view to_string(Region r) {
  switch (r) {
    case Region::Frontal: return "frontal";
    case Region::Central: return "central";
    case Region::Temporal: return "temporal";
    case Region::Parietal: return "parietal";
    case Region::Occipital: return "occipital";
  }
  return "";
}

std::string Location::describe() const {
  return std::string(to_string(hemisphere)) + " " + std::string(to_string(region));
}

RegionMap RegionMap::parse(std::string_view text) {
  RegionMap map;
  std::istringstream in{std::string(text)};
  std::string line, section;
  std::vector<std::pair<std::string, std::string>> pairs;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      auto body = trim(std::string_view(t).substr(1));
      if (body.rfind("version", 0) == 0) {
        auto eq = body.find('=');
        if (eq != std::string::npos) map.version_ = std::stoi(trim(std::string_view(body).substr(eq + 1)));
      }
      continue;
    }
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "montage table: bad line '" + t + "'");
    auto key = upper(trim(std::string_view(t).substr(0, eq)));
    auto value = trim(std::string_view(t).substr(eq + 1));
    if (section == "regions") {
      std::istringstream words(value);
      std::string hemi, region;
      words >> hemi >> region;
      map.entries_[key] = Location{parse_hemisphere(hemi), parse_region(region)};
    } else if (section == "aliases") {
      map.aliases_[key] = upper(value);
    } else if (section == "pairs") {
      pairs.emplace_back(key, upper(value));
    } else {
      fail(ErrorCode::InvalidArgument, "montage table: entry outside a known section");
    }
  }
  for (const auto& [left, right] : pairs) {
    auto l = map.electrode(left);
    auto r = map.electrode(right);
    if (l.hemisphere != Hemisphere::Left || r.hemisphere != Hemisphere::Right || l.region != r.region) {
      fail(ErrorCode::InvalidArgument, "montage table: pair " + left + "/" + right + " is not homologous");
    }
    map.mirror_[left] = right;
    map.mirror_[right] = left;
    map.pair_order_.push_back(left);
  }
  return map;
}

const RegionMap& RegionMap::standard() {
  static const RegionMap map = parse(embedded::montage_table());
  return map;
}

std::string RegionMap::canonical(std::string_view electrode) const {
  auto key = upper(electrode);
  auto it = aliases_.find(key);
  return it == aliases_.end() ? key : it->second;
}

bool RegionMap::contains(std::string_view electrode) const {
  return entries_.count(canonical(electrode)) > 0;
}

Location RegionMap::electrode(std::string_view electrode) const {
  auto it = entries_.find(canonical(electrode));
  if (it == entries_.end()) {
    fail(ErrorCode::UnknownElectrode, "unknown electrode '" + std::string(electrode) + "'");
  }
  return it->second;
}

std::string RegionMap::mirror(std::string_view electrode) const {
  auto key = canonical(electrode);
  auto it = mirror_.find(key);
  if (it != mirror_.end()) return it->second;
  if (entries_.count(key) && entries_.at(key).hemisphere == Hemisphere::Midline) return key;
  if (key == "A1") return "A2";
  if (key == "A2") return "A1";
  return {};
}

std::vector<std::string> electrodes_of(std::string_view label) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= label.size()) {
    auto dash = label.find('-', start);
    auto part = trim(label.substr(start, dash == std::string_view::npos ? std::string_view::npos : dash - start));
    if (!part.empty()) out.push_back(upper(part));
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  return out;
}

Location region_of(std::string_view label, const RegionMap& map) {
  auto parts = electrodes_of(label);
  if (parts.empty()) fail(ErrorCode::UnknownElectrode, "empty channel label");
  auto first = map.electrode(parts[0]);
  if (parts.size() >= 2 && map.contains(parts[1])) {
    auto second = map.electrode(parts[1]);
    bool opposite = (first.hemisphere == Hemisphere::Left && second.hemisphere == Hemisphere::Right) ||
                    (first.hemisphere == Hemisphere::Right && second.hemisphere == Hemisphere::Left);
    if (opposite) first.hemisphere = Hemisphere::Midline;
  }
  return first;
}

SymmetryPairs pairs_in(const std::vector<std::string>& channels, const RegionMap& map) {
  // Canonical electrode tuple per channel, for mirror matching.
  auto canonical_key = [&](std::string_view label) {
    std::string key;
    for (const auto& e : electrodes_of(label)) key += map.canonical(e) + "-";
    return key;
  };
  auto side_of = [&](std::string_view label) {
    bool left = false, right = false;
    for (const auto& e : electrodes_of(label)) {
      if (!map.contains(e)) return Hemisphere::Midline;
      auto h = map.electrode(e).hemisphere;
      left |= h == Hemisphere::Left;
      right |= h == Hemisphere::Right;
    }
    if (left && !right) return Hemisphere::Left;
    if (right && !left) return Hemisphere::Right;
    return Hemisphere::Midline;
  };

  struct Candidate {
    std::size_t rank;
    std::size_t index;
    SymmetryPair pair;
  };
  std::vector<Candidate> found;
  const auto& order = map.pair_order();
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (side_of(channels[i]) != Hemisphere::Left) continue;
    std::string mirrored;
    std::string anchor;
    bool ok = true;
    for (const auto& e : electrodes_of(channels[i])) {
      auto m = map.mirror(e);
      if (m.empty()) {
        ok = false;
        break;
      }
      mirrored += m + "-";
      if (anchor.empty() && map.electrode(e).hemisphere == Hemisphere::Left) anchor = map.canonical(e);
    }
    if (!ok) continue;
    for (const auto& other : channels) {
      if (canonical_key(other) == mirrored) {
        auto it = std::find(order.begin(), order.end(), anchor);
        found.push_back({static_cast<std::size_t>(it - order.begin()), i, {channels[i], other}});
        break;
      }
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
    return a.rank != b.rank ? a.rank < b.rank : a.index < b.index;
  });
  SymmetryPairs out;
  for (auto& c : found) out.push_back(std::move(c.pair));
  return out;
}

std::string describe_location(const std::vector<std::string>& channels, const RegionMap& map) {
  std::set<std::string> electrodes;
  for (const auto& ch : channels) {
    for (const auto& e : electrodes_of(ch)) {
      if (map.contains(e)) electrodes.insert(map.canonical(e));
    }
  }
  if (electrodes.size() > 1) {
    for (auto it = electrodes.begin(); it != electrodes.end();) {
      it = is_reference(*it) ? electrodes.erase(it) : std::next(it);
    }
  }
  if (electrodes.empty()) return "unlocalized";

  bool left = false, right = false;
  std::set<Region> regions;
  for (const auto& e : electrodes) {
    auto loc = map.electrode(e);
    left |= loc.hemisphere == Hemisphere::Left;
    right |= loc.hemisphere == Hemisphere::Right;
    regions.insert(loc.region);
  }
  std::string side = left && right ? "bilateral" : left ? "left" : right ? "right" : "midline";

  std::string area;
  std::size_t k = 0;
  for (auto r : regions) {
    ++k;
    if (k < regions.size()) {
      area += std::string(combining_form(r)) + "-";
    } else {
      area += std::string(to_string(r));
    }
  }
  return side + " " + area;
}

}  // namespace eegagent
