// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace eegagent {

enum class Hemisphere { Left, Right, Midline };
enum class Region { Frontal, Central, Temporal, Parietal, Occipital };

std::string_view to_string(Hemisphere h);
std::string_view to_string(Region r);

struct Location {
  Hemisphere hemisphere = Hemisphere::Midline;
  Region region = Region::Central;

  bool operator==(const Location&) const = default;

  /// "left frontal", "midline central", ...
  std::string describe() const;
};

struct SymmetryPair {
  std::string left_label;
  std::string right_label;

  bool operator==(const SymmetryPair&) const = default;
};

using SymmetryPairs = std::vector<SymmetryPair>;

/// The electrode table: regions, legacy aliases and homologous pairs.
class RegionMap {
 public:
  /// Parses the key-value table format of data/montage_regions.txt.
  static RegionMap parse(std::string_view text);

  /// The table compiled into the library.
  static const RegionMap& standard();

  int version() const { return version_; }

  /// Modern electrode name for a legacy alias (T3 → T7); identity otherwise.
  std::string canonical(std::string_view electrode) const;

  bool contains(std::string_view electrode) const;

  /// Throws UnknownElectrode.
  Location electrode(std::string_view electrode) const;

  /// Homolog across the midline (C3 → C4); midline electrodes map to themselves.
  std::string mirror(std::string_view electrode) const;

  /// Canonical left electrodes in front-to-back order.
  const std::vector<std::string>& pair_order() const { return pair_order_; }

  const std::map<std::string, Location>& entries() const { return entries_; }

 private:
  int version_ = 0;
  std::map<std::string, Location> entries_;
  std::map<std::string, std::string> aliases_;
  std::map<std::string, std::string> mirror_;
  std::vector<std::string> pair_order_;
};

/// Electrode names of a channel label: "FP1-F3" → {FP1, F3}, "CZ" → {CZ}.
std::vector<std::string> electrodes_of(std::string_view label);

/// Location of a (normalized) channel label. Derivations take the first
/// electrode's region; the hemisphere is midline when the two electrodes
/// sit on opposite sides.
Location region_of(std::string_view label, const RegionMap& map = RegionMap::standard());

/// Homologous left/right channel pairs among `channels`, front to back.
SymmetryPairs pairs_in(const std::vector<std::string>& channels,
                       const RegionMap& map = RegionMap::standard());

/// Compact description of where a set of channels lies, e.g.
/// "left fronto-central" for {FP1-F3, F3-C3}. Unknown labels are ignored.
std::string describe_location(const std::vector<std::string>& channels,
                              const RegionMap& map = RegionMap::standard());

}  // namespace eegagent
