// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "eegagent/classifiers.hpp"
#include "support/synth.hpp"

namespace cases {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string fixture_path(const std::string& name) { return std::string(EEGAGENT_TEST_DIR) + "/fixtures/" + name; }
inline std::string golden_path(const std::string& name) { return std::string(EEGAGENT_TEST_DIR) + "/golden/" + name; }

/// Elderly patient, 60 s banana montage: diffuse 2 Hz slowing everywhere and a
/// 7 Hz posterior rhythm on the occipital derivations.
inline eegagent::Recording fig5_recording() {
  const auto& labels = synth::bipolar_banana();
  return synth::make_recording(
      labels, 128.0, 60.0,
      [&](std::size_t c, double t) {
        const bool occipital = labels[c].size() > 2 && labels[c].substr(labels[c].size() - 2, 1) == "O";
        return synth::sine(t, 2.0, 60.0, 0.3 * static_cast<double>(c)) + (occipital ? synth::sine(t, 7.0, 40.0) : 0.0);
      },
      78);
}

inline eegagent::ScriptedBackend fig5_backend() { return eegagent::ScriptedBackend::load(fixture_path("fig5_backend.json")); }

}  // namespace cases
