// SPDX-License-Identifier: Apache-2.0
// Writes a synthetic 120 s banana-montage recording with a 6 Hz burst on
// F4-C4 during the first second.
#include <iostream>

#include "eegagent/edf.hpp"
#include "support/synth.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_demo_edf OUT.edf\n";
    return 2;
  }
  const auto& labels = synth::bipolar_banana();
  auto rec = synth::make_recording(
      labels, 128.0, 120.0,
      [&](std::size_t c, double t) {
        return synth::background(c, t) + (labels[c] == "F4-C4" && t < 1.0 ? synth::seizure_burst(t) : 0.0);
      },
      78);
  eegagent::write_edf_file(rec, argv[1]);
  return 0;
}
