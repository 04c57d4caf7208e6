// SPDX-License-Identifier: Apache-2.0
// Byte-level EDF construction with every header field overridable, for
// hand-checked parsing and malformed-input tests.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace synth {

struct RawSignal {
  std::string label = "EEG FP1-REF";
  std::string transducer = "AgAgCl electrode";
  std::string dimension = "uV";
  std::string physical_min = "-3276.8";
  std::string physical_max = "3276.7";
  std::string digital_min = "-32768";
  std::string digital_max = "32767";
  std::string prefilter = "HP:0.1Hz";
  std::string samples_per_record = "4";
  std::vector<std::int16_t> samples;  // all records, concatenated
};

struct RawEdf {
  std::string version = "0";
  std::string patient = "PAT-7 M 02-MAR-1951 Doe";
  std::string recording = "Startdate 04-MAR-2021 X X X";
  std::string start_date = "04.03.21";
  std::string start_time = "10.20.30";
  std::optional<std::string> header_bytes;  // default: computed
  std::string reserved;
  std::string num_records = "1";
  std::string record_duration = "1";
  std::optional<std::string> num_signals;  // default: computed
  std::vector<RawSignal> signals{RawSignal{}};
  std::size_t drop_tail_bytes = 0;

  static void put(std::string& out, const std::string& field, std::size_t width) {
    std::string f = field.substr(0, width);
    f.resize(width, ' ');
    out += f;
  }

  std::string bytes() const {
    std::string out;
    const std::size_t ns = signals.size();
    put(out, version, 8);
    put(out, patient, 80);
    put(out, recording, 80);
    put(out, start_date, 8);
    put(out, start_time, 8);
    put(out, header_bytes.value_or(std::to_string(256 * (ns + 1))), 8);
    put(out, reserved, 44);
    put(out, num_records, 8);
    put(out, record_duration, 8);
    put(out, num_signals.value_or(std::to_string(ns)), 4);
    for (const auto& s : signals) put(out, s.label, 16);
    for (const auto& s : signals) put(out, s.transducer, 80);
    for (const auto& s : signals) put(out, s.dimension, 8);
    for (const auto& s : signals) put(out, s.physical_min, 8);
    for (const auto& s : signals) put(out, s.physical_max, 8);
    for (const auto& s : signals) put(out, s.digital_min, 8);
    for (const auto& s : signals) put(out, s.digital_max, 8);
    for (const auto& s : signals) put(out, s.prefilter, 80);
    for (const auto& s : signals) put(out, s.samples_per_record, 8);
    for (std::size_t i = 0; i < ns; ++i) put(out, "", 32);

    std::size_t records = 0;
    for (const auto& s : signals) {
      const auto spr = std::stoul(s.samples_per_record);
      if (spr > 0) records = std::max(records, s.samples.size() / spr);
    }
    for (std::size_t r = 0; r < records; ++r) {
      for (const auto& s : signals) {
        const auto spr = std::stoul(s.samples_per_record);
        for (std::size_t k = 0; k < spr; ++k) {
          const std::size_t idx = r * spr + k;
          const auto v = static_cast<std::uint16_t>(idx < s.samples.size() ? s.samples[idx] : 0);
          out.push_back(static_cast<char>(v & 0xFF));
          out.push_back(static_cast<char>(v >> 8));
        }
      }
    }
    out.resize(out.size() - std::min(drop_tail_bytes, out.size()));
    return out;
  }
};

}  // namespace synth
