// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace eegagent {

enum class Sex { Male, Female, Unknown };

std::string_view to_string(Sex sex);

struct PatientInfo {
  std::string id;    // hospital code, may be empty
  std::string name;  // may be anonymized or empty
  Sex sex = Sex::Unknown;
  std::optional<int> age_years;

  bool operator==(const PatientInfo&) const = default;
};

struct CalendarTime {
  int year = 1985;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  bool operator==(const CalendarTime&) const = default;

  std::string iso8601() const;
};

struct ChannelInfo {
  std::string label;  // normalized, e.g. "FP1-F3"
  std::string physical_dim = "uV";
  double sample_rate_hz = 0.0;

  // Storage parameters kept so a recording can be written back bit-exactly.
  double physical_min = -3276.8;
  double physical_max = 3276.7;
  int digital_min = -32768;
  int digital_max = 32767;
  int samples_per_record = 0;
  std::string transducer;
  std::string prefilter;

  bool operator==(const ChannelInfo&) const = default;

  /// Microvolts per digital step.
  double gain() const {
    return (physical_max - physical_min) / static_cast<double>(digital_max - digital_min);
  }
};

/// A parsed EEG recording. Immutable once built; signals are in microvolts.
struct Recording {
  PatientInfo patient;
  std::string recording_info;
  CalendarTime start;
  double record_duration_s = 1.0;
  int num_records = 0;
  std::vector<ChannelInfo> channels;
  std::vector<Eigen::VectorXd> signals;

  double duration_s() const { return record_duration_s * num_records; }

  /// Index of a channel by (normalized) label, or nullopt.
  std::optional<std::size_t> channel_index(std::string_view label) const;

  std::vector<std::string> channel_labels() const;

  bool operator==(const Recording& other) const;
};

/// Uppercase, drop an "EEG " prefix and a "-REF" / "-LE" suffix.
std::string normalize_label(std::string_view raw);

/// Digital → physical conversion used by the parser.
inline double to_physical(const ChannelInfo& ch, int digital) {
  return ch.physical_min + static_cast<double>(digital - ch.digital_min) * ch.gain();
}

Recording parse_edf(std::span<const std::uint8_t> bytes,
                    std::vector<std::string>* warnings = nullptr);
Recording parse_edf(std::string_view bytes, std::vector<std::string>* warnings = nullptr);
Recording read_edf_file(const std::filesystem::path& path,
                        std::vector<std::string>* warnings = nullptr);

/// Writes a 16-bit EDF file. Samples outside the channel's physical range are
/// clipped to the digital range.
std::vector<std::uint8_t> serialize_edf(const Recording& rec);
void write_edf_file(const Recording& rec, const std::filesystem::path& path);

/// Checks the structural invariants (rates, sample counts, unique labels).
void validate(const Recording& rec);

/// Shortest decimal text of at most 8 characters representing `value`.
std::string format_header_number(double value);

}  // namespace eegagent
