// SPDX-License-Identifier: Apache-2.0
#include "eegagent/edf.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "eegagent/error.hpp"

namespace eegagent {
namespace {

constexpr std::size_t kFixedHeaderBytes = 256;
constexpr std::size_t kSignalHeaderBytes = 256;
constexpr std::string_view kAnnotationsLabel = "EDF Annotations";

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n\0");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

double parse_double(std::string_view field, std::string_view what) {
  auto text = trim(field);
  double value = 0.0;
  if (!text.empty() && text.front() == '+') text.erase(0, 1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorCode::MalformedHeader,
         "field '" + std::string(what) + "' is not a number: '" + std::string(field) + "'");
  }
  return value;
}

long parse_int(std::string_view field, std::string_view what) {
  auto text = trim(field);
  if (!text.empty() && text.front() == '+') text.erase(0, 1);
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorCode::MalformedHeader,
         "field '" + std::string(what) + "' is not an integer: '" + std::string(field) + "'");
  }
  return value;
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      fail(ErrorCode::MalformedHeader, "header ends before all fields are present");
    }
    std::string_view out(reinterpret_cast<const char*>(bytes_.data()) + pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Two-digit years follow the EDF clipping convention: 85-99 → 19xx.
CalendarTime parse_start(std::string_view date_field, std::string_view time_field) {
  auto date = trim(date_field);
  auto time = trim(time_field);
  auto split3 = [](const std::string& s, std::string_view what) {
    std::array<int, 3> parts{};
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      auto end = i < 2 ? s.find_first_of(".:", start) : s.size();
      if (end == std::string::npos) {
        fail(ErrorCode::MalformedHeader, "bad " + std::string(what) + ": '" + s + "'");
      }
      parts[i] = static_cast<int>(parse_int(std::string_view(s).substr(start, end - start), what));
      start = end + 1;
    }
    return parts;
  };
  auto d = split3(date, "start date");
  auto t = split3(time, "start time");
  CalendarTime ct;
  ct.day = d[0];
  ct.month = d[1];
  ct.year = d[2] >= 85 ? 1900 + d[2] : 2000 + d[2];
  ct.hour = t[0];
  ct.minute = t[1];
  ct.second = t[2];
  if (ct.month < 1 || ct.month > 12 || ct.day < 1 || ct.day > 31 || ct.hour > 23 ||
      ct.minute > 59 || ct.second > 60) {
    fail(ErrorCode::MalformedHeader, "start date/time out of range");
  }
  return ct;
}

std::optional<int> age_from_birthdate(std::string_view token, const CalendarTime& start) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC"};
  auto t = upper(token);
  if (t.size() != 11 || t[2] != '-' || t[6] != '-') return std::nullopt;
  auto month_it = std::find(kMonths.begin(), kMonths.end(), std::string_view(t).substr(3, 3));
  if (month_it == kMonths.end()) return std::nullopt;
  int day = 0, year = 0;
  auto r1 = std::from_chars(t.data(), t.data() + 2, day);
  auto r2 = std::from_chars(t.data() + 7, t.data() + 11, year);
  if (r1.ec != std::errc{} || r2.ec != std::errc{}) return std::nullopt;
  int month = static_cast<int>(month_it - kMonths.begin()) + 1;
  int age = start.year - year;
  if (start.month < month || (start.month == month && start.day < day)) --age;
  if (age < 0) return std::nullopt;
  return age;
}

PatientInfo parse_patient(std::string_view field, const CalendarTime& start,
                          std::vector<std::string>* warnings) {
  PatientInfo info;
  std::istringstream in{trim(field)};
  std::vector<std::string> tokens{std::istream_iterator<std::string>(in),
                                  std::istream_iterator<std::string>()};

  std::optional<int> age;
  std::vector<std::string> rest;
  for (const auto& tok : tokens) {
    auto u = upper(tok);
    if (u.rfind("AGE:", 0) == 0) {
      long value = -1;
      auto digits = std::string_view(tok).substr(4);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec == std::errc{} && ptr == digits.data() + digits.size()) age = static_cast<int>(value);
    } else {
      rest.push_back(tok);
    }
  }

  auto is_sex = [](const std::string& s) { return s == "M" || s == "F" || s == "X"; };
  if (rest.size() >= 2 && is_sex(upper(rest[1]))) {
    info.id = rest[0] == "X" ? "" : rest[0];
    auto s = upper(rest[1]);
    info.sex = s == "M" ? Sex::Male : s == "F" ? Sex::Female : Sex::Unknown;
    if (!age && rest.size() >= 3) age = age_from_birthdate(rest[2], start);
    if (rest.size() >= 4) {
      std::string name;
      for (std::size_t i = 3; i < rest.size(); ++i) name += (i > 3 ? " " : "") + rest[i];
      info.name = name == "X" ? "" : name;
    }
  } else {
    std::string name;
    for (std::size_t i = 0; i < rest.size(); ++i) name += (i ? " " : "") + rest[i];
    info.name = name;
  }

  if (age && (*age < 0 || *age > 130)) {
    if (warnings) warnings->push_back("implausible patient age " + std::to_string(*age) + " ignored");
    age.reset();
  }
  info.age_years = age;
  return info;
}

// Scale factor to microvolts, or nullopt for non-voltage units.
std::optional<double> microvolt_scale(std::string_view dim) {
  auto d = trim(dim);
  if (d == "uV" || d == "UV" || d == "\xC2\xB5V" || d == "\xCE\xBCV") return 1.0;
  if (d == "mV" || d == "MV") return 1e3;
  if (d == "V") return 1e6;
  if (d == "nV" || d == "NV") return 1e-3;
  return std::nullopt;
}

void put_field(std::string& out, std::string_view text, std::size_t width, std::string_view what) {
  if (text.size() > width) {
    fail(ErrorCode::InvalidArgument,
         "value for '" + std::string(what) + "' exceeds " + std::to_string(width) + " characters");
  }
  out.append(text);
  out.append(width - text.size(), ' ');
}

std::string two_digits(int v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

std::string_view to_string(Sex sex) {
  switch (sex) {
    case Sex::Male: return "male";
    case Sex::Female: return "female";
    case Sex::Unknown: return "unknown";
  }
  return "unknown";
}

std::string CalendarTime::iso8601() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", year, month, day, hour, minute,
                second);
  return buf;
}

std::optional<std::size_t> Recording::channel_index(std::string_view label) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].label == label) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Recording::channel_labels() const {
  std::vector<std::string> labels;
  labels.reserve(channels.size());
  for (const auto& ch : channels) labels.push_back(ch.label);
  return labels;
}

bool Recording::operator==(const Recording& other) const {
  if (!(patient == other.patient && recording_info == other.recording_info &&
        start == other.start && record_duration_s == other.record_duration_s &&
        num_records == other.num_records && channels == other.channels &&
        signals.size() == other.signals.size())) {
    return false;
  }
  for (std::size_t i = 0; i < signals.size(); ++i) {
    if (signals[i].size() != other.signals[i].size() || signals[i] != other.signals[i]) return false;
  }
  return true;
}

std::string normalize_label(std::string_view raw) {
  auto label = upper(trim(raw));
  if (label.rfind("EEG ", 0) == 0) label = trim(std::string_view(label).substr(4));
  for (std::string_view suffix : {"-REF", "-LE"}) {
    if (label.size() > suffix.size() &&
        label.compare(label.size() - suffix.size(), suffix.size(), suffix) == 0) {
      label.erase(label.size() - suffix.size());
      break;
    }
  }
  return label;
}

void validate(const Recording& rec) {
  if (rec.channels.empty()) fail(ErrorCode::MalformedHeader, "recording has no signal channels");
  if (!(rec.record_duration_s > 0.0) || rec.num_records <= 0) {
    fail(ErrorCode::MalformedHeader, "recording duration must be positive");
  }
  if (rec.signals.size() != rec.channels.size()) {
    fail(ErrorCode::MalformedHeader, "channel/signal count mismatch");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rec.channels.size(); ++i) {
    const auto& ch = rec.channels[i];
    if (!(ch.sample_rate_hz > 0.0)) {
      fail(ErrorCode::MalformedHeader, "channel '" + ch.label + "' has a non-positive sample rate");
    }
    if (!seen.insert(ch.label).second) {
      fail(ErrorCode::MalformedHeader, "duplicate channel label '" + ch.label + "'");
    }
    auto expected = static_cast<Eigen::Index>(std::llround(rec.duration_s() * ch.sample_rate_hz));
    if (rec.signals[i].size() != expected) {
      fail(ErrorCode::MalformedHeader, "channel '" + ch.label + "' sample count does not match duration");
    }
  }
}

Recording parse_edf(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
  if (bytes.size() < kFixedHeaderBytes) {
    fail(ErrorCode::MalformedHeader, "file shorter than the 256-byte fixed header");
  }
  if (bytes[0] == 0xFF) {
    fail(ErrorCode::UnsupportedVariant, "24-bit BDF files are not supported");
  }

  HeaderReader hdr(bytes);
  auto version = trim(hdr.take(8));
  if (version != "0") fail(ErrorCode::MalformedHeader, "bad version field '" + version + "'");

  Recording rec;
  auto patient_field = hdr.take(80);
  rec.recording_info = trim(hdr.take(80));
  auto date_field = hdr.take(8);
  auto time_field = hdr.take(8);
  rec.start = parse_start(date_field, time_field);
  rec.patient = parse_patient(patient_field, rec.start, warnings);

  auto header_bytes = parse_int(hdr.take(8), "header bytes");
  auto reserved = trim(hdr.take(44));
  auto num_records = parse_int(hdr.take(8), "number of data records");
  rec.record_duration_s = parse_double(hdr.take(8), "data record duration");
  auto ns = parse_int(hdr.take(4), "number of signals");

  if (ns <= 0 || ns > 4096) fail(ErrorCode::MalformedHeader, "bad number of signals");
  if (header_bytes != static_cast<long>(kFixedHeaderBytes + kSignalHeaderBytes * ns)) {
    fail(ErrorCode::MalformedHeader, "header byte count " + std::to_string(header_bytes) +
                                         " does not match " + std::to_string(ns) + " signals");
  }
  if (!(rec.record_duration_s > 0.0)) fail(ErrorCode::MalformedHeader, "data record duration must be positive");
  if (reserved.rfind("EDF+D", 0) == 0 && warnings) {
    warnings->push_back("EDF+D (discontinuous) file read as contiguous");
  }

  const auto n = static_cast<std::size_t>(ns);
  std::vector<std::string> raw_labels(n), transducers(n), dims(n), prefilters(n);
  std::vector<double> pmin(n), pmax(n);
  std::vector<long> dmin(n), dmax(n), spr(n);
  for (auto& v : raw_labels) v = trim(hdr.take(16));
  for (auto& v : transducers) v = trim(hdr.take(80));
  for (auto& v : dims) v = trim(hdr.take(8));
  for (auto& v : pmin) v = parse_double(hdr.take(8), "physical minimum");
  for (auto& v : pmax) v = parse_double(hdr.take(8), "physical maximum");
  for (auto& v : dmin) v = parse_int(hdr.take(8), "digital minimum");
  for (auto& v : dmax) v = parse_int(hdr.take(8), "digital maximum");
  for (auto& v : prefilters) v = trim(hdr.take(80));
  for (auto& v : spr) v = parse_int(hdr.take(8), "samples per record");
  for (std::size_t i = 0; i < n; ++i) hdr.take(32);

  std::size_t record_samples = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (spr[i] <= 0) fail(ErrorCode::MalformedHeader, "signal " + std::to_string(i) + " has no samples per record");
    record_samples += static_cast<std::size_t>(spr[i]);
  }
  const std::size_t record_bytes = record_samples * 2;
  const std::size_t payload = bytes.size() - static_cast<std::size_t>(header_bytes);

  if (num_records == -1) {
    num_records = static_cast<long>(payload / record_bytes);
    if (warnings) warnings->push_back("record count unspecified; inferred from file size");
  }
  if (num_records <= 0) fail(ErrorCode::MalformedHeader, "number of data records must be positive");
  if (payload < record_bytes * static_cast<std::size_t>(num_records)) {
    fail(ErrorCode::TruncatedData, "header declares " + std::to_string(num_records) +
                                       " records but payload holds " +
                                       std::to_string(payload / record_bytes));
  }
  if (payload > record_bytes * static_cast<std::size_t>(num_records) && warnings) {
    warnings->push_back("trailing bytes after the last data record ignored");
  }
  rec.num_records = static_cast<int>(num_records);

  std::vector<bool> keep(n, true);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (raw_labels[i] == kAnnotationsLabel) {
      keep[i] = false;
      if (warnings) warnings->push_back("EDF+ annotation channel skipped");
      continue;
    }
    if (dmax[i] <= dmin[i] || dmin[i] < -32768 || dmax[i] > 32767) {
      fail(ErrorCode::MalformedHeader, "signal '" + raw_labels[i] + "' has an invalid digital range");
    }
    if (pmax[i] == pmin[i]) {
      fail(ErrorCode::MalformedHeader, "signal '" + raw_labels[i] + "' has an empty physical range");
    }
    ChannelInfo ch;
    ch.label = normalize_label(raw_labels[i]);
    if (ch.label.empty()) fail(ErrorCode::MalformedHeader, "signal " + std::to_string(i) + " has an empty label");
    if (!seen.insert(ch.label).second) {
      fail(ErrorCode::MalformedHeader, "duplicate channel label '" + ch.label + "' after normalization");
    }
    ch.transducer = transducers[i];
    ch.prefilter = prefilters[i];
    ch.samples_per_record = static_cast<int>(spr[i]);
    ch.sample_rate_hz = static_cast<double>(spr[i]) / rec.record_duration_s;
    ch.digital_min = static_cast<int>(dmin[i]);
    ch.digital_max = static_cast<int>(dmax[i]);
    if (auto scale = microvolt_scale(dims[i])) {
      ch.physical_dim = "uV";
      ch.physical_min = pmin[i] * *scale;
      ch.physical_max = pmax[i] * *scale;
    } else {
      ch.physical_dim = dims[i];
      ch.physical_min = pmin[i];
      ch.physical_max = pmax[i];
      if (warnings) warnings->push_back("channel '" + ch.label + "' has non-voltage unit '" + dims[i] + "'");
    }
    rec.channels.push_back(std::move(ch));
    rec.signals.emplace_back(static_cast<Eigen::Index>(spr[i]) * num_records);
  }
  if (rec.channels.empty()) fail(ErrorCode::MalformedHeader, "file contains no signal channels");

  const std::uint8_t* data = bytes.data() + header_bytes;
  for (long r = 0; r < num_records; ++r) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto count = static_cast<std::size_t>(spr[i]);
      if (!keep[i]) {
        data += count * 2;
        continue;
      }
      const auto& ch = rec.channels[out];
      auto& sig = rec.signals[out];
      const double gain = ch.gain();
      const Eigen::Index base = static_cast<Eigen::Index>(r) * static_cast<Eigen::Index>(count);
      for (std::size_t s = 0; s < count; ++s) {
        const auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>(data[0]) |
                                                   static_cast<std::uint16_t>(data[1]) << 8);
        data += 2;
        // Physical bounds are already in microvolts, so the scale is folded in.
        sig[base + static_cast<Eigen::Index>(s)] =
            ch.physical_min + static_cast<double>(raw - ch.digital_min) * gain;
      }
      ++out;
    }
  }
  return rec;
}

Recording parse_edf(std::string_view bytes, std::vector<std::string>* warnings) {
  return parse_edf(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                                 bytes.size()),
                   warnings);
}

Recording read_edf_file(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_edf(std::span<const std::uint8_t>(bytes), warnings);
}

std::string format_header_number(double value) {
  if (!std::isfinite(value)) fail(ErrorCode::InvalidArgument, "header number must be finite");
  std::string best;
  for (int decimals = 10; decimals >= 0; --decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string text(buf);
    if (text.find('.') != std::string::npos) {
      while (text.back() == '0') text.pop_back();
      if (text.back() == '.') text.pop_back();
    }
    if (text == "-0") text = "0";
    if (text.size() > 8) continue;
    if (best.empty()) best = text;
    double back = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), back);
    if (back == value) return text;
  }
  if (best.empty()) fail(ErrorCode::InvalidArgument, "number does not fit an 8-character EDF field");
  return best;
}

std::vector<std::uint8_t> serialize_edf(const Recording& rec) {
  validate(rec);
  const std::size_t n = rec.channels.size();
  std::string header;
  header.reserve(kFixedHeaderBytes + kSignalHeaderBytes * n);

  auto no_spaces = [](std::string s) {
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
  };
  std::string patient = rec.patient.id.empty() ? "X" : no_spaces(rec.patient.id);
  patient += rec.patient.sex == Sex::Male ? " M" : rec.patient.sex == Sex::Female ? " F" : " X";
  patient += " X ";
  patient += rec.patient.name.empty() ? "X" : no_spaces(rec.patient.name);
  if (rec.patient.age_years) patient += " Age:" + std::to_string(*rec.patient.age_years);

  put_field(header, "0", 8, "version");
  put_field(header, patient, 80, "patient");
  put_field(header, rec.recording_info, 80, "recording");
  const auto& st = rec.start;
  if (st.year < 1985 || st.year > 2084) fail(ErrorCode::InvalidArgument, "start year outside 1985-2084");
  put_field(header, two_digits(st.day) + "." + two_digits(st.month) + "." + two_digits(st.year % 100), 8, "start date");
  put_field(header, two_digits(st.hour) + "." + two_digits(st.minute) + "." + two_digits(st.second), 8, "start time");
  put_field(header, std::to_string(kFixedHeaderBytes + kSignalHeaderBytes * n), 8, "header bytes");
  put_field(header, "", 44, "reserved");
  put_field(header, std::to_string(rec.num_records), 8, "records");
  put_field(header, format_header_number(rec.record_duration_s), 8, "record duration");
  put_field(header, std::to_string(n), 4, "signals");
  for (const auto& ch : rec.channels) put_field(header, ch.label, 16, "label");
  for (const auto& ch : rec.channels) put_field(header, ch.transducer, 80, "transducer");
  for (const auto& ch : rec.channels) put_field(header, ch.physical_dim, 8, "physical dimension");
  for (const auto& ch : rec.channels) put_field(header, format_header_number(ch.physical_min), 8, "physical min");
  for (const auto& ch : rec.channels) put_field(header, format_header_number(ch.physical_max), 8, "physical max");
  for (const auto& ch : rec.channels) put_field(header, std::to_string(ch.digital_min), 8, "digital min");
  for (const auto& ch : rec.channels) put_field(header, std::to_string(ch.digital_max), 8, "digital max");
  for (const auto& ch : rec.channels) put_field(header, ch.prefilter, 80, "prefilter");
  for (const auto& ch : rec.channels) {
    int spr = ch.samples_per_record > 0
                  ? ch.samples_per_record
                  : static_cast<int>(std::llround(ch.sample_rate_hz * rec.record_duration_s));
    put_field(header, std::to_string(spr), 8, "samples per record");
  }
  for (std::size_t i = 0; i < n; ++i) put_field(header, "", 32, "reserved");

  std::vector<std::uint8_t> out(header.begin(), header.end());
  std::vector<int> spr(n);
  std::size_t record_samples = 0;
  for (std::size_t i = 0; i < n; ++i) {
    spr[i] = static_cast<int>(rec.signals[i].size() / rec.num_records);
    record_samples += static_cast<std::size_t>(spr[i]);
  }
  out.reserve(out.size() + record_samples * 2 * static_cast<std::size_t>(rec.num_records));
  for (int r = 0; r < rec.num_records; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ch = rec.channels[i];
      const double gain = ch.gain();
      for (int s = 0; s < spr[i]; ++s) {
        double phys = rec.signals[i][static_cast<Eigen::Index>(r) * spr[i] + s];
        double dig = std::round((phys - ch.physical_min) / gain + ch.digital_min);
        dig = std::clamp(dig, static_cast<double>(ch.digital_min), static_cast<double>(ch.digital_max));
        auto raw = static_cast<std::uint16_t>(static_cast<std::int16_t>(dig));
        out.push_back(static_cast<std::uint8_t>(raw & 0xFF));
        out.push_back(static_cast<std::uint8_t>(raw >> 8));
      }
    }
  }
  return out;
}

void write_edf_file(const Recording& rec, const std::filesystem::path& path) {
  auto bytes = serialize_edf(rec);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace eegagent
