// SPDX-License-Identifier: Apache-2.0
#include "eegagent/perception.hpp"

#include <sstream>

#include "eegagent/error.hpp"
#include "eegagent/text.hpp"

namespace eegagent {

BaseInfoSummary base_info(const Recording& rec, const KnowledgeBase& kb) {
  BaseInfoSummary s;
  s.patient = rec.patient;
  s.start = rec.start.iso8601();
  s.duration_s = rec.duration_s();
  for (const auto& ch : rec.channels) {
    ChannelSummary cs{ch.label, ch.sample_rate_hz, std::nullopt};
    try {
      cs.location = region_of(ch.label);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownElectrode) throw;
    }
    s.channels.push_back(std::move(cs));
  }
  if (rec.patient.age_years) {
    s.age_band = std::string(age_band(*rec.patient.age_years));
    s.age_note = kb.age_band_note(rec.patient.age_years);
  }
  return s;
}

void to_json(nlohmann::json& j, const BaseInfoSummary& s) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& c : s.channels) {
    channels.push_back({{"label", c.label},
                        {"sample_rate_hz", c.sample_rate_hz},
                        {"region", c.location ? c.location->describe() : "unknown"}});
  }
  j = {{"patient",
        {{"id", s.patient.id.empty() ? "unknown" : s.patient.id},
         {"name", s.patient.name.empty() ? "unknown" : s.patient.name},
         {"sex", std::string(to_string(s.patient.sex))},
         {"age_years", s.patient.age_years ? nlohmann::json(*s.patient.age_years) : nlohmann::json("unknown")}}},
       {"start", s.start},
       {"duration_s", s.duration_s},
       {"duration", format_number(s.duration_s) + " s"},
       {"channels", channels},
       {"age_band", s.age_band ? nlohmann::json(*s.age_band) : nlohmann::json("unknown")},
       {"age_note", s.age_note ? nlohmann::json(*s.age_note) : nlohmann::json(nullptr)}};
}

std::string to_text(const BaseInfoSummary& s) {
  std::ostringstream out;
  out << "Patient\n";
  out << "  name: " << (s.patient.name.empty() ? "unknown" : s.patient.name) << "\n";
  out << "  sex: " << to_string(s.patient.sex) << "\n";
  out << "  age: "
      << (s.patient.age_years ? std::to_string(*s.patient.age_years) + " years (" + *s.age_band + ")"
                              : std::string("unknown"))
      << "\n";
  out << "Recording\n";
  out << "  start: " << s.start << "\n";
  out << "  duration: " << format_number(s.duration_s) << " s\n";
  out << "  channels: " << s.channels.size() << "\n";
  out << "Montage\n";
  for (const auto& c : s.channels) {
    out << "  " << c.label << "  " << format_number(c.sample_rate_hz) << " Hz  "
        << (c.location ? c.location->describe() : "unknown region") << "\n";
  }
  if (s.age_note) {
    out << "Age-related expectations (" << *s.age_band << ")\n";
    out << "  " << s.age_note->body << "\n";
  }
  return out.str();
}

}  // namespace eegagent
