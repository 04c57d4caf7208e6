// SPDX-License-Identifier: Apache-2.0
#include "eegagent/error.hpp"

namespace eegagent {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::UnsupportedVariant: return "UnsupportedVariant";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::UnknownElectrode: return "UnknownElectrode";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::SegmentTooShort: return "SegmentTooShort";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::GranularityMismatch: return "GranularityMismatch";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::EmptyBase: return "EmptyBase";
    case ErrorCode::AgeUnknown: return "AgeUnknown";
    case ErrorCode::PolicyProtocolError: return "PolicyProtocolError";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::ArgumentValidation: return "ArgumentValidation";
    case ErrorCode::NoResults: return "NoResults";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::SessionBusy: return "SessionBusy";
    case ErrorCode::Unauthorized: return "Unauthorized";
  }
  return "Unknown";
}

}  // namespace eegagent
