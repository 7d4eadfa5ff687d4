#include "thermoact/error.hpp"

#include <utility>

namespace thermoact {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kUnreachable: return "unreachable";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kPlanning: return "planning";
    case ErrorCode::kPlannerOutput: return "planner-output";
    case ErrorCode::kNetwork: return "network";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kResolution: return "resolution";
    case ErrorCode::kPolicy: return "policy";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kState: return "state";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code), message_(message) {}

Error::Error(ErrorCode code, const std::string& message, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + " error: " + message + detail),
      code_(code),
      message_(message) {}

ParseError::ParseError(std::size_t offset, const std::string& message)
    : Error(ErrorCode::kParse, message, " (at byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

PlannerOutputError::PlannerOutputError(const std::string& message, std::string raw_text)
    : Error(ErrorCode::kPlannerOutput, message), raw_text_(std::move(raw_text)) {}

}  // namespace thermoact
