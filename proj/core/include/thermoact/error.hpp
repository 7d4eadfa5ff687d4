#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace thermoact {

enum class ErrorCode {
  kInvalidInput,
  kFormat,
  kDomain,
  kUnreachable,
  kParse,
  kPlanning,
  kPlannerOutput,
  kNetwork,
  kTimeout,
  kConfig,
  kResolution,
  kPolicy,
  kDimension,
  kIo,
  kRange,
  kState,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the category prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 protected:
  Error(ErrorCode code, const std::string& message, const std::string& detail);

 private:
  ErrorCode code_;
  std::string message_;
};

/// Raised by the plan grammar; `offset` is a byte offset into the parsed text.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Planner backend produced text that could not be parsed, even after retry.
class PlannerOutputError : public Error {
 public:
  PlannerOutputError(const std::string& message, std::string raw_text);

  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

}  // namespace thermoact
