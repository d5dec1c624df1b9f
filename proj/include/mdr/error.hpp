// Error type shared by every engine module.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdr {

enum class ErrorCode {
  MalformedLine,
  UnknownOperation,
  UnsupportedKind,
  IoFailure,
  WatchUnavailable,
  EmptyCorpus,
  DegenerateLabels,
  BadDim,
  NoValidSplit,
  SingleClass,
  WidthMismatch,
  CorruptModel,
  BadSpec,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mdr
