#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pim {

// Mirrors pim_status in pim.h; keep the numeric values in sync.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kMissingEdge = 4,
  kRepeatedNode = 5,
  kTooShort = 6,
  kNoPath = 7,
  kEmptyPartition = 8,
  kShapeMismatch = 9,
  kNumeric = 10,
  kSingular = 11,
  kInternal = 12,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::int64_t> detail = std::nullopt)
      : std::runtime_error(what), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }

  // Operation-specific payload: the hop index for kMissingEdge, the node for
  // kRepeatedNode, the 1-based line number for kParse.
  std::optional<std::int64_t> detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> detail_;
};

}  // namespace pim
