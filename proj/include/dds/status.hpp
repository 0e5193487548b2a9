#pragma once

#include <cstdint>

namespace dds {

// Status byte carried in response headers and returned by most operations.
// SUCCESS and PENDING occupy the two endpoints; everything in between is an
// error or a flow-control signal.
enum class Status : uint8_t {
  kSuccess = 0,
  kTruncated = 1,
  kLengthMismatch = 2,
  kIoError = 3,
  kNoSpace = 4,
  kNotFound = 5,
  kRingFull = 6,
  kTableFull = 7,
  kNameExists = 8,
  kOutOfRange = 9,
  kBadOpKind = 10,
  kRecordTooLarge = 11,
  kCorruptMetadata = 12,
  kTimeout = 13,
  kMiss = 14,
  kBackpressure = 15,
  kConfigInvalid = 16,
  kPending = 255,
};

inline const char* to_string(Status s) {
  switch (s) {
    case Status::kSuccess: return "SUCCESS";
    case Status::kTruncated: return "TRUNCATED";
    case Status::kLengthMismatch: return "LENGTH_MISMATCH";
    case Status::kIoError: return "IO_ERROR";
    case Status::kNoSpace: return "NO_SPACE";
    case Status::kNotFound: return "NOT_FOUND";
    case Status::kRingFull: return "RING_FULL";
    case Status::kTableFull: return "TABLE_FULL";
    case Status::kNameExists: return "NAME_EXISTS";
    case Status::kOutOfRange: return "OUT_OF_RANGE";
    case Status::kBadOpKind: return "BAD_OP_KIND";
    case Status::kRecordTooLarge: return "RECORD_TOO_LARGE";
    case Status::kCorruptMetadata: return "CORRUPT_METADATA";
    case Status::kTimeout: return "TIMEOUT";
    case Status::kMiss: return "MISS";
    case Status::kBackpressure: return "BACKPRESSURE";
    case Status::kConfigInvalid: return "CONFIG_INVALID";
    case Status::kPending: return "PENDING";
  }
  return "UNKNOWN";
}

inline bool is_error(Status s) {
  return s != Status::kSuccess && s != Status::kPending;
}

}  // namespace dds
