#pragma once

// Application-level request and response records carried inside client
// frames. Every request starts with a common prefix (total length, request
// id, opcode) so the traffic director and the offload engine can walk a
// message without knowing the application; the opcode-specific tail is
// interpreted by the offload plugin.

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <vector>

#include "dds/status.hpp"
#include "dds/wire.hpp"

namespace dds {

enum class AppOp : uint8_t {
  kKvGet = 1,
  kKvPut = 2,
  kPageGet = 3,
  kPageWrite = 4,
};

// Request layout, little-endian:
//   0  u32 total_len      (includes this header)
//   4  u64 app_req_id
//   12 u8  op
//   13 ... op-specific fields
constexpr size_t kAppRequestHeaderSize = 13;

// Response layout:
//   0  u32 total_len
//   4  u64 app_req_id
//   12 u8  status
//   13 u32 payload_len
//   17 ... payload
constexpr size_t kAppResponseHeaderSize = 17;

struct AppRequestView {
  std::span<const uint8_t> bytes;  // whole record including header

  uint32_t total_len() const { return detail::get_u32(bytes.data()); }
  uint64_t app_req_id() const { return detail::get_u64(bytes.data() + 4); }
  AppOp op() const { return AppOp(bytes[12]); }
  std::span<const uint8_t> body() const {
    return bytes.subspan(kAppRequestHeaderSize);
  }
};

inline void append_app_request(std::vector<uint8_t>* out, uint64_t req_id,
                               AppOp op, std::span<const uint8_t> body) {
  size_t total = kAppRequestHeaderSize + body.size();
  size_t at = out->size();
  out->resize(at + total);
  uint8_t* p = out->data() + at;
  detail::put_u32(p, uint32_t(total));
  detail::put_u64(p + 4, req_id);
  p[12] = uint8_t(op);
  if (!body.empty()) std::memcpy(p + kAppRequestHeaderSize, body.data(), body.size());
}

// Splits a message payload into its request records. Returns false on any
// malformed framing (callers treat that as "not ours", never an error).
inline bool split_app_requests(std::span<const uint8_t> payload,
                               uint32_t expected_count,
                               std::vector<AppRequestView>* out) {
  out->clear();
  size_t at = 0;
  while (at < payload.size()) {
    if (payload.size() - at < kAppRequestHeaderSize) return false;
    uint32_t total = detail::get_u32(payload.data() + at);
    if (total < kAppRequestHeaderSize || total > payload.size() - at) return false;
    out->push_back({payload.subspan(at, total)});
    at += total;
  }
  return at == payload.size() && out->size() == expected_count;
}

inline void append_app_response(std::vector<uint8_t>* out, uint64_t req_id,
                                Status status,
                                std::span<const uint8_t> payload) {
  size_t total = kAppResponseHeaderSize + payload.size();
  size_t at = out->size();
  out->resize(at + total);
  uint8_t* p = out->data() + at;
  detail::put_u32(p, uint32_t(total));
  detail::put_u64(p + 4, req_id);
  p[12] = uint8_t(status);
  detail::put_u32(p + 13, uint32_t(payload.size()));
  if (!payload.empty()) {
    std::memcpy(p + kAppResponseHeaderSize, payload.data(), payload.size());
  }
}

struct AppResponseView {
  std::span<const uint8_t> bytes;
  uint64_t app_req_id() const { return detail::get_u64(bytes.data() + 4); }
  Status status() const { return Status(bytes[12]); }
  std::span<const uint8_t> payload() const {
    return bytes.subspan(kAppResponseHeaderSize,
                         detail::get_u32(bytes.data() + 13));
  }
};

inline bool split_app_responses(std::span<const uint8_t> payload,
                                std::vector<AppResponseView>* out) {
  out->clear();
  size_t at = 0;
  while (at < payload.size()) {
    if (payload.size() - at < kAppResponseHeaderSize) return false;
    uint32_t total = detail::get_u32(payload.data() + at);
    if (total < kAppResponseHeaderSize || total > payload.size() - at) return false;
    uint32_t plen = detail::get_u32(payload.data() + at + 13);
    if (plen != total - kAppResponseHeaderSize) return false;
    out->push_back({payload.subspan(at, total)});
    at += total;
  }
  return at == payload.size();
}

// Client frame: the unit a client application writes to its connection.
// Layout, little-endian:
//   0  u32 frame_len   (includes this 8-byte header)
//   4  u32 request_count
//   8  ... request records
constexpr size_t kFrameHeaderSize = 8;

inline std::vector<uint8_t> make_frame(uint32_t count,
                                       std::span<const uint8_t> payload) {
  std::vector<uint8_t> out(kFrameHeaderSize + payload.size());
  detail::put_u32(out.data(), uint32_t(out.size()));
  detail::put_u32(out.data() + 4, count);
  if (!payload.empty()) {
    std::memcpy(out.data() + kFrameHeaderSize, payload.data(), payload.size());
  }
  return out;
}

struct FrameView {
  std::span<const uint8_t> frame;  // whole frame including header
  uint32_t count = 0;
  std::span<const uint8_t> payload() const {
    return frame.subspan(kFrameHeaderSize);
  }
};

// Returns the first complete frame at the front of `buffer`, or nullopt if
// more bytes are needed. A frame whose length field is nonsensical yields a
// frame with count == UINT32_MAX spanning the whole buffer so callers can
// fail open.
inline std::optional<FrameView> try_parse_frame(
    std::span<const uint8_t> buffer) {
  if (buffer.size() < kFrameHeaderSize) return std::nullopt;
  uint32_t len = detail::get_u32(buffer.data());
  if (len < kFrameHeaderSize) {
    return FrameView{buffer, UINT32_MAX};
  }
  if (buffer.size() < len) return std::nullopt;
  return FrameView{buffer.first(len), detail::get_u32(buffer.data() + 4)};
}

// Body encoders for the two built-in applications.

inline std::vector<uint8_t> kv_get_body(uint64_t key) {
  std::vector<uint8_t> b(8);
  detail::put_u64(b.data(), key);
  return b;
}

inline std::vector<uint8_t> kv_put_body(uint64_t key,
                                        std::span<const uint8_t> value) {
  std::vector<uint8_t> b(12 + value.size());
  detail::put_u64(b.data(), key);
  detail::put_u32(b.data() + 8, uint32_t(value.size()));
  if (!value.empty()) std::memcpy(b.data() + 12, value.data(), value.size());
  return b;
}

inline std::vector<uint8_t> page_get_body(uint64_t page_id, uint64_t lsn) {
  std::vector<uint8_t> b(16);
  detail::put_u64(b.data(), page_id);
  detail::put_u64(b.data() + 8, lsn);
  return b;
}

inline std::vector<uint8_t> page_write_body(uint64_t page_id, uint64_t lsn,
                                            std::span<const uint8_t> data) {
  std::vector<uint8_t> b(20 + data.size());
  detail::put_u64(b.data(), page_id);
  detail::put_u64(b.data() + 8, lsn);
  detail::put_u32(b.data() + 16, uint32_t(data.size()));
  if (!data.empty()) std::memcpy(b.data() + 20, data.data(), data.size());
  return b;
}

}  // namespace dds
