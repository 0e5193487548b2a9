#pragma once

// On-wire encodings: ring request/response records, client message framing,
// and flow signatures. All integers are little-endian; record lengths are
// multiples of the 64-byte record alignment so headers written by different
// producers never share a cache line. Field offsets are documented in WIRE.md.

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dds/status.hpp"

namespace dds {

constexpr size_t kRecordAlign = 64;
constexpr size_t kRequestHeaderSize = 64;
constexpr size_t kResponseHeaderSize = 64;

constexpr uint64_t align_up(uint64_t n, uint64_t a = kRecordAlign) {
  return (n + a - 1) & ~(a - 1);
}

enum class OpKind : uint8_t {
  kRead = 1,
  kWrite = 2,
  kReadScatter = 3,
  kWriteGather = 4,
  kPad = 5,  // wrap filler, consumers skip
  // Control plane (carried over the synchronous control channel, never on
  // data rings; values reserved here so the taxonomy is in one place).
  kCreateDirectory = 16,
  kCreateFile = 17,
};

inline bool is_write_kind(OpKind k) {
  return k == OpKind::kWrite || k == OpKind::kWriteGather;
}
inline bool is_read_kind(OpKind k) {
  return k == OpKind::kRead || k == OpKind::kReadScatter;
}
inline bool is_data_plane_kind(OpKind k) {
  return is_write_kind(k) || is_read_kind(k) || k == OpKind::kPad;
}

namespace detail {
inline void put_u16(uint8_t* p, uint16_t v) {
  p[0] = uint8_t(v); p[1] = uint8_t(v >> 8);
}
inline void put_u32(uint8_t* p, uint32_t v) {
  p[0] = uint8_t(v); p[1] = uint8_t(v >> 8);
  p[2] = uint8_t(v >> 16); p[3] = uint8_t(v >> 24);
}
inline void put_u64(uint8_t* p, uint64_t v) {
  put_u32(p, uint32_t(v)); put_u32(p + 4, uint32_t(v >> 32));
}
inline uint16_t get_u16(const uint8_t* p) {
  return uint16_t(p[0]) | uint16_t(p[1]) << 8;
}
inline uint32_t get_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
inline uint64_t get_u64(const uint8_t* p) {
  return uint64_t(get_u32(p)) | uint64_t(get_u32(p + 4)) << 32;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Request records
// ---------------------------------------------------------------------------

struct FileRequestHeader {
  uint64_t request_id = 0;
  uint64_t offset = 0;
  uint32_t file_id = 0;
  uint32_t length = 0;           // payload bytes for writes, read size for reads
  uint32_t total_record_size = 0;  // header + inline payload, aligned
  OpKind op_kind = OpKind::kRead;

  bool operator==(const FileRequestHeader&) const = default;
};

inline uint32_t request_record_size(OpKind kind, uint32_t length) {
  if (is_write_kind(kind)) {
    return uint32_t(align_up(kRequestHeaderSize + length));
  }
  return kRequestHeaderSize;  // reads and pads carry no payload
}

// Writes the header fields into a 64-byte region. The caller supplies the
// destination so producers can encode straight into a ring reservation.
inline void write_request_header(const FileRequestHeader& h, uint8_t* dst) {
  std::memset(dst, 0, kRequestHeaderSize);
  detail::put_u64(dst + 0, h.request_id);
  detail::put_u64(dst + 8, h.offset);
  detail::put_u32(dst + 16, h.file_id);
  detail::put_u32(dst + 20, h.length);
  detail::put_u32(dst + 24, h.total_record_size);
  dst[28] = uint8_t(h.op_kind);
}

inline Status read_request_header(std::span<const uint8_t> src,
                                  FileRequestHeader* out) {
  if (src.size() < kRequestHeaderSize) return Status::kTruncated;
  out->request_id = detail::get_u64(src.data() + 0);
  out->offset = detail::get_u64(src.data() + 8);
  out->file_id = detail::get_u32(src.data() + 16);
  out->length = detail::get_u32(src.data() + 20);
  out->total_record_size = detail::get_u32(src.data() + 24);
  uint8_t op = src[28];
  switch (OpKind(op)) {
    case OpKind::kRead:
    case OpKind::kWrite:
    case OpKind::kReadScatter:
    case OpKind::kWriteGather:
    case OpKind::kPad:
      out->op_kind = OpKind(op);
      return Status::kSuccess;
    default:
      return Status::kBadOpKind;
  }
}

// encode_request: contiguous record, header first, write payload inlined,
// zero-padded to the record alignment.
inline Status encode_request(const FileRequestHeader& header,
                             std::span<const uint8_t> payload,
                             std::vector<uint8_t>* out) {
  if (is_write_kind(header.op_kind)) {
    if (payload.size() != header.length) return Status::kLengthMismatch;
  } else if (!payload.empty()) {
    return Status::kLengthMismatch;
  }
  FileRequestHeader h = header;
  h.total_record_size = request_record_size(h.op_kind, h.length);
  out->assign(h.total_record_size, 0);
  write_request_header(h, out->data());
  if (!payload.empty()) {
    std::memcpy(out->data() + kRequestHeaderSize, payload.data(),
                payload.size());
  }
  return Status::kSuccess;
}

struct DecodedRequest {
  FileRequestHeader header;
  std::span<const uint8_t> payload;  // view into the input record
  size_t consumed = 0;
};

// decode_request: inverse of encode_request; reports bytes consumed so a
// batch of concatenated records can be scanned sequentially.
inline Status decode_request(std::span<const uint8_t> record,
                             DecodedRequest* out) {
  Status s = read_request_header(record, &out->header);
  if (s != Status::kSuccess) return s;
  const auto& h = out->header;
  if (h.total_record_size < kRequestHeaderSize ||
      h.total_record_size % kRecordAlign != 0) {
    return Status::kTruncated;
  }
  if (record.size() < h.total_record_size) return Status::kTruncated;
  if (is_write_kind(h.op_kind)) {
    if (kRequestHeaderSize + h.length > h.total_record_size) {
      return Status::kLengthMismatch;
    }
    out->payload = record.subspan(kRequestHeaderSize, h.length);
  } else {
    out->payload = {};
  }
  out->consumed = h.total_record_size;
  return Status::kSuccess;
}

// ---------------------------------------------------------------------------
// Response records
// ---------------------------------------------------------------------------

constexpr uint8_t kResponseFlagPad = 0x1;

struct FileResponseHeader {
  uint64_t request_id = 0;
  uint32_t length = 0;             // trailing read data bytes
  uint32_t total_record_size = 0;
  Status status = Status::kPending;
  uint8_t flags = 0;

  bool operator==(const FileResponseHeader&) const = default;
};

inline uint32_t response_record_size(uint32_t data_length) {
  return uint32_t(align_up(kResponseHeaderSize + data_length));
}

// Byte offset of the status field within an encoded response header. The DPU
// completion dispatcher flips this byte in place, so the offset is part of
// the wire contract.
constexpr size_t kResponseStatusOffset = 16;
constexpr size_t kResponseFlagsOffset = 17;

inline void write_response_header(const FileResponseHeader& h, uint8_t* dst) {
  std::memset(dst, 0, kResponseHeaderSize);
  detail::put_u64(dst + 0, h.request_id);
  detail::put_u32(dst + 8, h.length);
  detail::put_u32(dst + 12, h.total_record_size);
  dst[kResponseStatusOffset] = uint8_t(h.status);
  dst[kResponseFlagsOffset] = h.flags;
}

inline Status read_response_header(std::span<const uint8_t> src,
                                   FileResponseHeader* out) {
  if (src.size() < kResponseHeaderSize) return Status::kTruncated;
  out->request_id = detail::get_u64(src.data() + 0);
  out->length = detail::get_u32(src.data() + 8);
  out->total_record_size = detail::get_u32(src.data() + 12);
  out->status = Status(src[kResponseStatusOffset]);
  out->flags = src[kResponseFlagsOffset];
  return Status::kSuccess;
}

inline Status encode_response(const FileResponseHeader& header,
                              std::span<const uint8_t> data,
                              std::vector<uint8_t>* out) {
  if (data.size() != header.length) return Status::kLengthMismatch;
  FileResponseHeader h = header;
  h.total_record_size = response_record_size(h.length);
  out->assign(h.total_record_size, 0);
  write_response_header(h, out->data());
  if (!data.empty()) {
    std::memcpy(out->data() + kResponseHeaderSize, data.data(), data.size());
  }
  return Status::kSuccess;
}

struct DecodedResponse {
  FileResponseHeader header;
  std::span<const uint8_t> data;
  size_t consumed = 0;
};

inline Status decode_response(std::span<const uint8_t> record,
                              DecodedResponse* out) {
  Status s = read_response_header(record, &out->header);
  if (s != Status::kSuccess) return s;
  const auto& h = out->header;
  if (h.total_record_size < kResponseHeaderSize ||
      h.total_record_size % kRecordAlign != 0) {
    return Status::kTruncated;
  }
  if (record.size() < h.total_record_size) return Status::kTruncated;
  if (kResponseHeaderSize + h.length > h.total_record_size) {
    return Status::kLengthMismatch;
  }
  out->data = record.subspan(kResponseHeaderSize, h.length);
  out->consumed = h.total_record_size;
  return Status::kSuccess;
}

// ---------------------------------------------------------------------------
// Flow signatures
// ---------------------------------------------------------------------------

enum class Protocol : uint8_t { kTcp = 6, kUdp = 17 };

struct FiveTuple {
  uint32_t client_ip = 0;
  uint16_t client_port = 0;
  uint32_t server_ip = 0;
  uint16_t server_port = 0;
  Protocol protocol = Protocol::kTcp;

  bool operator==(const FiveTuple&) const = default;
};

// A 5-tuple filter where client fields may be wildcards. The server side and
// protocol identify a local service and must be concrete.
struct FlowSignature {
  std::optional<uint32_t> client_ip;
  std::optional<uint16_t> client_port;
  uint32_t server_ip = 0;
  uint16_t server_port = 0;
  Protocol protocol = Protocol::kTcp;
};

inline bool match_signature(const FlowSignature& sig, const FiveTuple& t) {
  if (sig.client_ip && *sig.client_ip != t.client_ip) return false;
  if (sig.client_port && *sig.client_port != t.client_port) return false;
  return sig.server_ip == t.server_ip && sig.server_port == t.server_port &&
         sig.protocol == t.protocol;
}

inline std::optional<uint32_t> parse_ipv4(const std::string& s) {
  uint32_t parts[4];
  size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    size_t next = i < 3 ? s.find('.', pos) : s.size();
    if (next == std::string::npos) return std::nullopt;
    try {
      size_t used = 0;
      unsigned long v = std::stoul(s.substr(pos, next - pos), &used);
      if (used != next - pos || v > 255) return std::nullopt;
      parts[i] = uint32_t(v);
    } catch (...) {
      return std::nullopt;
    }
    pos = next + 1;
  }
  return parts[0] << 24 | parts[1] << 16 | parts[2] << 8 | parts[3];
}

inline std::string format_ipv4(uint32_t ip) {
  return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xff) +
         "." + std::to_string((ip >> 8) & 0xff) + "." +
         std::to_string(ip & 0xff);
}

// Parses the config syntax "[client_ip:client_port, server_ip:server_port,
// PROTO]" with '*' wildcards on the client side.
inline std::optional<FlowSignature> parse_signature(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(uint8_t(c))) s.push_back(c);
  }
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  s = s.substr(1, s.size() - 2);
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    size_t c = s.find(',', pos);
    parts.push_back(s.substr(pos, c - pos));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  if (parts.size() != 3) return std::nullopt;
  auto split_ep = [](const std::string& ep)
      -> std::optional<std::pair<std::string, std::string>> {
    size_t c = ep.rfind(':');
    if (c == std::string::npos) return std::nullopt;
    return std::make_pair(ep.substr(0, c), ep.substr(c + 1));
  };
  auto cli = split_ep(parts[0]);
  auto srv = split_ep(parts[1]);
  if (!cli || !srv) return std::nullopt;
  FlowSignature sig;
  if (cli->first != "*") {
    auto ip = parse_ipv4(cli->first);
    if (!ip) return std::nullopt;
    sig.client_ip = *ip;
  }
  if (cli->second != "*") {
    try {
      unsigned long v = std::stoul(cli->second);
      if (v > 65535) return std::nullopt;
      sig.client_port = uint16_t(v);
    } catch (...) {
      return std::nullopt;
    }
  }
  auto sip = parse_ipv4(srv->first);
  if (!sip || srv->second == "*") return std::nullopt;
  try {
    unsigned long v = std::stoul(srv->second);
    if (v > 65535) return std::nullopt;
    sig.server_port = uint16_t(v);
  } catch (...) {
    return std::nullopt;
  }
  sig.server_ip = *sip;
  if (parts[2] == "TCP") {
    sig.protocol = Protocol::kTcp;
  } else {
    return std::nullopt;  // only TCP services are recognized
  }
  return sig;
}

// ---------------------------------------------------------------------------
// Client message framing
// ---------------------------------------------------------------------------

// Length-prefixed frame carrying one or more self-describing application
// requests. Frames never split an application request, so the traffic
// director can always extract whole user messages.
constexpr size_t kClientFrameHeaderSize = 8;

struct ClientFrame {
  uint32_t message_length = 0;  // total frame bytes including this header
  uint32_t request_count = 0;
};

inline void append_client_frame(std::span<const uint8_t> payload,
                                uint32_t request_count,
                                std::vector<uint8_t>* out) {
  uint8_t hdr[kClientFrameHeaderSize];
  detail::put_u32(hdr, uint32_t(kClientFrameHeaderSize + payload.size()));
  detail::put_u32(hdr + 4, request_count);
  out->insert(out->end(), hdr, hdr + sizeof(hdr));
  out->insert(out->end(), payload.begin(), payload.end());
}

struct ParsedFrame {
  ClientFrame header;
  std::span<const uint8_t> payload;
  size_t consumed = 0;
};

enum class FrameParse { kNeedMore, kOk, kMalformed };

// Extracts the complete frame at the front of `buf`. kMalformed marks input
// the director should fail open on rather than wait for.
inline FrameParse try_parse_frame(std::span<const uint8_t> buf,
                                  ParsedFrame* out) {
  if (buf.size() < kClientFrameHeaderSize) return FrameParse::kNeedMore;
  out->header.message_length = detail::get_u32(buf.data());
  out->header.request_count = detail::get_u32(buf.data() + 4);
  if (out->header.message_length < kClientFrameHeaderSize ||
      out->header.request_count < 1) {
    return FrameParse::kMalformed;
  }
  if (buf.size() < out->header.message_length) return FrameParse::kNeedMore;
  out->payload =
      buf.subspan(kClientFrameHeaderSize,
                  out->header.message_length - kClientFrameHeaderSize);
  out->consumed = out->header.message_length;
  return FrameParse::kOk;
}

}  // namespace dds
