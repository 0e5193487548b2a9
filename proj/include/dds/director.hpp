// Transparent in-path proxy: classifies flows by application signature,
// terminates client connections, extracts application messages, routes each
// request to either the local offload engine or the storage host over an
// independent host-side connection, and returns responses to clients.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dds/offload_engine.hpp"
#include "dds/simnet.hpp"

namespace dds {

// ---------------------------------------------------------------------------
// Flow classification. Signature types and the config-file syntax parser
// (FlowSignature, parse_signature, match_signature) live in wire.hpp; the
// director adds direction-agnostic matching and symmetric receive-side
// scaling over observed packets.
// ---------------------------------------------------------------------------
struct PacketMeta {
  bool parseable = true;
  uint32_t src_ip = 0;
  uint16_t src_port = 0;
  uint32_t dst_ip = 0;
  uint16_t dst_port = 0;
  Protocol proto = Protocol::kTcp;
};

// A packet may travel in either direction of a flow the signature names.
inline bool signature_matches_packet(const FlowSignature& sig,
                                     const PacketMeta& p) {
  FiveTuple fwd{p.src_ip, p.src_port, p.dst_ip, p.dst_port, p.proto};
  FiveTuple rev{p.dst_ip, p.dst_port, p.src_ip, p.src_port, p.proto};
  return match_signature(sig, fwd) || match_signature(sig, rev);
}

enum class ClassifyAction : uint8_t { kFastPathHost = 0, kInspect = 1 };

struct Classification {
  ClassifyAction action = ClassifyAction::kFastPathHost;
  size_t core = 0;
};

// Symmetric receive-side-scaling hash: both directions of a flow map to the
// same value.
inline uint64_t rss_symmetric_hash(const PacketMeta& p) {
  auto mix = [](uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  uint64_t a = mix((uint64_t(p.src_ip) << 16) | p.src_port);
  uint64_t b = mix((uint64_t(p.dst_ip) << 16) | p.dst_port);
  return mix(a ^ b ^ (uint64_t(p.proto) << 56));
}

// ---------------------------------------------------------------------------
// The director.
// ---------------------------------------------------------------------------
struct DirectorConfig {
  std::vector<FlowSignature> signatures;  // first match wins
  size_t cores = 4;
  uint32_t mtu = 1500;
};

struct DirectorCounters {
  uint64_t frames_in = 0;
  uint64_t requests_to_host = 0;
  uint64_t requests_to_engine = 0;
  uint64_t fail_open_frames = 0;        // unparseable, forwarded whole
  uint64_t responses_from_host = 0;
  uint64_t responses_from_engine = 0;
  uint64_t dropped_responses = 0;       // client connection already closed
};

class TrafficDirector {
 public:
  TrafficDirector(SimClock* clock, const DirectorConfig& cfg,
                  OffloadPlugin* plugin, CacheTable* table,
                  OffloadEngine* engine, PacketBufferPool* pool,
                  TraceLog* trace = nullptr)
      : clock_(clock),
        cfg_(cfg),
        plugin_(plugin),
        table_(table),
        engine_(engine),
        pool_(pool),
        trace_(trace) {
    if (engine_) {
      engine_->set_sinks(
          [this](uint64_t conn, const AppRequestView& r) {
            forward_to_host(conn, r);
          },
          [this](OffloadEngine::Emission&& e) {
            on_engine_emission(std::move(e));
          });
    }
  }

  const DirectorCounters& counters() const { return counters_; }

  Classification classify(const PacketMeta& p) const {
    if (!p.parseable) return {ClassifyAction::kFastPathHost, 0};
    for (const FlowSignature& sig : cfg_.signatures) {
      if (signature_matches_packet(sig, p)) {
        return {ClassifyAction::kInspect,
                size_t(rss_symmetric_hash(p) % cfg_.cores)};
      }
    }
    return {ClassifyAction::kFastPathHost, 0};
  }

  // Registers a split connection: the proxy owns the client-facing endpoint
  // and an independent host-facing endpoint. Returns the connection id used
  // to tag engine work.
  uint64_t open_connection(StreamEndpoint* client_side,
                           StreamEndpoint* host_side, const PacketMeta& tuple) {
    uint64_t id = next_conn_id_++;
    Conn& c = conns_[id];
    c.client_side = client_side;
    c.host_side = host_side;
    c.tuple = tuple;
    c.core = classify(tuple).core;
    client_side->set_on_deliver([this, id](std::span<const uint8_t> bytes) {
      on_client_bytes(id, bytes);
    });
    host_side->set_on_deliver([this, id](std::span<const uint8_t> bytes) {
      on_host_bytes(id, bytes);
    });
    return id;
  }

  void close_connection(uint64_t id) {
    auto it = conns_.find(id);
    if (it != conns_.end()) it->second.open = false;
  }

  size_t connection_core(uint64_t id) const { return conns_.at(id).core; }

  // Ordered bytes arriving from the client-side transport. Reassembles
  // frames; for each complete frame, partitions its requests between the
  // offload engine and the host-side connection.
  void on_client_bytes(uint64_t conn_id, std::span<const uint8_t> bytes) {
    Conn& c = conns_.at(conn_id);
    c.client_buf.insert(c.client_buf.end(), bytes.begin(), bytes.end());
    size_t consumed = 0;
    while (true) {
      std::span<const uint8_t> rest{c.client_buf.data() + consumed,
                                    c.client_buf.size() - consumed};
      auto frame = try_parse_frame(rest);
      if (!frame) break;
      ++counters_.frames_in;
      handle_frame(conn_id, c, *frame);
      consumed += frame->frame.size();
    }
    if (consumed > 0) {
      c.client_buf.erase(c.client_buf.begin(),
                         c.client_buf.begin() + long(consumed));
    }
  }

  // Ordered bytes arriving from the host-side transport: complete response
  // records relay to the client. Partial records wait, so a host response
  // never interleaves with an engine packet train mid-record.
  void on_host_bytes(uint64_t conn_id, std::span<const uint8_t> bytes) {
    Conn& c = conns_.at(conn_id);
    c.host_buf.insert(c.host_buf.end(), bytes.begin(), bytes.end());
    size_t consumed = 0;
    while (c.host_buf.size() - consumed >= kAppResponseHeaderSize) {
      uint32_t total = detail::get_u32(c.host_buf.data() + consumed);
      if (total < kAppResponseHeaderSize ||
          c.host_buf.size() - consumed < total) {
        break;
      }
      ++counters_.responses_from_host;
      send_to_client(c, {c.host_buf.data() + consumed, total});
      consumed += total;
    }
    if (consumed > 0) {
      c.host_buf.erase(c.host_buf.begin(), c.host_buf.begin() + long(consumed));
    }
  }

 private:
  struct Conn {
    StreamEndpoint* client_side = nullptr;
    StreamEndpoint* host_side = nullptr;
    PacketMeta tuple;
    size_t core = 0;
    bool open = true;
    std::vector<uint8_t> client_buf;
    std::vector<uint8_t> host_buf;
  };

  void handle_frame(uint64_t conn_id, Conn& c, const FrameView& frame) {
    std::vector<AppRequestView> views;
    if (frame.count == UINT32_MAX ||
        !split_app_requests(frame.payload(), frame.count, &views)) {
      // Fail open: not ours (or corrupt) — forward the whole frame verbatim.
      ++counters_.fail_open_frames;
      if (trace_) {
        trace_->record(clock_->now(), "director", "fail_open",
                       "len=" + std::to_string(frame.frame.size()));
      }
      c.host_side->send(frame.frame);
      return;
    }
    std::vector<AppRequestView> engine_batch;
    std::vector<uint8_t> host_payload;
    uint32_t host_count = 0;
    for (const AppRequestView& r : views) {
      if (plugin_ && engine_ && table_ &&
          plugin_->offloadable(r, *table_).has_value()) {
        engine_batch.push_back(r);
      } else {
        host_payload.insert(host_payload.end(), r.bytes.begin(),
                            r.bytes.end());
        ++host_count;
        ++counters_.requests_to_host;
      }
    }
    if (host_count > 0) {
      // Re-framed as a fresh message: host-side sequence numbers stay
      // contiguous no matter which client bytes were peeled off.
      c.host_side->send(make_frame(host_count, host_payload));
    }
    if (!engine_batch.empty()) {
      counters_.requests_to_engine += engine_batch.size();
      engine_->engine_step(conn_id, engine_batch, clock_->now());
    }
  }

  // Engine fallback: a request the engine could not take after all. Framed
  // individually onto the host connection.
  void forward_to_host(uint64_t conn_id, const AppRequestView& r) {
    Conn& c = conns_.at(conn_id);
    counters_.requests_to_engine -= 1;
    counters_.requests_to_host += 1;
    c.host_side->send(make_frame(1, r.bytes));
  }

  void on_engine_emission(OffloadEngine::Emission&& e) {
    auto it = conns_.find(e.conn_id);
    if (it == conns_.end() || !it->second.open) {
      ++counters_.dropped_responses;
      pool_->release(e.buffer);
      return;
    }
    Conn& c = it->second;
    ++counters_.responses_from_engine;
    // Populate the indirect packets' header placeholders with the
    // client-side flow identity, then transmit the train back to back.
    uint64_t seq = c.client_side->bytes_sent();
    for (IndirectPacket& p : e.packets) {
      detail::put_u32(p.header.data(), c.tuple.dst_ip);   // our address
      detail::put_u32(p.header.data() + 4, c.tuple.src_ip);
      detail::put_u16(p.header.data() + 8, c.tuple.dst_port);
      detail::put_u16(p.header.data() + 10, c.tuple.src_port);
      detail::put_u64(p.header.data() + 12, seq);
      seq += p.payload.size();
      c.client_side->send(p.payload);
    }
    pool_->release(e.buffer);
  }

  void send_to_client(Conn& c, std::span<const uint8_t> record) {
    if (!c.open) {
      ++counters_.dropped_responses;
      return;
    }
    c.client_side->send(record);
  }

  SimClock* clock_;
  DirectorConfig cfg_;
  OffloadPlugin* plugin_;
  CacheTable* table_;
  OffloadEngine* engine_;
  PacketBufferPool* pool_;
  TraceLog* trace_;
  DirectorCounters counters_;
  std::map<uint64_t, Conn> conns_;
  uint64_t next_conn_id_ = 1;
};

// ---------------------------------------------------------------------------
// Passthrough interceptor (test-only): sits on the client→host link without
// splitting the connection. Frame-aligned segments whose requests are all
// offloadable are consumed before reaching the host endpoint, so the host
// transport observes sequence gaps — the pathology the split proxy exists to
// prevent.
// ---------------------------------------------------------------------------
class PassthroughInterceptor {
 public:
  PassthroughInterceptor(OffloadPlugin* plugin, CacheTable* table)
      : plugin_(plugin), table_(table) {}

  // Install with Link::set_interceptor. Returns false to consume.
  bool operator()(const Segment& seg) {
    if (seg.is_ack || !plugin_) return true;
    auto frame = try_parse_frame(seg.payload);
    if (!frame || frame->count == UINT32_MAX ||
        frame->frame.size() != seg.payload.size()) {
      return true;  // not a whole frame; fail open
    }
    std::vector<AppRequestView> views;
    if (!split_app_requests(frame->payload(), frame->count, &views)) {
      return true;
    }
    for (const AppRequestView& r : views) {
      if (!plugin_->offloadable(r, *table_).has_value()) return true;
    }
    diverted_requests_ += views.size();
    return false;  // fully offloadable: swallowed before the host endpoint
  }

  uint64_t diverted_requests() const { return diverted_requests_; }

 private:
  OffloadPlugin* plugin_;
  CacheTable* table_;
  uint64_t diverted_requests_ = 0;
};

}  // namespace dds
