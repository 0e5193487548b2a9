#pragma once

// DPU offload engine: runs plugin-approved reads against the file service,
// with a fixed context ring that releases results strictly in request order
// per batch source. Payload bytes flow device -> pooled read buffer -> wire
// without copies; packets reference slices of the read buffer.

#include <array>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dds/app_proto.hpp"
#include "dds/cache_table.hpp"
#include "dds/file_service.hpp"
#include "dds/packet_pool.hpp"
#include "dds/plugin.hpp"

namespace dds {

// Modeled L2+L3+L4 header placeholder; the director fills it at transmit.
constexpr size_t kPacketHeaderBytes = 54;

struct IndirectPacket {
  std::array<uint8_t, kPacketHeaderBytes> header{};
  std::span<const uint8_t> payload;  // slice of a pooled buffer, never copied
};

// ceil(payload/mtu) packets whose payload slices concatenate to `payload`.
inline std::vector<IndirectPacket> build_packets(
    std::span<const uint8_t> payload, uint32_t mtu) {
  std::vector<IndirectPacket> out;
  size_t at = 0;
  do {
    IndirectPacket p;
    size_t take = std::min(size_t(mtu), payload.size() - at);
    p.payload = payload.subspan(at, take);
    at += take;
    out.push_back(p);
  } while (at < payload.size());
  return out;
}

struct EngineConfig {
  size_t context_ring_slots = 256;
  uint32_t mtu = 1500;
};

class OffloadEngine {
 public:
  // An ordered response release: the consumer transmits the packets, then
  // returns `buffer` to the pool.
  struct Emission {
    uint64_t conn_id = 0;
    uint64_t app_req_id = 0;
    Status status = Status::kSuccess;
    PacketBufferPool::Buffer buffer;
    std::vector<IndirectPacket> packets;
  };

  using HostFallback =
      std::function<void(uint64_t conn_id, const AppRequestView&)>;
  using EmitFn = std::function<void(Emission&&)>;

  OffloadEngine(FileService* service, OffloadPlugin* plugin, CacheTable* table,
                PacketBufferPool* pool, const EngineConfig& cfg = {})
      : cfg_(cfg),
        service_(service),
        plugin_(plugin),
        table_(table),
        pool_(pool),
        slots_(cfg.context_ring_slots) {}

  void set_sinks(HostFallback to_host, EmitFn emit) {
    to_host_ = std::move(to_host);
    emit_ = std::move(emit);
  }

  uint64_t ring_head() const { return head_; }
  uint64_t ring_tail() const { return tail_; }
  size_t ring_occupancy() const { return size_t(tail_ - head_); }
  uint64_t host_fallbacks() const { return host_fallbacks_; }
  uint64_t offloaded() const { return offloaded_; }

  // One engine batch. Per request: drain completions, admit into the ring or
  // fall back. A full ring sends the current and all remaining requests to
  // the host; a declined or unallocatable request falls back alone.
  void engine_step(uint64_t conn_id, std::span<const AppRequestView> reqs,
                   SimTime now) {
    for (size_t i = 0; i < reqs.size(); ++i) {
      complete_pending(now);
      if (tail_ - head_ == slots_.size()) {
        for (size_t j = i; j < reqs.size(); ++j) fallback(conn_id, reqs[j]);
        break;
      }
      std::optional<ReadOp> op = plugin_->offloadable(reqs[i], *table_);
      if (!op) {
        fallback(conn_id, reqs[i]);
        continue;
      }
      auto buf = pool_->allocate(kAppResponseHeaderSize + op->size);
      if (!buf) {
        fallback(conn_id, reqs[i]);
        continue;
      }
      Context& ctx = slots_[size_t(tail_ % slots_.size())];
      ctx.conn_id = conn_id;
      ctx.app_req_id = reqs[i].app_req_id();
      ctx.op = *op;
      ctx.buffer = *buf;
      ctx.io_status = Status::kPending;
      ctx.state.store(kPending, std::memory_order_release);
      Context* cp = &ctx;
      ++tail_;
      ++offloaded_;
      // The device writes straight into the pooled buffer, after the spot
      // reserved for the response header.
      std::span<uint8_t> dst = buf->span().subspan(kAppResponseHeaderSize,
                                                   op->size);
      Status s = service_->submit_engine_read(
          *op, dst,
          [cp](Status st) {
            cp->io_status = st;
            cp->state.store(kComplete, std::memory_order_release);
          },
          now);
      if (s != Status::kSuccess) {
        // Stale table entry or translation failure; completes immediately
        // as an in-order error response.
        cp->io_status = s;
        cp->state.store(kComplete, std::memory_order_release);
      }
    }
    complete_pending(now);
  }

  // Walks from the head; emits every leading COMPLETE context and stops at
  // the first PENDING one. Returns emissions made.
  size_t complete_pending(SimTime) {
    size_t emitted = 0;
    while (head_ < tail_) {
      Context& ctx = slots_[size_t(head_ % slots_.size())];
      if (ctx.state.load(std::memory_order_acquire) != kComplete) break;
      Emission e;
      e.conn_id = ctx.conn_id;
      e.app_req_id = ctx.app_req_id;
      e.status = ctx.io_status;
      e.buffer = ctx.buffer;
      uint32_t payload_len = e.status == Status::kSuccess ? ctx.op.size : 0;
      // Response header goes at the front of the same buffer; data is
      // already in place behind it.
      uint8_t* p = ctx.buffer.data;
      detail::put_u32(p, uint32_t(kAppResponseHeaderSize + payload_len));
      detail::put_u64(p + 4, ctx.app_req_id);
      p[12] = uint8_t(e.status);
      detail::put_u32(p + 13, payload_len);
      e.packets = build_packets(
          {ctx.buffer.data, kAppResponseHeaderSize + payload_len}, cfg_.mtu);
      ctx.state.store(kFree, std::memory_order_release);
      ++head_;
      ++emitted;
      if (emit_) emit_(std::move(e));
    }
    return emitted;
  }

 private:
  enum State : uint8_t { kFree = 0, kPending = 1, kComplete = 2 };
  struct Context {
    std::atomic<uint8_t> state{kFree};
    uint64_t conn_id = 0;
    uint64_t app_req_id = 0;
    ReadOp op;
    PacketBufferPool::Buffer buffer;
    Status io_status = Status::kPending;
  };

  void fallback(uint64_t conn_id, const AppRequestView& req) {
    ++host_fallbacks_;
    if (to_host_) to_host_(conn_id, req);
  }

  EngineConfig cfg_;
  FileService* service_;
  OffloadPlugin* plugin_;
  CacheTable* table_;
  PacketBufferPool* pool_;
  std::vector<Context> slots_;
  uint64_t head_ = 0;
  uint64_t tail_ = 0;
  uint64_t host_fallbacks_ = 0;
  uint64_t offloaded_ = 0;
  HostFallback to_host_;
  EmitFn emit_;
};

}  // namespace dds
