// Host-side application service: receives request frames forwarded by the
// traffic director over the split connection, executes them against the file
// service through the host file library, and answers with response records.
// Keeps a bounded record cache so recently written or read data is served
// from host memory.
#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dds/app_proto.hpp"
#include "dds/host_lib.hpp"
#include "dds/simnet.hpp"

namespace dds {

struct HostServiceConfig {
  uint32_t record_size = 1024;   // one slot per key / page
  size_t cache_records = 4096;   // bounded LRU, in records
  SimTime op_cost_ns = 2'000;    // modeled CPU time per request handled
};

struct HostServiceCounters {
  uint64_t reads = 0;
  uint64_t writes = 0;
  uint64_t cache_hits = 0;
  uint64_t cache_misses = 0;
  uint64_t errors = 0;
};

class HostService {
 public:
  HostService(PollGroup* group, FileHandle* handle,
              const HostServiceConfig& cfg = {})
      : group_(group), handle_(handle), cfg_(cfg) {}

  // Wire a split-connection endpoint: frames arriving on it are executed and
  // answered on the same endpoint.
  void attach(StreamEndpoint* ep) {
    ep->set_on_deliver([this, ep](std::span<const uint8_t> bytes) {
      on_bytes(ep, bytes);
    });
  }

  const HostServiceCounters& counters() const { return counters_; }
  uint64_t busy_ns() const { return busy_ns_; }
  size_t pending_count() const { return pending_.size(); }

  void on_bytes(StreamEndpoint* ep, std::span<const uint8_t> bytes) {
    std::vector<uint8_t>& buf = bufs_[ep];
    buf.insert(buf.end(), bytes.begin(), bytes.end());
    size_t at = 0;
    while (true) {
      auto frame = try_parse_frame({buf.data() + at, buf.size() - at});
      if (!frame) break;
      std::vector<AppRequestView> views;
      if (frame->count != UINT32_MAX &&
          split_app_requests(frame->payload(), frame->count, &views)) {
        for (const AppRequestView& r : views) execute(ep, r);
      } else {
        ++counters_.errors;  // unrecognized frame; nothing to answer
      }
      at += frame->frame.size();
    }
    buf.erase(buf.begin(), buf.begin() + long(at));
  }

  // Drains file-library completions and sends the responses they unblock.
  // Returns the number of requests retired.
  size_t poll() {
    std::vector<Completion> done;
    group_->poll_wait(64, 0, &done);
    for (const Completion& c : done) {
      auto it = pending_.find(c.request_id);
      if (it == pending_.end()) continue;
      Op op = std::move(it->second);
      pending_.erase(it);
      if (c.status != Status::kSuccess) {
        ++counters_.errors;
        respond(op.ep, op.app_req_id, c.status, {});
        continue;
      }
      if (op.is_read) {
        cache_put(op.key, *op.data);
        respond(op.ep, op.app_req_id, Status::kSuccess, *op.data);
      } else {
        respond(op.ep, op.app_req_id, Status::kSuccess, {});
      }
    }
    return done.size();
  }

 private:
  struct Op {
    StreamEndpoint* ep = nullptr;
    uint64_t app_req_id = 0;
    uint64_t key = 0;
    bool is_read = false;
    std::shared_ptr<std::vector<uint8_t>> data;  // read dst / write src
  };

  void execute(StreamEndpoint* ep, const AppRequestView& r) {
    busy_ns_ += cfg_.op_cost_ns;
    switch (r.op()) {
      case AppOp::kKvGet:
        do_read(ep, r.app_req_id(), detail::get_u64(r.body().data()));
        return;
      case AppOp::kPageGet:
        do_read(ep, r.app_req_id(), detail::get_u64(r.body().data()));
        return;
      case AppOp::kKvPut: {
        uint32_t len = detail::get_u32(r.body().data() + 8);
        do_write(ep, r.app_req_id(), detail::get_u64(r.body().data()),
                 r.body().subspan(12, len));
        return;
      }
      case AppOp::kPageWrite: {
        uint32_t len = detail::get_u32(r.body().data() + 16);
        do_write(ep, r.app_req_id(), detail::get_u64(r.body().data()),
                 r.body().subspan(20, len));
        return;
      }
    }
    ++counters_.errors;
    respond(ep, r.app_req_id(), Status::kConfigInvalid, {});
  }

  void do_read(StreamEndpoint* ep, uint64_t id, uint64_t key) {
    ++counters_.reads;
    if (const std::vector<uint8_t>* hit = cache_get(key)) {
      ++counters_.cache_hits;
      respond(ep, id, Status::kSuccess, *hit);
      return;
    }
    ++counters_.cache_misses;
    Op op;
    op.ep = ep;
    op.app_req_id = id;
    op.key = key;
    op.is_read = true;
    op.data = std::make_shared<std::vector<uint8_t>>(cfg_.record_size);
    uint64_t rid = 0;
    Status s = group_->read(handle_, key * cfg_.record_size, *op.data, &rid);
    if (s != Status::kSuccess) {
      ++counters_.errors;
      respond(ep, id, s, {});
      return;
    }
    pending_.emplace(rid, std::move(op));
  }

  void do_write(StreamEndpoint* ep, uint64_t id, uint64_t key,
                std::span<const uint8_t> value) {
    ++counters_.writes;
    Op op;
    op.ep = ep;
    op.app_req_id = id;
    op.key = key;
    op.data = std::make_shared<std::vector<uint8_t>>(cfg_.record_size);
    size_t n = std::min<size_t>(value.size(), cfg_.record_size);
    std::copy_n(value.begin(), n, op.data->begin());
    cache_put(key, *op.data);  // write-through: later reads hit host memory
    uint64_t rid = 0;
    Status s = group_->write(handle_, key * cfg_.record_size, *op.data, &rid);
    if (s != Status::kSuccess) {
      ++counters_.errors;
      respond(ep, id, s, {});
      return;
    }
    // Respond only once durable, so cache-table publication has happened
    // before the client can read its own write through the offload path.
    pending_.emplace(rid, std::move(op));
  }

  void respond(StreamEndpoint* ep, uint64_t id, Status status,
               std::span<const uint8_t> payload) {
    std::vector<uint8_t> out;
    append_app_response(&out, id, status, payload);
    ep->send(out);
  }

  // Bounded LRU over fixed-size records.
  const std::vector<uint8_t>* cache_get(uint64_t key) {
    auto it = cache_.find(key);
    if (it == cache_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.where);
    return &it->second.value;
  }

  void cache_put(uint64_t key, const std::vector<uint8_t>& value) {
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      it->second.value = value;
      order_.splice(order_.begin(), order_, it->second.where);
      return;
    }
    if (cache_.size() >= cfg_.cache_records) {
      cache_.erase(order_.back());
      order_.pop_back();
    }
    order_.push_front(key);
    cache_.emplace(key, Entry{value, order_.begin()});
  }

  struct Entry {
    std::vector<uint8_t> value;
    std::list<uint64_t>::iterator where;
  };

  PollGroup* group_;
  FileHandle* handle_;
  HostServiceConfig cfg_;
  std::map<StreamEndpoint*, std::vector<uint8_t>> bufs_;
  std::map<uint64_t, Op> pending_;  // by library request id
  std::unordered_map<uint64_t, Entry> cache_;
  std::list<uint64_t> order_;
  HostServiceCounters counters_;
  uint64_t busy_ns_ = 0;
};

}  // namespace dds
