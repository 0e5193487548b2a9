#pragma once

// In-memory block device with asynchronous completion. Submissions carry
// caller-owned spans; data moves between the span and the backing image at
// completion time, and completion order is latency-driven rather than
// submission order. Tests can switch to manual mode and complete pending
// ops in any permutation.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "dds/dma.hpp"
#include "dds/status.hpp"

namespace dds {

struct BlockDeviceConfig {
  size_t block_size = 512;
  size_t num_blocks = 1 << 16;       // 32 MiB default image
  SimTime base_latency_ns = 8000;    // floor per op
  SimTime jitter_ns = 12000;         // uniform extra, 0 disables reordering
  uint64_t seed = 1;
  bool manual_completion = false;    // tests drive completion order directly
};

class SimBlockDevice {
 public:
  using Completion = std::function<void(Status)>;

  explicit SimBlockDevice(const BlockDeviceConfig& cfg)
      : cfg_(cfg), image_(cfg.block_size * cfg.num_blocks, 0), rng_(cfg.seed) {}

  size_t capacity_bytes() const { return image_.size(); }
  size_t block_size() const { return cfg_.block_size; }
  bool manual_completion() const { return cfg_.manual_completion; }

  uint64_t submit_read(uint64_t byte_offset, std::span<uint8_t> dst,
                       Completion done, SimTime now = 0) {
    return submit(false, byte_offset, {const_cast<uint8_t*>(dst.data()), dst.size()},
                  std::move(done), now);
  }

  uint64_t submit_write(uint64_t byte_offset, std::span<const uint8_t> src,
                        Completion done, SimTime now = 0) {
    return submit(true, byte_offset,
                  {const_cast<uint8_t*>(src.data()), src.size()},
                  std::move(done), now);
  }

  // Synchronous path for metadata housekeeping; bypasses the queue.
  Status sync_read(uint64_t byte_offset, std::span<uint8_t> dst) {
    if (byte_offset + dst.size() > image_.size()) return Status::kOutOfRange;
    std::memcpy(dst.data(), image_.data() + byte_offset, dst.size());
    return Status::kSuccess;
  }
  Status sync_write(uint64_t byte_offset, std::span<const uint8_t> src) {
    if (byte_offset + src.size() > image_.size()) return Status::kOutOfRange;
    std::memcpy(image_.data() + byte_offset, src.data(), src.size());
    return Status::kSuccess;
  }

  // Completes every op whose deadline has passed, in deadline order.
  // Returns the number completed.
  size_t poll(SimTime now) {
    assert(!cfg_.manual_completion);
    size_t n = 0;
    for (;;) {
      int best = -1;
      for (size_t i = 0; i < pending_.size(); ++i) {
        if (pending_[i].ready_at > now) continue;
        if (best < 0 || pending_[i].ready_at < pending_[size_t(best)].ready_at ||
            (pending_[i].ready_at == pending_[size_t(best)].ready_at &&
             pending_[i].id < pending_[size_t(best)].id)) {
          best = int(i);
        }
      }
      if (best < 0) break;
      finish(size_t(best));
      ++n;
    }
    return n;
  }

  // Earliest pending deadline, or 0 when idle.
  SimTime next_completion_time() const {
    SimTime t = 0;
    for (const Op& op : pending_) {
      if (t == 0 || op.ready_at < t) t = op.ready_at;
    }
    return t;
  }

  size_t pending_count() const { return pending_.size(); }

  // Manual mode: complete the i-th pending op (submission order index).
  void complete_index(size_t i) {
    assert(i < pending_.size());
    finish(i);
  }

  const std::vector<uint8_t>& image() const { return image_; }
  std::span<uint8_t> raw_image() { return image_; }

  uint64_t reads_submitted() const { return reads_; }
  uint64_t writes_submitted() const { return writes_; }

 private:
  struct Op {
    uint64_t id;
    bool write;
    uint64_t offset;
    std::span<uint8_t> buf;
    Completion done;
    SimTime ready_at;
  };

  uint64_t submit(bool write, uint64_t offset, std::span<uint8_t> buf,
                  Completion done, SimTime now) {
    uint64_t id = next_id_++;
    if (offset + buf.size() > image_.size()) {
      // Fail fast; out-of-device ranges never reach the queue.
      if (done) done(Status::kOutOfRange);
      return id;
    }
    (write ? writes_ : reads_)++;
    SimTime lat = cfg_.base_latency_ns;
    if (cfg_.jitter_ns > 0) {
      lat += std::uniform_int_distribution<SimTime>(0, cfg_.jitter_ns)(rng_);
    }
    pending_.push_back({id, write, offset, buf, std::move(done), now + lat});
    return id;
  }

  void finish(size_t idx) {
    Op op = std::move(pending_[idx]);
    pending_.erase(pending_.begin() + long(idx));
    if (op.write) {
      std::memcpy(image_.data() + op.offset, op.buf.data(), op.buf.size());
    } else {
      std::memcpy(op.buf.data(), image_.data() + op.offset, op.buf.size());
    }
    if (op.done) op.done(Status::kSuccess);
  }

  BlockDeviceConfig cfg_;
  std::vector<uint8_t> image_;
  std::mt19937_64 rng_;
  std::vector<Op> pending_;
  uint64_t next_id_ = 1;
  uint64_t reads_ = 0;
  uint64_t writes_ = 0;
};

}  // namespace dds
