#pragma once

// DMA-backed lock-free rings. The request ring supports many concurrent
// producers and a single consumer through three cursors: head (bytes
// consumed), progress (bytes fully written) and tail (bytes reserved), all
// 64-bit unwrapped counters. A producer reserves space with a CAS on tail,
// writes its record, then publishes by advancing progress over its
// reservation. The consumer only drains when progress has caught up with
// tail, which yields batches of fully written records.
//
// Cursors live on distinct cache lines and, in the default layout, progress
// physically precedes tail so the DPU can sample both with one DMA read.

#include <atomic>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "dds/dma.hpp"
#include "dds/status.hpp"
#include "dds/wire.hpp"

namespace dds {

enum class RingResult { kOk, kRetry, kEmpty, kRecordTooLarge };

enum class CursorLayout {
  kProgressBeforeTail,  // default; one DMA read covers both cursors
  kTailBeforeProgress,  // test-only reversed layout
};

struct RingConfig {
  size_t capacity = 4u << 20;   // bytes, power of two
  size_t max_progress = 1u << 20;  // M; defaults to capacity/4
  CursorLayout layout = CursorLayout::kProgressBeforeTail;
};

namespace detail {
struct alignas(64) CursorLine {
  std::atomic<uint64_t> value{0};
  char pad[64 - sizeof(std::atomic<uint64_t>)];
};
}  // namespace detail

class RequestRing {
 public:
  explicit RequestRing(const RingConfig& cfg = {})
      : capacity_(cfg.capacity),
        mask_(cfg.capacity - 1),
        max_progress_(cfg.max_progress),
        layout_(cfg.layout),
        data_(new uint8_t[cfg.capacity]) {
    assert((capacity_ & mask_) == 0 && capacity_ > 0);
    assert(max_progress_ % kRecordAlign == 0 && max_progress_ <= capacity_);
  }

  size_t capacity() const { return capacity_; }
  size_t max_progress() const { return max_progress_; }
  CursorLayout layout() const { return layout_; }

  uint64_t head() const { return cursors_[0].value.load(std::memory_order_acquire); }
  uint64_t progress() const { return progress_line().value.load(std::memory_order_acquire); }
  uint64_t tail() const { return tail_line().value.load(std::memory_order_acquire); }

  // Multi-producer insert. The record must be a fully encoded request whose
  // size is a multiple of the record alignment. RETRY means reserved but
  // unconsumed bytes would exceed M; no cursor was written on that path.
  RingResult insert(std::span<const uint8_t> record) {
    const uint64_t n = record.size();
    if (n == 0 || n > max_progress_ || n > capacity_ || n % kRecordAlign != 0) {
      return RingResult::kRecordTooLarge;
    }
    auto& tail = tail_line().value;
    for (;;) {
      uint64_t t = tail.load(std::memory_order_acquire);
      uint64_t h = cursors_[0].value.load(std::memory_order_acquire);
      const uint64_t phys = t & mask_;
      const uint64_t to_end = capacity_ - phys;
      if (to_end < n) {
        // A record never straddles the physical end: fill the remainder with
        // a PAD record the consumer skips.
        if (t - h + to_end > max_progress_) return RingResult::kRetry;
        if (!tail.compare_exchange_weak(t, t + to_end,
                                        std::memory_order_acq_rel,
                                        std::memory_order_relaxed)) {
          continue;
        }
        write_pad(phys, to_end);
        publish(t, to_end);
        continue;
      }
      if (t - h + n > max_progress_) return RingResult::kRetry;
      if (!tail.compare_exchange_weak(t, t + n, std::memory_order_acq_rel,
                                      std::memory_order_relaxed)) {
        continue;
      }
      std::memcpy(data_.get() + phys, record.data(), n);
      publish(t, n);
      return RingResult::kOk;
    }
  }

  // A drained batch: the logical range [begin,end) as up to two physical
  // spans. Call release() (or ring.release(end)) when done with the bytes.
  struct Batch {
    uint64_t begin = 0;
    uint64_t end = 0;
    std::span<const uint8_t> spans[2];
    int span_count = 0;
    uint64_t size() const { return end - begin; }
  };

  // Single-consumer drain. EMPTY when head == tail; RETRY while some
  // producer has reserved but not yet published.
  RingResult consume_batch(Batch* out) {
    uint64_t h = cursors_[0].value.load(std::memory_order_relaxed);
    uint64_t t = tail_line().value.load(std::memory_order_acquire);
    if (t == h) return RingResult::kEmpty;
    uint64_t p = progress_line().value.load(std::memory_order_acquire);
    if (p < t) return RingResult::kRetry;
    fill_batch(h, t, out);
    return RingResult::kOk;
  }

  void release(uint64_t new_head) {
    cursors_[0].value.store(new_head, std::memory_order_release);
  }

  void fill_batch(uint64_t h, uint64_t t, Batch* out) const {
    out->begin = h;
    out->end = t;
    const uint64_t ph = h & mask_;
    const uint64_t pt = t & mask_;
    if (pt > ph || t == h) {
      out->spans[0] = {data_.get() + ph, size_t(t - h)};
      out->span_count = 1;
    } else {
      out->spans[0] = {data_.get() + ph, size_t(capacity_ - ph)};
      out->spans[1] = {data_.get(), size_t(pt)};
      out->span_count = pt == 0 ? 1 : 2;
    }
  }

  const uint8_t* data() const { return data_.get(); }
  size_t mask() const { return mask_; }

 private:
  detail::CursorLine& progress_line() {
    return layout_ == CursorLayout::kProgressBeforeTail ? cursors_[1] : cursors_[2];
  }
  detail::CursorLine& tail_line() {
    return layout_ == CursorLayout::kProgressBeforeTail ? cursors_[2] : cursors_[1];
  }
  const detail::CursorLine& progress_line() const {
    return layout_ == CursorLayout::kProgressBeforeTail ? cursors_[1] : cursors_[2];
  }
  const detail::CursorLine& tail_line() const {
    return layout_ == CursorLayout::kProgressBeforeTail ? cursors_[2] : cursors_[1];
  }

  void write_pad(uint64_t phys, uint64_t size) {
    FileRequestHeader pad;
    pad.op_kind = OpKind::kPad;
    pad.total_record_size = uint32_t(size);
    write_request_header(pad, data_.get() + phys);
  }

  // Publication: progress advances strictly in reservation order, so a
  // producer waits for earlier reservations to finish their writes.
  void publish(uint64_t start, uint64_t n) {
    auto& prog = progress_line().value;
    uint64_t expected = start;
    while (!prog.compare_exchange_weak(expected, start + n,
                                       std::memory_order_release,
                                       std::memory_order_relaxed)) {
      expected = start;
    }
  }

  const size_t capacity_;
  const size_t mask_;
  const size_t max_progress_;
  const CursorLayout layout_;
  // Physical cursor area: head line first, then progress/tail per layout.
  detail::CursorLine cursors_[3];
  std::unique_ptr<uint8_t[]> data_;
};

// Iterates the records of a batch, skipping PAD fillers. Records never
// straddle a physical span boundary.
template <typename Fn>
Status for_each_request(const RequestRing::Batch& batch, Fn&& fn) {
  for (int i = 0; i < batch.span_count; ++i) {
    std::span<const uint8_t> span = batch.spans[i];
    size_t off = 0;
    while (off < span.size()) {
      DecodedRequest req;
      Status s = decode_request(span.subspan(off), &req);
      if (s != Status::kSuccess) return s;
      if (req.header.op_kind != OpKind::kPad) fn(req);
      off += req.consumed;
    }
  }
  return Status::kSuccess;
}

// ---------------------------------------------------------------------------
// DPU-side fetcher: models the DMA consumer of a request ring.
// ---------------------------------------------------------------------------

// The fetcher keeps its own copy of head (it is the sole head writer) and a
// local buffer at least as large as the ring, mirror-addressed so fetched
// records keep their physical offsets and outstanding requests never overlap.
class DmaFetcher {
 public:
  DmaFetcher(RequestRing* ring, DmaChannel* channel)
      : ring_(ring),
        channel_(channel),
        buffer_(new uint8_t[ring->capacity()]) {}

  struct Fetched {
    uint64_t begin = 0;
    uint64_t end = 0;
    std::span<const uint8_t> spans[2];
    int span_count = 0;
  };

  // One poll: a single cursor read with the default layout (two with the
  // reversed layout), then a data read per physical span and a head write.
  RingResult fetch(Fetched* out) {
    uint64_t p, t;
    if (ring_->layout() == CursorLayout::kProgressBeforeTail) {
      // Both cursors are physically adjacent with P first, so one DMA read
      // samples them in address order.
      channel_->accrue_cursor_read();
      p = ring_->progress();
      t = ring_->tail();
    } else {
      channel_->accrue_cursor_read();
      t = ring_->tail();
      channel_->accrue_cursor_read();
      p = ring_->progress();
    }
    if (t == head_) return RingResult::kEmpty;
    if (p < t) return RingResult::kRetry;
    RequestRing::Batch batch;
    ring_->fill_batch(head_, t, &batch);
    out->begin = head_;
    out->end = t;
    out->span_count = batch.span_count;
    for (int i = 0; i < batch.span_count; ++i) {
      const uint64_t phys = (i == 0 ? head_ & ring_->mask() : 0);
      std::memcpy(buffer_.get() + phys, batch.spans[i].data(),
                  batch.spans[i].size());
      channel_->accrue_data_read(batch.spans[i].size());
      out->spans[i] = {buffer_.get() + phys, batch.spans[i].size()};
    }
    head_ = t;
    ring_->release(t);
    channel_->accrue_head_write();
    return RingResult::kOk;
  }

  uint64_t head() const { return head_; }
  const uint8_t* buffer() const { return buffer_.get(); }
  uint8_t* buffer() { return buffer_.get(); }
  size_t buffer_size() const { return ring_->capacity(); }
  size_t mask() const { return ring_->mask(); }
  size_t ring_max_progress() const { return ring_->max_progress(); }

 private:
  RequestRing* ring_;
  DmaChannel* channel_;
  uint64_t head_ = 0;
  std::unique_ptr<uint8_t[]> buffer_;
};

template <typename Fn>
Status for_each_request(const DmaFetcher::Fetched& batch, Fn&& fn) {
  for (int i = 0; i < batch.span_count; ++i) {
    std::span<const uint8_t> span = batch.spans[i];
    size_t off = 0;
    while (off < span.size()) {
      DecodedRequest req;
      Status s = decode_request(span.subspan(off), &req);
      if (s != Status::kSuccess) return s;
      if (req.header.op_kind != OpKind::kPad) fn(req);
      off += req.consumed;
    }
  }
  return Status::kSuccess;
}

// ---------------------------------------------------------------------------
// Response ring: single producer (the DPU), serialized host consumers.
// ---------------------------------------------------------------------------

class ResponseRing {
 public:
  explicit ResponseRing(size_t capacity = 4u << 20)
      : capacity_(capacity), mask_(capacity - 1), data_(new uint8_t[capacity]) {
    assert((capacity_ & mask_) == 0);
  }

  size_t capacity() const { return capacity_; }
  uint64_t head() const { return head_.load(std::memory_order_acquire); }
  uint64_t tail() const { return tail_.load(std::memory_order_acquire); }

  // Producer side: stages a batch of whole records, inserting PAD records at
  // the physical wrap. All-or-nothing; returns kRetry if the ring lacks
  // space for the batch. The write models a single DMA data write.
  RingResult insert_batch(std::span<const std::span<const uint8_t>> records,
                          DmaChannel* channel = nullptr) {
    const uint64_t h = head_.load(std::memory_order_acquire);
    uint64_t t = tail_.load(std::memory_order_relaxed);
    const uint64_t start = t;
    // First pass: compute total size including any pads.
    uint64_t cursor = t;
    for (const auto& r : records) {
      uint64_t phys = cursor & mask_;
      uint64_t to_end = capacity_ - phys;
      if (to_end < r.size()) cursor += to_end;
      cursor += r.size();
    }
    if (cursor - h > capacity_) return RingResult::kRetry;
    // Second pass: write.
    for (const auto& r : records) {
      uint64_t phys = t & mask_;
      uint64_t to_end = capacity_ - phys;
      if (to_end < r.size()) {
        write_pad(phys, to_end);
        t += to_end;
        phys = t & mask_;
      }
      std::memcpy(data_.get() + phys, r.data(), r.size());
      t += r.size();
    }
    tail_.store(t, std::memory_order_release);
    if (channel) {
      channel->accrue_data_write(t - start);
      if (channel->interrupt_hook) channel->interrupt_hook();
    }
    return RingResult::kOk;
  }

  // Consumer side, serialized by an internal short critical section around
  // the consume step only. The callback sees each non-pad record exactly
  // once; it returns false to stop draining early (the record it declined
  // stays in the ring).
  size_t consume(size_t max_records,
                 const std::function<bool(std::span<const uint8_t>)>& fn) {
    std::lock_guard<std::mutex> lk(consume_mu_);
    size_t delivered = 0;
    uint64_t h = head_.load(std::memory_order_relaxed);
    const uint64_t t = tail_.load(std::memory_order_acquire);
    while (h < t && delivered < max_records) {
      const uint64_t phys = h & mask_;
      std::span<const uint8_t> rec(data_.get() + phys, size_t(t - h));
      DecodedResponse resp;
      if (decode_response(rec, &resp) != Status::kSuccess) break;
      if (resp.header.flags & kResponseFlagPad) {
        h += resp.consumed;
        continue;
      }
      if (!fn(rec.first(resp.consumed))) break;
      h += resp.consumed;
      ++delivered;
    }
    head_.store(h, std::memory_order_release);
    return delivered;
  }

 private:
  void write_pad(uint64_t phys, uint64_t size) {
    FileResponseHeader pad;
    pad.status = Status::kSuccess;
    pad.flags = kResponseFlagPad;
    pad.total_record_size = uint32_t(size);
    write_response_header(pad, data_.get() + phys);
  }

  const size_t capacity_;
  const size_t mask_;
  std::unique_ptr<uint8_t[]> data_;
  detail::CursorLine pad0_;
  std::atomic<uint64_t> head_{0};
  detail::CursorLine pad1_;
  std::atomic<uint64_t> tail_{0};
  std::mutex consume_mu_;
};

// ---------------------------------------------------------------------------
// Baseline rings, bench/test only.
// ---------------------------------------------------------------------------

// FaRM-style ring: fixed 8-byte slots, a completion flag per slot that the
// consumer clears to release space. No batching.
class FarmRing {
 public:
  explicit FarmRing(size_t slots = 4096)
      : slots_(slots), mask_(slots - 1), ring_(new Slot[slots]) {
    assert((slots_ & mask_) == 0);
  }

  RingResult insert(uint64_t value) {
    for (;;) {
      uint64_t t = tail_.load(std::memory_order_acquire);
      if (t - head_.load(std::memory_order_acquire) >= slots_) {
        return RingResult::kRetry;
      }
      if (tail_.compare_exchange_weak(t, t + 1, std::memory_order_acq_rel,
                                      std::memory_order_relaxed)) {
        Slot& s = ring_[t & mask_];
        s.value.store(value, std::memory_order_relaxed);
        s.flag.store(1, std::memory_order_release);
        return RingResult::kOk;
      }
    }
  }

  // One message per call; the consumer clears the flag to release the slot.
  RingResult consume(uint64_t* out) {
    uint64_t h = head_.load(std::memory_order_relaxed);
    Slot& s = ring_[h & mask_];
    if (s.flag.load(std::memory_order_acquire) == 0) return RingResult::kEmpty;
    *out = s.value.load(std::memory_order_relaxed);
    s.flag.store(0, std::memory_order_release);
    head_.store(h + 1, std::memory_order_release);
    return RingResult::kOk;
  }

 private:
  struct alignas(64) Slot {
    std::atomic<uint64_t> value{0};
    std::atomic<uint8_t> flag{0};
  };
  const size_t slots_;
  const size_t mask_;
  std::unique_ptr<Slot[]> ring_;
  detail::CursorLine padh_;
  std::atomic<uint64_t> head_{0};
  detail::CursorLine padt_;
  std::atomic<uint64_t> tail_{0};
};

// Lock-based ring: producers serialize on a mutex; batch consumption like
// the progress ring.
class LockedRing {
 public:
  explicit LockedRing(const RingConfig& cfg = {})
      : capacity_(cfg.capacity),
        mask_(cfg.capacity - 1),
        max_progress_(cfg.max_progress),
        data_(new uint8_t[cfg.capacity]) {}

  RingResult insert(std::span<const uint8_t> record) {
    const uint64_t n = record.size();
    if (n > max_progress_ || n % kRecordAlign != 0) {
      return RingResult::kRecordTooLarge;
    }
    std::lock_guard<std::mutex> lk(mu_);
    uint64_t t = tail_.load(std::memory_order_relaxed);
    uint64_t h = head_.load(std::memory_order_acquire);
    uint64_t phys = t & mask_;
    uint64_t to_end = capacity_ - phys;
    if (to_end < n) {
      if (t - h + to_end + n > max_progress_) return RingResult::kRetry;
      FileRequestHeader pad;
      pad.op_kind = OpKind::kPad;
      pad.total_record_size = uint32_t(to_end);
      write_request_header(pad, data_.get() + phys);
      t += to_end;
      phys = t & mask_;
    } else if (t - h + n > max_progress_) {
      return RingResult::kRetry;
    }
    std::memcpy(data_.get() + phys, record.data(), n);
    tail_.store(t + n, std::memory_order_release);
    return RingResult::kOk;
  }

  RingResult consume_batch(RequestRing::Batch* out) {
    uint64_t h = head_.load(std::memory_order_relaxed);
    uint64_t t = tail_.load(std::memory_order_acquire);
    if (t == h) return RingResult::kEmpty;
    out->begin = h;
    out->end = t;
    uint64_t ph = h & mask_, pt = t & mask_;
    if (pt > ph) {
      out->spans[0] = {data_.get() + ph, size_t(t - h)};
      out->span_count = 1;
    } else {
      out->spans[0] = {data_.get() + ph, size_t(capacity_ - ph)};
      out->spans[1] = {data_.get(), size_t(pt)};
      out->span_count = pt == 0 ? 1 : 2;
    }
    return RingResult::kOk;
  }

  void release(uint64_t new_head) {
    head_.store(new_head, std::memory_order_release);
  }

 private:
  const size_t capacity_;
  const size_t mask_;
  const size_t max_progress_;
  std::unique_ptr<uint8_t[]> data_;
  std::mutex mu_;
  detail::CursorLine padh_;
  std::atomic<uint64_t> head_{0};
  detail::CursorLine padt_;
  std::atomic<uint64_t> tail_{0};
};

}  // namespace dds
