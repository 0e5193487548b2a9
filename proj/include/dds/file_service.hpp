#pragma once

// DPU-side file service: segment-mapped files over a simulated block device,
// zero-copy request execution, pre-allocated response slots, and three-tail
// ordered delivery. Also the single writer of the offload cache table via
// the plugin hooks.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dds/block_device.hpp"
#include "dds/cache_table.hpp"
#include "dds/copy_audit.hpp"
#include "dds/dma.hpp"
#include "dds/plugin.hpp"
#include "dds/ring.hpp"
#include "dds/status.hpp"
#include "dds/wire.hpp"

namespace dds {

struct BlockSpan {
  uint64_t device_offset = 0;  // bytes from device start
  uint32_t length = 0;
};

// ---------------------------------------------------------------------------
// Segment allocator
// ---------------------------------------------------------------------------

class SegmentAllocator {
 public:
  static constexpr uint32_t kReservedSegment = 0;  // metadata home

  SegmentAllocator(size_t segment_size, size_t device_bytes)
      : segment_size_(segment_size),
        total_(uint32_t(device_bytes / segment_size)),
        used_(total_, false) {
    used_[kReservedSegment] = true;
  }

  size_t segment_size() const { return segment_size_; }
  uint32_t total_segments() const { return total_; }

  std::optional<uint32_t> allocate() {
    for (uint32_t i = 0; i < total_; ++i) {
      if (!used_[i]) {
        used_[i] = true;
        ++allocated_;
        return i;
      }
    }
    return std::nullopt;
  }

  void release(uint32_t seg) {
    if (seg != kReservedSegment && used_[seg]) {
      used_[seg] = false;
      --allocated_;
    }
  }

  void mark_allocated(uint32_t seg) {
    if (!used_[seg]) {
      used_[seg] = true;
      ++allocated_;
    }
  }

  bool is_allocated(uint32_t seg) const { return used_[seg]; }
  uint32_t allocated_count() const { return allocated_; }
  uint32_t free_count() const { return total_ - allocated_ - 1; }

 private:
  size_t segment_size_;
  uint32_t total_;
  std::vector<bool> used_;
  uint32_t allocated_ = 0;  // excludes the reserved segment
};

// ---------------------------------------------------------------------------
// Response buffer with TailA / TailB / TailC
// ---------------------------------------------------------------------------

class ResponseBuffer {
 public:
  explicit ResponseBuffer(size_t capacity)
      : capacity_(capacity), mask_(capacity - 1), data_(capacity, 0) {
    assert((capacity_ & mask_) == 0);
  }

  // Stable handle for completion callbacks.
  using SlotId = uint64_t;

  // Reserves an in-order response slot. data_len is the payload size (0 for
  // header-only responses). Fails with kBackpressure when occupancy would
  // exceed capacity; nothing moves in that case.
  Status preallocate(uint64_t request_id, uint32_t data_len, SlotId* out) {
    const uint64_t size = response_record_size(data_len);
    uint64_t pad = 0;
    uint64_t phys = tail_a_ & mask_;
    if (capacity_ - phys < size) pad = capacity_ - phys;
    if (tail_a_ - tail_c_ + pad + size > capacity_) return Status::kBackpressure;
    if (pad) push_pad(pad);
    Slot s;
    s.start = tail_a_;
    s.size = uint32_t(size);
    s.request_id = request_id;
    s.id = next_slot_id_++;
    FileResponseHeader h;
    h.request_id = request_id;
    h.length = data_len;
    h.total_record_size = uint32_t(size);
    h.status = Status::kPending;
    write_response_header(h, data_.data() + (s.start & mask_));
    slots_.push_back(s);
    tail_a_ += size;
    *out = s.id;
    return Status::kSuccess;
  }

  std::span<uint8_t> slot_data(SlotId id) {
    Slot& s = slot(id);
    return {data_.data() + (s.start & mask_) + kResponseHeaderSize,
            s.size - kResponseHeaderSize};
  }

  // Completion dispatcher path; may run on another thread of control than
  // the scan/deliver loop, hence the atomic byte.
  void set_status(SlotId id, Status st) {
    Slot& s = slot(id);
    std::atomic_ref<uint8_t> b(data_[(s.start & mask_) + kResponseStatusOffset]);
    b.store(uint8_t(st), std::memory_order_release);
  }

  Status slot_status(SlotId id) const {
    ResponseBuffer* self = const_cast<ResponseBuffer*>(this);
    const Slot& s = self->slot(id);
    std::atomic_ref<uint8_t> b(
        self->data_[(s.start & mask_) + kResponseStatusOffset]);
    return Status(b.load(std::memory_order_acquire));
  }

  // Advances TailB over contiguous completed slots; a pending slot blocks
  // everything behind it.
  void scan_completions() {
    for (Slot& s : slots_) {
      if (s.start < tail_b_) continue;
      std::atomic_ref<uint8_t> b(
          data_[(s.start & mask_) + kResponseStatusOffset]);
      if (Status(b.load(std::memory_order_acquire)) == Status::kPending) break;
      tail_b_ = s.start + s.size;
    }
  }

  uint64_t buffered_bytes() const { return tail_b_ - tail_c_; }
  uint64_t occupancy() const { return tail_a_ - tail_c_; }
  uint64_t tail_a() const { return tail_a_; }
  uint64_t tail_b() const { return tail_b_; }
  uint64_t tail_c() const { return tail_c_; }
  size_t capacity() const { return capacity_; }

  // Channel writes covering [TailC, TailB), chunked so a span larger than
  // the ring's free space still drains incrementally. Buffer pads are
  // dropped here; the ring inserts its own pads as needed. Returns bytes
  // retired; stops early when the ring has no room (TailC stays put for the
  // blocked remainder, the caller retries later).
  size_t deliver(ResponseRing* ring, DmaChannel* channel) {
    size_t retired_total = 0;
    const size_t chunk_limit = ring->capacity() / 2;
    while (tail_b_ > tail_c_) {
      std::vector<std::span<const uint8_t>> records;
      uint64_t chunk_end = tail_c_;
      size_t chunk_bytes = 0;
      for (const Slot& s : slots_) {
        if (s.start >= tail_b_) break;
        if (chunk_bytes > 0 && chunk_bytes + s.size > chunk_limit) break;
        if (!s.pad) {
          records.push_back({data_.data() + (s.start & mask_), s.size});
        }
        chunk_end = s.start + s.size;
        chunk_bytes += s.size;
      }
      if (!records.empty() &&
          ring->insert_batch(records, channel) != RingResult::kOk) {
        break;
      }
      while (!slots_.empty() && slots_.front().start < chunk_end) {
        slots_.pop_front();
      }
      retired_total += size_t(chunk_end - tail_c_);
      tail_c_ = chunk_end;
    }
    return retired_total;
  }

 private:
  struct Slot {
    uint64_t start = 0;
    uint32_t size = 0;
    bool pad = false;
    uint64_t request_id = 0;
    SlotId id = 0;
  };

  Slot& slot(SlotId id) {
    // Slots retire strictly in order, so the deque is indexable by id.
    assert(!slots_.empty());
    uint64_t base = slots_.front().id;
    assert(id >= base && id - base < slots_.size());
    return slots_[size_t(id - base)];
  }

  void push_pad(uint64_t size) {
    Slot s;
    s.start = tail_a_;
    s.size = uint32_t(size);
    s.pad = true;
    s.id = next_slot_id_++;
    FileResponseHeader h;
    h.total_record_size = uint32_t(size);
    h.status = Status::kSuccess;
    h.flags = kResponseFlagPad;
    write_response_header(h, data_.data() + (s.start & mask_));
    slots_.push_back(s);
    tail_a_ += size;
  }

  const size_t capacity_;
  const size_t mask_;
  std::vector<uint8_t> data_;
  std::deque<Slot> slots_;  // every slot in [TailC, TailA), in order
  uint64_t tail_a_ = 0;
  uint64_t tail_b_ = 0;
  uint64_t tail_c_ = 0;
  SlotId next_slot_id_ = 0;
};

// ---------------------------------------------------------------------------
// Persistent metadata image
// ---------------------------------------------------------------------------

// Reserved-segment layout: a one-block superblock naming the active half,
// then two image halves. persist() writes the inactive half first and flips
// the superblock last, so a torn persist leaves the previous image intact.

constexpr uint64_t kMetaMagic = 0x31444d5346534444ull;  // "DDSFSMD1"
constexpr uint32_t kMetaVersion = 1;
constexpr size_t kMaxFileName = 63;

struct DirectoryMeta {
  uint32_t dir_id = 0;
  std::string name;
};

struct FileMeta {
  uint32_t file_id = 0;
  uint32_t dir_id = 0;
  std::string name;
  uint64_t size = 0;
  std::vector<uint32_t> segments;
};

struct MetadataImage {
  std::vector<DirectoryMeta> dirs;
  std::vector<FileMeta> files;
  std::vector<uint8_t> bitmap;  // one byte per segment, nonzero = allocated
  uint32_t next_dir_id = 1;
  uint32_t next_file_id = 1;

  std::vector<uint8_t> serialize() const {
    std::vector<uint8_t> out;
    auto put32 = [&](uint32_t v) {
      size_t at = out.size();
      out.resize(at + 4);
      detail::put_u32(out.data() + at, v);
    };
    auto put64 = [&](uint64_t v) {
      size_t at = out.size();
      out.resize(at + 8);
      detail::put_u64(out.data() + at, v);
    };
    auto put_name = [&](const std::string& n) {
      size_t at = out.size();
      out.resize(at + kMaxFileName + 1, 0);
      out[at] = uint8_t(n.size());
      std::memcpy(out.data() + at + 1, n.data(), n.size());
    };
    put32(uint32_t(dirs.size()));
    for (const auto& d : dirs) {
      put32(d.dir_id);
      put_name(d.name);
    }
    put32(uint32_t(files.size()));
    for (const auto& f : files) {
      put32(f.file_id);
      put32(f.dir_id);
      put_name(f.name);
      put64(f.size);
      put32(uint32_t(f.segments.size()));
      for (uint32_t s : f.segments) put32(s);
    }
    put32(uint32_t(bitmap.size()));
    out.insert(out.end(), bitmap.begin(), bitmap.end());
    put32(next_dir_id);
    put32(next_file_id);
    return out;
  }

  static Status parse(std::span<const uint8_t> in, MetadataImage* out) {
    size_t at = 0;
    auto need = [&](size_t n) { return at + n <= in.size(); };
    auto get32 = [&](uint32_t* v) {
      if (!need(4)) return false;
      *v = detail::get_u32(in.data() + at);
      at += 4;
      return true;
    };
    auto get64 = [&](uint64_t* v) {
      if (!need(8)) return false;
      *v = detail::get_u64(in.data() + at);
      at += 8;
      return true;
    };
    auto get_name = [&](std::string* n) {
      if (!need(kMaxFileName + 1)) return false;
      uint8_t len = in[at];
      if (len > kMaxFileName) return false;
      n->assign(reinterpret_cast<const char*>(in.data() + at + 1), len);
      at += kMaxFileName + 1;
      return true;
    };
    uint32_t n = 0;
    if (!get32(&n)) return Status::kCorruptMetadata;
    out->dirs.resize(n);
    for (auto& d : out->dirs) {
      if (!get32(&d.dir_id) || !get_name(&d.name)) return Status::kCorruptMetadata;
    }
    if (!get32(&n)) return Status::kCorruptMetadata;
    out->files.resize(n);
    for (auto& f : out->files) {
      uint32_t nsegs = 0;
      if (!get32(&f.file_id) || !get32(&f.dir_id) || !get_name(&f.name) ||
          !get64(&f.size) || !get32(&nsegs)) {
        return Status::kCorruptMetadata;
      }
      f.segments.resize(nsegs);
      for (auto& s : f.segments) {
        if (!get32(&s)) return Status::kCorruptMetadata;
      }
    }
    if (!get32(&n) || !need(n)) return Status::kCorruptMetadata;
    out->bitmap.assign(in.begin() + long(at), in.begin() + long(at + n));
    at += n;
    if (!get32(&out->next_dir_id) || !get32(&out->next_file_id)) {
      return Status::kCorruptMetadata;
    }
    return Status::kSuccess;
  }
};

inline uint64_t fnv1a64(std::span<const uint8_t> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// File service
// ---------------------------------------------------------------------------

struct FileServiceConfig {
  size_t segment_size = 1u << 20;
  size_t response_buffer_capacity = 0;  // 0: 2x the response-ring capacity
  size_t delivery_batch_bytes = 8192;
  SimTime flush_deadline_ns = 50'000;
  bool copying_mode = false;  // staged copies instead of zero-copy, for audit
};

class FileService {
 public:
  FileService(SimBlockDevice* device, RequestRing* req_ring,
              ResponseRing* resp_ring, DmaChannel* channel,
              const FileServiceConfig& cfg = {})
      : cfg_(cfg),
        device_(device),
        resp_ring_(resp_ring),
        channel_(channel),
        fetcher_(req_ring, channel),
        resp_buf_(cfg.response_buffer_capacity
                      ? cfg.response_buffer_capacity
                      : 2 * resp_ring->capacity()),
        alloc_(cfg.segment_size, device->capacity_bytes()) {
    assert(cfg_.segment_size % device->block_size() == 0);
    assert(device->capacity_bytes() >= 2 * cfg_.segment_size);
    device_pollable_ = !device->manual_completion();
  }

  void set_offload(OffloadPlugin* plugin, CacheTable* table) {
    plugin_ = plugin;
    table_ = table;
  }
  void set_copy_audit(CopyAudit* audit) { audit_ = audit; }

  const SegmentAllocator& allocator() const { return alloc_; }
  SimBlockDevice* device() { return device_; }
  const ResponseBuffer& response_buffer() const { return resp_buf_; }

  // --- Control plane (invoked synchronously, D-H1 channel) ---

  Status create_directory(const std::string& name, uint32_t* dir_id) {
    if (name.empty() || name.size() > kMaxFileName) return Status::kConfigInvalid;
    for (const auto& d : dirs_) {
      if (d.second.name == name) return Status::kNameExists;
    }
    uint32_t id = next_dir_id_++;
    dirs_[id] = {id, name};
    if (dir_id) *dir_id = id;
    return Status::kSuccess;
  }

  Status create_file(uint32_t dir_id, const std::string& name,
                     uint32_t* file_id) {
    if (name.empty() || name.size() > kMaxFileName) return Status::kConfigInvalid;
    if (!dirs_.count(dir_id)) return Status::kNotFound;
    for (const auto& f : files_) {
      if (f.second.dir_id == dir_id && f.second.name == name) {
        return Status::kNameExists;
      }
    }
    uint32_t id = next_file_id_++;
    FileMeta m;
    m.file_id = id;
    m.dir_id = dir_id;
    m.name = name;
    files_[id] = std::move(m);
    if (file_id) *file_id = id;
    return Status::kSuccess;
  }

  const FileMeta* find_file(uint32_t file_id) const {
    auto it = files_.find(file_id);
    return it == files_.end() ? nullptr : &it->second;
  }
  size_t file_count() const { return files_.size(); }
  size_t directory_count() const { return dirs_.size(); }

  // --- Address translation ---

  Status translate(uint32_t file_id, uint64_t offset, uint64_t length,
                   bool for_write, std::vector<BlockSpan>* out) {
    auto it = files_.find(file_id);
    if (it == files_.end()) return Status::kNotFound;
    FileMeta& f = it->second;
    const uint64_t seg = cfg_.segment_size;
    if (for_write) {
      while (f.segments.size() * seg < offset + length) {
        auto s = alloc_.allocate();
        if (!s) return Status::kNoSpace;
        f.segments.push_back(*s);
      }
    } else if (offset + length > f.size) {
      return Status::kOutOfRange;
    }
    out->clear();
    uint64_t at = offset;
    uint64_t remaining = length;
    while (remaining > 0) {
      uint64_t seg_idx = at / seg;
      uint64_t within = at % seg;
      uint64_t take = std::min(remaining, seg - within);
      out->push_back({uint64_t(f.segments[size_t(seg_idx)]) * seg + within,
                      uint32_t(take)});
      at += take;
      remaining -= take;
    }
    return Status::kSuccess;
  }

  // --- Metadata persistence ---

  Status persist_metadata() {
    MetadataImage img;
    for (const auto& d : dirs_) img.dirs.push_back(d.second);
    for (const auto& f : files_) img.files.push_back(f.second);
    img.bitmap.resize(alloc_.total_segments());
    for (uint32_t i = 0; i < alloc_.total_segments(); ++i) {
      img.bitmap[i] = alloc_.is_allocated(i) ? 1 : 0;
    }
    img.next_dir_id = next_dir_id_;
    img.next_file_id = next_file_id_;
    std::vector<uint8_t> body = img.serialize();

    const size_t block = device_->block_size();
    const size_t half = half_bytes();
    if (body.size() > half) return Status::kNoSpace;
    uint32_t target = 1 - active_half_;
    Status s = device_->sync_write(half_offset(target), body);
    if (s != Status::kSuccess) return s;
    std::vector<uint8_t> super(block, 0);
    detail::put_u64(super.data(), kMetaMagic);
    detail::put_u32(super.data() + 8, kMetaVersion);
    detail::put_u32(super.data() + 12, target);
    detail::put_u64(super.data() + 16, uint64_t(cfg_.segment_size));
    detail::put_u32(super.data() + 24, uint32_t(block));
    detail::put_u32(super.data() + 28, uint32_t(body.size()));
    detail::put_u64(super.data() + 32, fnv1a64(body));
    s = device_->sync_write(0, super);
    if (s != Status::kSuccess) return s;
    active_half_ = target;
    return Status::kSuccess;
  }

  Status load_metadata() {
    std::vector<uint8_t> super(device_->block_size());
    Status s = device_->sync_read(0, super);
    if (s != Status::kSuccess) return s;
    if (detail::get_u64(super.data()) != kMetaMagic ||
        detail::get_u32(super.data() + 8) != kMetaVersion ||
        detail::get_u64(super.data() + 16) != cfg_.segment_size) {
      return Status::kCorruptMetadata;
    }
    uint32_t half = detail::get_u32(super.data() + 12);
    uint32_t len = detail::get_u32(super.data() + 28);
    uint64_t hash = detail::get_u64(super.data() + 32);
    if (half > 1 || len > half_bytes()) return Status::kCorruptMetadata;
    std::vector<uint8_t> body(len);
    s = device_->sync_read(half_offset(half), body);
    if (s != Status::kSuccess) return s;
    if (fnv1a64(body) != hash) return Status::kCorruptMetadata;
    MetadataImage img;
    s = MetadataImage::parse(body, &img);
    if (s != Status::kSuccess) return s;
    if (img.bitmap.size() != alloc_.total_segments()) {
      return Status::kCorruptMetadata;
    }
    dirs_.clear();
    files_.clear();
    alloc_ = SegmentAllocator(cfg_.segment_size, device_->capacity_bytes());
    for (const auto& d : img.dirs) dirs_[d.dir_id] = d;
    for (const auto& f : img.files) files_[f.file_id] = f;
    for (uint32_t i = 0; i < img.bitmap.size(); ++i) {
      if (img.bitmap[i]) alloc_.mark_allocated(i);
    }
    next_dir_id_ = img.next_dir_id;
    next_file_id_ = img.next_file_id;
    active_half_ = detail::get_u32(super.data() + 12);
    return Status::kSuccess;
  }

  // Initializes an empty image on a fresh device.
  Status format() {
    dirs_.clear();
    files_.clear();
    alloc_ = SegmentAllocator(cfg_.segment_size, device_->capacity_bytes());
    next_dir_id_ = 1;
    next_file_id_ = 1;
    return persist_metadata();
  }

  // --- Data plane ---

  struct StepReport {
    size_t fetched = 0;        // requests decoded this step
    size_t submitted = 0;      // device submissions issued
    size_t delivered_bytes = 0;
    bool backpressure = false;
  };

  // One iteration: dispatch device completions, fetch a batch if the
  // previous one fully drained past the overlap window, execute queued
  // requests, then scan and deliver.
  StepReport step(SimTime now) {
    StepReport rep;
    if (device_pollable_) device_->poll(now);
    maybe_fetch(&rep);
    while (!backlog_.empty()) {
      PendingReq& r = backlog_.front();
      Status s = execute_one(r, now, &rep);
      if (s == Status::kBackpressure) {
        rep.backpressure = true;
        break;
      }
      retire_window_ref(r.window);
      backlog_.pop_front();
    }
    if (device_pollable_) device_->poll(now);
    resp_buf_.scan_completions();
    rep.delivered_bytes += maybe_deliver(now);
    return rep;
  }

  // For tests that drive device completions by hand.
  void set_device_pollable(bool v) { device_pollable_ = v; }

  // Scan plus threshold/deadline delivery, without fetching. Used by the
  // completion side of the loop.
  size_t scan_and_deliver(SimTime now) {
    resp_buf_.scan_completions();
    return maybe_deliver(now);
  }

  // DPU-internal read on behalf of the offload engine; no response slot.
  Status submit_engine_read(const ReadOp& op, std::span<uint8_t> dst,
                            std::function<void(Status)> done, SimTime now) {
    if (dst.size() < op.size) return Status::kLengthMismatch;
    std::vector<BlockSpan> spans;
    Status s = translate(op.file_id, op.offset, op.size, false, &spans);
    if (s != Status::kSuccess) return s;
    auto state = std::make_shared<IoState>();
    state->remaining = spans.size();
    uint64_t at = 0;
    for (const BlockSpan& sp : spans) {
      std::span<uint8_t> piece = dst.subspan(size_t(at), sp.length);
      if (cfg_.copying_mode) {
        // Staged bounce buffer; counted so the audit can prove the default
        // path never does this.
        auto bounce = std::make_shared<std::vector<uint8_t>>(sp.length);
        device_->submit_read(
            sp.device_offset, {bounce->data(), bounce->size()},
            [this, piece, bounce, state, done](Status st) {
              std::memcpy(piece.data(), bounce->data(), bounce->size());
              if (audit_) audit_->engine_read_path.fetch_add(1);
              finish_io(state, st, done);
            },
            now);
      } else {
        device_->submit_read(sp.device_offset, piece,
                             [state, done, this](Status st) {
                               finish_io(state, st, done);
                             },
                             now);
      }
      at += sp.length;
    }
    return Status::kSuccess;
  }

  uint64_t requests_served() const { return requests_served_; }

 private:
  struct PendingReq {
    FileRequestHeader header;
    std::span<const uint8_t> payload;  // aliases the fetch buffer for writes
    uint64_t window = 0;
  };
  struct FetchWindow {
    uint64_t begin = 0;
    uint32_t refs = 0;  // queued requests + outstanding write I/O
  };
  struct IoState {
    size_t remaining = 0;
    bool failed = false;
  };

  size_t half_bytes() const {
    size_t block = device_->block_size();
    size_t usable = cfg_.segment_size - block;
    return (usable / 2 / block) * block;
  }
  uint64_t half_offset(uint32_t half) const {
    return device_->block_size() + uint64_t(half) * half_bytes();
  }

  // The fetch buffer mirrors ring offsets, so a fetch must not lap bytes
  // still referenced by queued requests or in-flight write sources.
  bool fetch_window_open() const {
    uint64_t oldest =
        windows_.empty() ? fetcher_.head() : windows_.begin()->second.begin;
    return fetcher_.head() - oldest <=
           fetcher_.buffer_size() - fetcher_.ring_max_progress();
  }

  void maybe_fetch(StepReport* rep) {
    if (!backlog_.empty() || !fetch_window_open()) return;
    DmaFetcher::Fetched batch;
    if (fetcher_.fetch(&batch) != RingResult::kOk) return;
    uint64_t wid = next_window_++;
    FetchWindow w;
    w.begin = batch.begin;
    for_each_request(batch, [&](const DecodedRequest& req) {
      PendingReq p;
      p.header = req.header;
      p.payload = req.payload;
      p.window = wid;
      backlog_.push_back(p);
      ++w.refs;
      ++rep->fetched;
    });
    if (w.refs) windows_[wid] = w;
  }

  void retire_window_ref(uint64_t wid) {
    auto it = windows_.find(wid);
    if (it == windows_.end()) return;
    if (--it->second.refs == 0) windows_.erase(it);
  }

  void finish_io(const std::shared_ptr<IoState>& state, Status st,
                 const std::function<void(Status)>& done) {
    if (st != Status::kSuccess) state->failed = true;
    if (--state->remaining == 0) {
      done(state->failed ? Status::kIoError : Status::kSuccess);
    }
  }

  // Executes one fetched request. kBackpressure means "retry this request
  // later, nothing happened"; any other status means it was disposed of.
  Status execute_one(PendingReq& r, SimTime now, StepReport* rep) {
    switch (r.header.op_kind) {
      case OpKind::kRead:
      case OpKind::kReadScatter:
        return execute_read(r, now, rep);
      case OpKind::kWrite:
      case OpKind::kWriteGather:
        return execute_write(r, now, rep);
      default:
        return respond_error(r, Status::kBadOpKind);
    }
  }

  Status respond_error(const PendingReq& r, Status st) {
    ResponseBuffer::SlotId slot;
    Status s = resp_buf_.preallocate(r.header.request_id, 0, &slot);
    if (s != Status::kSuccess) return s;  // backpressure
    resp_buf_.set_status(slot, st);
    ++requests_served_;
    return Status::kSuccess;
  }

  Status execute_read(PendingReq& r, SimTime now, StepReport* rep) {
    if (plugin_ && table_) {
      invalidate_keys_.clear();
      plugin_->on_host_read(
          {r.header.file_id, r.header.offset, r.header.length},
          &invalidate_keys_);
      for (uint64_t k : invalidate_keys_) table_->erase(k);
    }
    std::vector<BlockSpan> spans;
    Status s =
        translate(r.header.file_id, r.header.offset, r.header.length, false,
                  &spans);
    if (s != Status::kSuccess) return respond_error(r, s);
    ResponseBuffer::SlotId slot;
    s = resp_buf_.preallocate(r.header.request_id, r.header.length, &slot);
    if (s != Status::kSuccess) return s;
    std::span<uint8_t> dst = resp_buf_.slot_data(slot);
    auto state = std::make_shared<IoState>();
    state->remaining = spans.size();
    uint64_t at = 0;
    for (const BlockSpan& sp : spans) {
      // The pre-allocated slot's data area is the I/O destination; the
      // payload is never staged anywhere else.
      std::span<uint8_t> piece = dst.subspan(size_t(at), sp.length);
      if (cfg_.copying_mode) {
        auto bounce = std::make_shared<std::vector<uint8_t>>(sp.length);
        device_->submit_read(
            sp.device_offset, {bounce->data(), bounce->size()},
            [this, piece, bounce, state, slot](Status st) {
              std::memcpy(piece.data(), bounce->data(), bounce->size());
              if (audit_) audit_->device_to_response.fetch_add(1);
              read_done(state, st, slot);
            },
            now);
      } else {
        device_->submit_read(sp.device_offset, piece,
                             [this, state, slot](Status st) {
                               read_done(state, st, slot);
                             },
                             now);
      }
      at += sp.length;
      ++rep->submitted;
    }
    if (spans.empty()) resp_buf_.set_status(slot, Status::kSuccess);
    ++requests_served_;
    return Status::kSuccess;
  }

  void read_done(const std::shared_ptr<IoState>& state, Status st,
                 ResponseBuffer::SlotId slot) {
    if (st != Status::kSuccess) state->failed = true;
    if (--state->remaining == 0) {
      resp_buf_.set_status(slot,
                           state->failed ? Status::kIoError : Status::kSuccess);
    }
  }

  Status execute_write(PendingReq& r, SimTime now, StepReport* rep) {
    if (r.payload.size() != r.header.length) {
      return respond_error(r, Status::kLengthMismatch);
    }
    std::vector<BlockSpan> spans;
    Status s = translate(r.header.file_id, r.header.offset, r.header.length,
                         true, &spans);
    if (s != Status::kSuccess) return respond_error(r, s);
    ResponseBuffer::SlotId slot;
    s = resp_buf_.preallocate(r.header.request_id, 0, &slot);
    if (s != Status::kSuccess) return s;
    FileMeta& f = files_[r.header.file_id];
    f.size = std::max(f.size, r.header.offset + uint64_t(r.header.length));
    auto state = std::make_shared<IoState>();
    state->remaining = spans.empty() ? 1 : spans.size();
    uint64_t wid = r.window;
    auto it = windows_.find(wid);
    if (it != windows_.end()) it->second.refs += uint32_t(spans.size());
    WriteOp op{r.header.file_id, r.header.offset, r.header.length, r.payload};
    uint64_t at = 0;
    for (const BlockSpan& sp : spans) {
      // Source points straight into the fetched request batch.
      std::span<const uint8_t> src = r.payload.subspan(size_t(at), sp.length);
      auto done = [this, state, slot, wid, op](Status st) {
        write_done(state, st, slot, wid, op);
      };
      if (cfg_.copying_mode) {
        auto bounce =
            std::make_shared<std::vector<uint8_t>>(src.begin(), src.end());
        if (audit_) audit_->host_write_to_device.fetch_add(1);
        device_->submit_write(sp.device_offset,
                              {bounce->data(), bounce->size()},
                              [bounce, done](Status st) { done(st); }, now);
      } else {
        device_->submit_write(sp.device_offset, src, done, now);
      }
      at += sp.length;
      ++rep->submitted;
    }
    if (spans.empty()) write_done(state, Status::kSuccess, slot, wid, op);
    ++requests_served_;
    return Status::kSuccess;
  }

  void write_done(const std::shared_ptr<IoState>& state, Status st,
                  ResponseBuffer::SlotId slot, uint64_t wid,
                  const WriteOp& op) {
    if (st != Status::kSuccess) state->failed = true;
    retire_window_ref(wid);
    if (--state->remaining != 0) return;
    if (state->failed) {
      resp_buf_.set_status(slot, Status::kIoError);
      return;
    }
    if (plugin_ && table_) {
      cache_updates_.clear();
      plugin_->on_durable_write(op, &cache_updates_);
      for (const CacheUpdate& u : cache_updates_) {
        table_->insert(u.key, u.item);
      }
    }
    resp_buf_.set_status(slot, Status::kSuccess);
  }

  size_t maybe_deliver(SimTime now) {
    uint64_t buffered = resp_buf_.buffered_bytes();
    if (buffered == 0) {
      buffered_since_ = 0;
      return 0;
    }
    if (buffered_since_ == 0) buffered_since_ = now ? now : 1;
    bool due = buffered >= cfg_.delivery_batch_bytes ||
               now - buffered_since_ >= cfg_.flush_deadline_ns;
    if (!due) return 0;
    size_t n = resp_buf_.deliver(resp_ring_, channel_);
    if (n && resp_buf_.buffered_bytes() == 0) buffered_since_ = 0;
    return n;
  }

  FileServiceConfig cfg_;
  SimBlockDevice* device_;
  ResponseRing* resp_ring_;
  DmaChannel* channel_;
  DmaFetcher fetcher_;
  ResponseBuffer resp_buf_;
  SegmentAllocator alloc_;

  std::map<uint32_t, DirectoryMeta> dirs_;
  std::map<uint32_t, FileMeta> files_;
  uint32_t next_dir_id_ = 1;
  uint32_t next_file_id_ = 1;
  uint32_t active_half_ = 1;  // first persist lands in half 0

  std::deque<PendingReq> backlog_;
  std::map<uint64_t, FetchWindow> windows_;
  uint64_t next_window_ = 1;
  SimTime buffered_since_ = 0;
  bool device_pollable_ = true;

  OffloadPlugin* plugin_ = nullptr;
  CacheTable* table_ = nullptr;
  CopyAudit* audit_ = nullptr;
  std::vector<uint64_t> invalidate_keys_;
  std::vector<CacheUpdate> cache_updates_;

  uint64_t requests_served_ = 0;
};

// fsck-style inspection of a raw device image.
inline Status describe_image(std::span<const uint8_t> image, size_t block_size,
                             std::string* report) {
  std::ostringstream os;
  if (image.size() < block_size) return Status::kCorruptMetadata;
  if (detail::get_u64(image.data()) != kMetaMagic ||
      detail::get_u32(image.data() + 8) != kMetaVersion) {
    return Status::kCorruptMetadata;
  }
  uint64_t segment_size = detail::get_u64(image.data() + 16);
  uint32_t half = detail::get_u32(image.data() + 12);
  uint32_t len = detail::get_u32(image.data() + 28);
  uint64_t hash = detail::get_u64(image.data() + 32);
  size_t half_bytes = ((segment_size - block_size) / 2 / block_size) * block_size;
  uint64_t off = block_size + uint64_t(half) * half_bytes;
  if (half > 1 || len > half_bytes || off + len > image.size()) {
    return Status::kCorruptMetadata;
  }
  std::span<const uint8_t> body = image.subspan(size_t(off), len);
  if (fnv1a64(body) != hash) return Status::kCorruptMetadata;
  MetadataImage img;
  Status s = MetadataImage::parse(body, &img);
  if (s != Status::kSuccess) return s;
  os << "segment_size " << segment_size << " block_size " << block_size
     << " active_half " << half << "\n";
  os << "directories " << img.dirs.size() << "\n";
  for (const auto& d : img.dirs) {
    os << "  dir " << d.dir_id << " \"" << d.name << "\"\n";
  }
  os << "files " << img.files.size() << "\n";
  for (const auto& f : img.files) {
    os << "  file " << f.file_id << " dir " << f.dir_id << " \"" << f.name
       << "\" size " << f.size << " segments [";
    for (size_t i = 0; i < f.segments.size(); ++i) {
      os << (i ? "," : "") << f.segments[i];
    }
    os << "]\n";
  }
  size_t used = 0;
  for (uint8_t b : img.bitmap) used += b ? 1 : 0;
  os << "segments " << img.bitmap.size() << " allocated " << used
     << " (including reserved)\n";
  *report = os.str();
  return Status::kSuccess;
}

}  // namespace dds
