#pragma once

// Host-side file library: a conventional-looking file API whose data-plane
// calls encode ring records and complete through response-ring polling.
// Control-plane calls go synchronously to the file service over a separate
// channel. Data-plane calls never block on storage.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <cstring>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dds/file_service.hpp"
#include "dds/ring.hpp"
#include "dds/status.hpp"
#include "dds/wire.hpp"

namespace dds {

struct FileHandle {
  uint32_t file_id = 0;
  uint64_t size = 0;       // updated as this handle's writes complete
  class PollGroup* group = nullptr;
};

struct Completion {
  uint64_t request_id = 0;
  Status status = Status::kSuccess;
  uint32_t length = 0;  // payload bytes for reads, bytes written for writes
};

class PollGroup {
 public:
  static constexpr int kRingFullRetryBudget = 64;

  PollGroup(uint32_t group_id, RequestRing* req, ResponseRing* resp,
            DmaChannel* channel)
      : group_id_(group_id), req_(req), resp_(resp) {
    // Response-ring DMA writes double as the wakeup doorbell for sleepers.
    channel->interrupt_hook = [this] {
      {
        std::lock_guard<std::mutex> lk(wake_mu_);
        ++doorbell_gen_;
      }
      wake_cv_.notify_all();
    };
  }

  uint32_t group_id() const { return group_id_; }

  void add(FileHandle* handle) { handle->group = this; }

  Status read(FileHandle* h, uint64_t offset, std::span<uint8_t> dst,
              uint64_t* request_id) {
    if (h->group != this) return Status::kConfigInvalid;
    FileRequestHeader hdr;
    hdr.request_id = fresh_id();
    hdr.offset = offset;
    hdr.file_id = h->file_id;
    hdr.length = uint32_t(dst.size());
    hdr.op_kind = OpKind::kRead;
    std::vector<uint8_t> rec;
    encode_request(hdr, {}, &rec);
    Pending p;
    p.is_read = true;
    p.dst.push_back(dst);
    p.handle = h;
    return submit(hdr, rec, std::move(p), request_id);
  }

  Status write(FileHandle* h, uint64_t offset, std::span<const uint8_t> src,
               uint64_t* request_id) {
    if (h->group != this) return Status::kConfigInvalid;
    FileRequestHeader hdr;
    hdr.request_id = fresh_id();
    hdr.offset = offset;
    hdr.file_id = h->file_id;
    hdr.length = uint32_t(src.size());
    hdr.op_kind = OpKind::kWrite;
    std::vector<uint8_t> rec;
    encode_request(hdr, src, &rec);
    Pending p;
    p.handle = h;
    p.write_end = offset + src.size();
    p.op_length = hdr.length;
    return submit(hdr, rec, std::move(p), request_id);
  }

  // One ring record and one file I/O covering the concatenation of sources.
  Status write_gather(FileHandle* h, uint64_t offset,
                      std::span<const std::span<const uint8_t>> sources,
                      uint64_t* request_id) {
    if (h->group != this) return Status::kConfigInvalid;
    std::vector<uint8_t> flat;
    for (const auto& s : sources) flat.insert(flat.end(), s.begin(), s.end());
    FileRequestHeader hdr;
    hdr.request_id = fresh_id();
    hdr.offset = offset;
    hdr.file_id = h->file_id;
    hdr.length = uint32_t(flat.size());
    hdr.op_kind = OpKind::kWriteGather;
    std::vector<uint8_t> rec;
    encode_request(hdr, flat, &rec);
    Pending p;
    p.handle = h;
    p.write_end = offset + flat.size();
    p.op_length = hdr.length;
    return submit(hdr, rec, std::move(p), request_id);
  }

  // One ring record; the response payload is scattered across destinations.
  Status read_scatter(FileHandle* h, uint64_t offset,
                      std::span<const std::span<uint8_t>> destinations,
                      uint64_t* request_id) {
    if (h->group != this) return Status::kConfigInvalid;
    uint64_t total = 0;
    Pending p;
    p.is_read = true;
    p.handle = h;
    for (const auto& d : destinations) {
      total += d.size();
      p.dst.push_back(d);
    }
    FileRequestHeader hdr;
    hdr.request_id = fresh_id();
    hdr.offset = offset;
    hdr.file_id = h->file_id;
    hdr.length = uint32_t(total);
    hdr.op_kind = OpKind::kReadScatter;
    std::vector<uint8_t> rec;
    encode_request(hdr, {}, &rec);
    return submit(hdr, rec, std::move(p), request_id);
  }

  // timeout_ns == 0: drain whatever is there and return immediately.
  // timeout_ns > 0: sleep until the doorbell fires or the timeout elapses,
  // then drain. Payloads land in caller buffers before completions surface.
  size_t poll_wait(size_t max_completions, uint64_t timeout_ns,
                   std::vector<Completion>* out) {
    uint64_t gen;
    {
      std::lock_guard<std::mutex> lk(wake_mu_);
      gen = doorbell_gen_;
    }
    size_t n = drain(max_completions, out);
    if (n > 0 || timeout_ns == 0) return n;
    std::unique_lock<std::mutex> lk(wake_mu_);
    wake_cv_.wait_for(lk, std::chrono::nanoseconds(timeout_ns),
                      [&] { return doorbell_gen_ != gen; });
    lk.unlock();
    return drain(max_completions, out);
  }

  size_t pending_count() const {
    std::lock_guard<std::mutex> lk(mu_);
    return pending_.size();
  }
  uint64_t unknown_completions() const { return unknown_completions_; }

 private:
  struct Pending {
    bool is_read = false;
    std::vector<std::span<uint8_t>> dst;  // scatter destinations, in order
    FileHandle* handle = nullptr;
    uint64_t write_end = 0;
    uint32_t op_length = 0;
  };

  uint64_t fresh_id() { return next_id_.fetch_add(1, std::memory_order_relaxed); }

  Status submit(const FileRequestHeader& hdr, std::span<const uint8_t> rec,
                Pending&& p, uint64_t* request_id) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      pending_.emplace(hdr.request_id, std::move(p));
    }
    for (int attempt = 0; attempt < kRingFullRetryBudget; ++attempt) {
      RingResult r = req_->insert(rec);
      if (r == RingResult::kOk) {
        if (request_id) *request_id = hdr.request_id;
        return Status::kSuccess;
      }
      if (r == RingResult::kRecordTooLarge) {
        std::lock_guard<std::mutex> lk(mu_);
        pending_.erase(hdr.request_id);
        return Status::kRecordTooLarge;
      }
    }
    std::lock_guard<std::mutex> lk(mu_);
    pending_.erase(hdr.request_id);
    return Status::kRingFull;
  }

  size_t drain(size_t max_completions, std::vector<Completion>* out) {
    return resp_->consume(max_completions, [&](std::span<const uint8_t> rec) {
      DecodedResponse d;
      if (decode_response(rec, &d) != Status::kSuccess) return false;
      Pending p;
      {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = pending_.find(d.header.request_id);
        if (it == pending_.end()) {
          ++unknown_completions_;
          return true;
        }
        p = std::move(it->second);
        pending_.erase(it);
      }
      uint32_t length = d.header.length;
      if (p.is_read && d.header.status == Status::kSuccess) {
        size_t at = 0;
        for (auto& dst : p.dst) {
          size_t take = std::min(dst.size(), d.data.size() - at);
          std::memcpy(dst.data(), d.data.data() + at, take);
          at += take;
        }
      }
      if (!p.is_read) {
        length = p.op_length;
        if (d.header.status == Status::kSuccess && p.handle) {
          p.handle->size = std::max(p.handle->size, p.write_end);
        }
      }
      out->push_back({d.header.request_id, d.header.status, length});
      return true;
    });
  }

  const uint32_t group_id_;
  RequestRing* req_;
  ResponseRing* resp_;
  mutable std::mutex mu_;
  std::unordered_map<uint64_t, Pending> pending_;
  std::atomic<uint64_t> next_id_{1};
  uint64_t unknown_completions_ = 0;
  std::mutex wake_mu_;
  std::condition_variable wake_cv_;
  uint64_t doorbell_gen_ = 0;  // guarded by wake_mu_
};

// Thin facade bundling the control-plane calls with poll-group creation.
class HostLib {
 public:
  explicit HostLib(FileService* service) : service_(service) {}

  Status create_directory(const std::string& name, uint32_t* dir_id) {
    return service_->create_directory(name, dir_id);
  }

  Status create_file(uint32_t dir_id, const std::string& name,
                     FileHandle* out) {
    uint32_t id = 0;
    Status s = service_->create_file(dir_id, name, &id);
    if (s != Status::kSuccess) return s;
    out->file_id = id;
    out->size = 0;
    out->group = nullptr;
    return Status::kSuccess;
  }

  // The service serves one ring pair, so every group shares it; the group
  // abstraction still owns ids, pending state, and wakeups.
  std::unique_ptr<PollGroup> create_poll(RequestRing* req, ResponseRing* resp,
                                         DmaChannel* channel) {
    return std::make_unique<PollGroup>(next_group_id_++, req, resp, channel);
  }

  Status poll_add(PollGroup* group, FileHandle* handle) {
    if (!service_->find_file(handle->file_id)) return Status::kNotFound;
    group->add(handle);
    return Status::kSuccess;
  }

 private:
  FileService* service_;
  uint32_t next_group_id_ = 1;
};

}  // namespace dds
