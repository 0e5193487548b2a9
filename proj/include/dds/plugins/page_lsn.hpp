#pragma once

// Page-store offload policy keyed by log sequence number. The host writes
// whole pages whose first 8 bytes carry the page's LSN; a page-get names a
// page and the minimum LSN the caller will accept. The DPU serves the read
// only when the durably written LSN is at least that new, so it never
// returns a stale page.

#include <cstring>

#include "dds/plugin.hpp"

namespace dds {

class PageLsnPlugin : public OffloadPlugin {
 public:
  PageLsnPlugin(uint32_t file_id, uint32_t page_size)
      : file_id_(file_id), page_size_(page_size) {}

  const char* name() const override { return "page_lsn"; }

  std::optional<ReadOp> offloadable(const AppRequestView& req,
                                    const CacheTable& table) const override {
    if (req.op() != AppOp::kPageGet || req.body().size() < 16) return std::nullopt;
    uint64_t page = detail::get_u64(req.body().data());
    uint64_t want_lsn = detail::get_u64(req.body().data() + 8);
    std::vector<uint8_t> item;
    if (table.lookup(page, &item) != Status::kSuccess || item.size() != 8) {
      return std::nullopt;
    }
    uint64_t durable_lsn = detail::get_u64(item.data());
    if (durable_lsn < want_lsn) return std::nullopt;
    return ReadOp{file_id_, page * page_size_, page_size_};
  }

  void on_durable_write(const WriteOp& op,
                        std::vector<CacheUpdate>* out) const override {
    if (op.file_id != file_id_) return;
    // Publish every whole page the write covers; the LSN sits at the head
    // of each page image.
    uint64_t first = (op.offset + page_size_ - 1) / page_size_;
    uint64_t end = (op.offset + op.size) / page_size_;
    for (uint64_t p = first; p < end; ++p) {
      size_t within = size_t(p * page_size_ - op.offset);
      if (within + 8 > op.data.size()) break;
      CacheUpdate u;
      u.key = p;
      u.item.assign(op.data.begin() + within, op.data.begin() + within + 8);
      out->push_back(std::move(u));
    }
  }

  void on_host_read(const ReadOp&, std::vector<uint64_t>*) const override {
    // Reads don't stale the durable LSN, so nothing to drop.
  }

 private:
  const uint32_t file_id_;
  const uint32_t page_size_;
};

}  // namespace dds
