#pragma once

// Key-value offload policy over a slot-addressed data file: the record for
// key k lives at byte offset k * record_size. Puts are written through to
// the file, so a cached key always points at the latest durable value. Any
// host read over a range conservatively drops the keys it covers, modeling
// a host that may start buffering those records itself.

#include "dds/plugin.hpp"

namespace dds {

class KvLogPlugin : public OffloadPlugin {
 public:
  KvLogPlugin(uint32_t file_id, uint32_t record_size)
      : file_id_(file_id), record_size_(record_size) {}

  const char* name() const override { return "kv_log"; }

  std::optional<ReadOp> offloadable(const AppRequestView& req,
                                    const CacheTable& table) const override {
    if (req.op() != AppOp::kKvGet || req.body().size() < 8) return std::nullopt;
    uint64_t key = detail::get_u64(req.body().data());
    std::vector<uint8_t> item;
    if (table.lookup(key, &item) != Status::kSuccess || item.size() != 8) {
      return std::nullopt;
    }
    uint64_t offset = detail::get_u64(item.data());
    return ReadOp{file_id_, offset, record_size_};
  }

  void on_durable_write(const WriteOp& op,
                        std::vector<CacheUpdate>* out) const override {
    if (op.file_id != file_id_) return;
    // Publish each slot the write fully covers.
    uint64_t first = (op.offset + record_size_ - 1) / record_size_;
    uint64_t end = (op.offset + op.size) / record_size_;
    for (uint64_t slot = first; slot < end; ++slot) {
      CacheUpdate u;
      u.key = slot;
      u.item.resize(8);
      detail::put_u64(u.item.data(), slot * record_size_);
      out->push_back(std::move(u));
    }
  }

  void on_host_read(const ReadOp& op,
                    std::vector<uint64_t>* keys) const override {
    if (op.file_id != file_id_) return;
    uint64_t first = op.offset / record_size_;
    uint64_t end = (op.offset + op.size + record_size_ - 1) / record_size_;
    for (uint64_t slot = first; slot < end; ++slot) keys->push_back(slot);
  }

 private:
  const uint32_t file_id_;
  const uint32_t record_size_;
};

}  // namespace dds
