#pragma once

// Offload plugin contract. A plugin decides, per application request,
// whether the DPU can serve it from durable storage, and keeps the shared
// cache table in sync with host file activity. Plugins see only the ops and
// the table; they perform no I/O themselves.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dds/app_proto.hpp"
#include "dds/cache_table.hpp"

namespace dds {

struct ReadOp {
  uint32_t file_id = 0;
  uint64_t offset = 0;
  uint32_t size = 0;
};

struct WriteOp {
  uint32_t file_id = 0;
  uint64_t offset = 0;
  uint32_t size = 0;
  std::span<const uint8_t> data;  // bytes made durable by this write
};

struct CacheUpdate {
  uint64_t key = 0;
  std::vector<uint8_t> item;
};

class OffloadPlugin {
 public:
  virtual ~OffloadPlugin() = default;
  virtual const char* name() const = 0;

  // Returns the durable read that answers `req`, or nullopt to decline and
  // send the request to the host.
  virtual std::optional<ReadOp> offloadable(const AppRequestView& req,
                                            const CacheTable& table) const = 0;

  // A host write reached durable storage; emits cache entries to publish.
  virtual void on_durable_write(const WriteOp& op,
                                std::vector<CacheUpdate>* out) const = 0;

  // The host issued a read over this range; emits keys to invalidate.
  virtual void on_host_read(const ReadOp& op,
                            std::vector<uint64_t>* keys) const = 0;
};

}  // namespace dds
