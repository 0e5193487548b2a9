#pragma once

#include <atomic>
#include <cstdint>

namespace dds {

// Counts payload copies on the audited datapaths. Modeled DMA transfers and
// device transfers are movements, not copies, and are never counted here.
// A correct build keeps every counter at zero; the counters exist so tests
// can prove it and so a deliberately-copying configuration shows up.
struct CopyAudit {
  std::atomic<uint64_t> host_write_to_device{0};
  std::atomic<uint64_t> device_to_response{0};
  std::atomic<uint64_t> engine_read_path{0};

  uint64_t total() const {
    return host_write_to_device.load() + device_to_response.load() +
           engine_read_path.load();
  }
  void reset() {
    host_write_to_device = 0;
    device_to_response = 0;
    engine_read_path = 0;
  }
};

}  // namespace dds
