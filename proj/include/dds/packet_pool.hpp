#pragma once

// Pre-reserved, size-classed arena of read/packet buffers. Allocation picks
// the smallest class that fits; nothing is ever handed out beyond the arena
// and every buffer comes back after transmission.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dds {

struct PacketPoolConfig {
  std::array<size_t, 4> class_sizes = {1u << 10, 4u << 10, 16u << 10, 64u << 10};
  size_t buffers_per_class = 128;
};

class PacketBufferPool {
 public:
  struct Buffer {
    uint8_t* data = nullptr;
    size_t size = 0;  // class size, >= requested
    int cls = -1;
    uint32_t index = 0;

    std::span<uint8_t> span() const { return {data, size}; }
    bool valid() const { return data != nullptr; }
  };

  explicit PacketBufferPool(const PacketPoolConfig& cfg = {}) : cfg_(cfg) {
    for (int c = 0; c < 4; ++c) {
      arenas_[size_t(c)].resize(cfg_.class_sizes[size_t(c)] *
                                cfg_.buffers_per_class);
      for (uint32_t i = 0; i < cfg_.buffers_per_class; ++i) {
        free_[size_t(c)].push_back(i);
      }
    }
  }

  std::optional<Buffer> allocate(size_t want) {
    for (int c = 0; c < 4; ++c) {
      if (cfg_.class_sizes[size_t(c)] < want) continue;
      auto& fl = free_[size_t(c)];
      if (fl.empty()) continue;  // spill to the next class up
      uint32_t idx = fl.back();
      fl.pop_back();
      ++in_use_;
      return Buffer{arenas_[size_t(c)].data() +
                        size_t(idx) * cfg_.class_sizes[size_t(c)],
                    cfg_.class_sizes[size_t(c)], c, idx};
    }
    return std::nullopt;
  }

  void release(const Buffer& b) {
    if (!b.valid()) return;
    free_[size_t(b.cls)].push_back(b.index);
    --in_use_;
  }

  size_t in_use() const { return in_use_; }
  size_t free_count(int cls) const { return free_[size_t(cls)].size(); }
  size_t class_size(int cls) const { return cfg_.class_sizes[size_t(cls)]; }

 private:
  PacketPoolConfig cfg_;
  std::array<std::vector<uint8_t>, 4> arenas_;
  std::array<std::vector<uint32_t>, 4> free_;
  size_t in_use_ = 0;
};

}  // namespace dds
