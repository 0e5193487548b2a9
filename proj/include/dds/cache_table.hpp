#pragma once

// Fixed-capacity cuckoo hash table mapping application keys to opaque
// offload metadata. Two hash functions, 4-wide buckets with a short in-bucket
// overflow chain, bounded displacement, no eviction and no resizing ever.
// Concurrency: one writer (the file service), many readers (engine and
// director) via per-bucket version counters; readers never block and never
// observe a torn entry.

#include <array>
#include <atomic>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dds/status.hpp"

namespace dds {

constexpr size_t kMaxCacheKeyBytes = 32;
constexpr size_t kMaxCacheItemBytes = 64;

struct CacheTableConfig {
  size_t capacity_items = 1 << 16;  // hard item limit, reserved up front
  uint64_t seed = 0x9e3779b97f4a7c15ull;
};

class CacheTable {
 public:
  static constexpr int kBucketWidth = 4;  // primary cuckoo slots
  static constexpr int kChainSlots = 4;   // in-bucket overflow chain
  static constexpr int kKickLimit = 32;

  explicit CacheTable(const CacheTableConfig& cfg = {})
      : capacity_items_(cfg.capacity_items), seed_(cfg.seed) {
    // Bucket count sized for the item limit at bucket width, power of two.
    size_t want = (capacity_items_ + kBucketWidth - 1) / kBucketWidth;
    nbuckets_ = 1;
    while (nbuckets_ < want) nbuckets_ <<= 1;
    buckets_ = std::make_unique<Bucket[]>(nbuckets_);
  }

  size_t capacity() const { return capacity_items_; }
  size_t size() const { return size_.load(std::memory_order_relaxed); }
  size_t bucket_count() const { return nbuckets_; }
  // Structural witness for "no resize ever": the bucket array address.
  const void* bucket_array_address() const { return buckets_.get(); }

  Status insert(std::span<const uint8_t> key, std::span<const uint8_t> item) {
    if (key.size() > kMaxCacheKeyBytes || item.size() > kMaxCacheItemBytes ||
        key.empty()) {
      return Status::kRecordTooLarge;
    }
    const size_t b1 = bucket_of(hash(key, 1));
    const size_t b2 = bucket_of(hash(key, 2));
    // Existing key: update in place.
    for (size_t b : {b1, b2}) {
      int s = find_slot(b, key);
      if (s >= 0) {
        write_locked(b, [&](Bucket& bk) { set_item(bk.slots[s], item); });
        return Status::kSuccess;
      }
    }
    if (size_.load(std::memory_order_relaxed) >= capacity_items_) {
      return Status::kTableFull;
    }
    // Free primary slot in either candidate bucket.
    for (size_t b : {b1, b2}) {
      int s = free_primary(b);
      if (s >= 0) {
        place(b, s, key, item);
        return Status::kSuccess;
      }
    }
    // Displacement: BFS for a path of at most kKickLimit moves ending in a
    // free primary slot; the table is only mutated once a path is found.
    if (kick_and_place(b1, b2, key, item)) return Status::kSuccess;
    // Overflow chain relief.
    for (size_t b : {b1, b2}) {
      int s = free_chain(b);
      if (s >= 0) {
        place(b, s, key, item);
        return Status::kSuccess;
      }
    }
    return Status::kTableFull;
  }

  Status insert(uint64_t key, std::span<const uint8_t> item) {
    return insert(key_bytes(key), item);
  }

  Status erase(std::span<const uint8_t> key) {
    for (size_t b : {bucket_of(hash(key, 1)), bucket_of(hash(key, 2))}) {
      int s = find_slot(b, key);
      if (s >= 0) {
        write_locked(b, [&](Bucket& bk) { bk.slots[s].used = false; });
        size_.fetch_sub(1, std::memory_order_relaxed);
        return Status::kSuccess;
      }
    }
    return Status::kNotFound;
  }

  Status erase(uint64_t key) { return erase(key_bytes(key)); }

  // Reader-safe lookup; inspects at most the two candidate buckets.
  // `probed_buckets`, when given, reports how many buckets were touched.
  Status lookup(std::span<const uint8_t> key, std::vector<uint8_t>* item_out,
                int* probed_buckets = nullptr) const {
    const size_t b1 = bucket_of(hash(key, 1));
    const size_t b2 = bucket_of(hash(key, 2));
    int probes = 0;
    for (size_t b : {b1, b2}) {
      ++probes;
      if (lookup_in_bucket(b, key, item_out)) {
        if (probed_buckets) *probed_buckets = probes;
        return Status::kSuccess;
      }
      if (b1 == b2) break;
    }
    if (probed_buckets) *probed_buckets = probes;
    return Status::kMiss;
  }

  Status lookup(uint64_t key, std::vector<uint8_t>* item_out,
                int* probed_buckets = nullptr) const {
    return lookup(key_bytes(key), item_out, probed_buckets);
  }

  static std::array<uint8_t, 8> key_array(uint64_t key) {
    std::array<uint8_t, 8> a;
    std::memcpy(a.data(), &key, 8);
    return a;
  }

 private:
  struct Slot {
    bool used = false;
    uint8_t klen = 0;
    uint8_t vlen = 0;
    std::array<uint8_t, kMaxCacheKeyBytes> key;
    std::array<uint8_t, kMaxCacheItemBytes> val;
  };
  struct Bucket {
    std::atomic<uint32_t> version{0};  // odd while the writer mutates
    Slot slots[kBucketWidth + kChainSlots];
  };

  std::span<const uint8_t> key_bytes(const uint64_t& key) const {
    return {reinterpret_cast<const uint8_t*>(&key), 8};
  }

  uint64_t hash(std::span<const uint8_t> key, int which) const {
    uint64_t h = seed_ * (which == 1 ? 0x100000001b3ull : 0xc6a4a7935bd1e995ull);
    for (uint8_t b : key) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
    // splitmix finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
  }

  size_t bucket_of(uint64_t h) const { return size_t(h) & (nbuckets_ - 1); }

  size_t alternate(size_t bucket, std::span<const uint8_t> key) const {
    size_t b1 = bucket_of(hash(key, 1));
    size_t b2 = bucket_of(hash(key, 2));
    return bucket == b1 ? b2 : b1;
  }

  static void set_key(Slot& s, std::span<const uint8_t> key) {
    s.klen = uint8_t(key.size());
    std::memcpy(s.key.data(), key.data(), key.size());
  }
  static void set_item(Slot& s, std::span<const uint8_t> item) {
    s.vlen = uint8_t(item.size());
    if (!item.empty()) std::memcpy(s.val.data(), item.data(), item.size());
  }
  static bool key_equals(const Slot& s, std::span<const uint8_t> key) {
    return s.used && s.klen == key.size() &&
           std::memcmp(s.key.data(), key.data(), key.size()) == 0;
  }

  int find_slot(size_t b, std::span<const uint8_t> key) const {
    const Bucket& bk = buckets_[b];
    for (int i = 0; i < kBucketWidth + kChainSlots; ++i) {
      if (key_equals(bk.slots[i], key)) return i;
    }
    return -1;
  }
  int free_primary(size_t b) const {
    for (int i = 0; i < kBucketWidth; ++i) {
      if (!buckets_[b].slots[i].used) return i;
    }
    return -1;
  }
  int free_chain(size_t b) const {
    for (int i = kBucketWidth; i < kBucketWidth + kChainSlots; ++i) {
      if (!buckets_[b].slots[i].used) return i;
    }
    return -1;
  }

  template <typename Fn>
  void write_locked(size_t b, Fn&& fn) {
    Bucket& bk = buckets_[b];
    bk.version.fetch_add(1, std::memory_order_acq_rel);  // now odd
    fn(bk);
    bk.version.fetch_add(1, std::memory_order_acq_rel);  // even again
  }

  void place(size_t b, int slot, std::span<const uint8_t> key,
             std::span<const uint8_t> item) {
    write_locked(b, [&](Bucket& bk) {
      Slot& s = bk.slots[slot];
      set_key(s, key);
      set_item(s, item);
      s.used = true;
    });
    size_.fetch_add(1, std::memory_order_relaxed);
  }

  // BFS over displacement moves restricted to primary slots. Each frontier
  // node is a (bucket, slot) whose occupant could move to its alternate
  // bucket. Paths are applied backwards so every intermediate state is a
  // valid table.
  bool kick_and_place(size_t b1, size_t b2, std::span<const uint8_t> key,
                      std::span<const uint8_t> item) {
    struct Node {
      size_t bucket;
      int slot;
      int parent;  // index into nodes, -1 for roots
    };
    std::vector<Node> nodes;
    int free_node = -1;
    int free_slot = -1;
    for (size_t b : {b1, b2}) {
      for (int s = 0; s < kBucketWidth; ++s) {
        nodes.push_back({b, s, -1});
      }
    }
    for (size_t i = 0; i < nodes.size() && free_node < 0; ++i) {
      if (int(i) >= kKickLimit * kBucketWidth) break;
      const Slot& occ = buckets_[nodes[i].bucket].slots[nodes[i].slot];
      if (!occ.used) continue;  // shouldn't happen for roots; defensive for depth
      std::span<const uint8_t> okey(occ.key.data(), occ.klen);
      size_t alt = alternate(nodes[i].bucket, okey);
      int fs = free_primary(alt);
      if (fs >= 0) {
        free_node = int(i);
        free_slot = fs;
        break;
      }
      for (int s = 0; s < kBucketWidth; ++s) {
        nodes.push_back({alt, s, int(i)});
      }
    }
    if (free_node < 0) return false;
    // Collect the path root..free_node, then apply moves from the far end.
    std::vector<int> path;
    for (int n = free_node; n >= 0; n = nodes[n].parent) path.push_back(n);
    // Move the occupant of the last path node into the free slot, then each
    // predecessor's occupant into the just-vacated slot.
    size_t dst_bucket;
    int dst_slot;
    {
      const Slot& occ = buckets_[nodes[free_node].bucket].slots[nodes[free_node].slot];
      std::span<const uint8_t> okey(occ.key.data(), occ.klen);
      dst_bucket = alternate(nodes[free_node].bucket, okey);
      dst_slot = free_slot;
    }
    for (int n : path) {
      size_t src_bucket = nodes[n].bucket;
      int src_slot = nodes[n].slot;
      Slot moving = buckets_[src_bucket].slots[src_slot];
      write_locked(dst_bucket, [&](Bucket& bk) { bk.slots[dst_slot] = moving; });
      write_locked(src_bucket, [&](Bucket& bk) { bk.slots[src_slot].used = false; });
      dst_bucket = src_bucket;
      dst_slot = src_slot;
    }
    // The root slot is now free for the new key.
    place(dst_bucket, dst_slot, key, item);
    return true;
  }

  // Seqlock read of one bucket.
  bool lookup_in_bucket(size_t b, std::span<const uint8_t> key,
                        std::vector<uint8_t>* item_out) const {
    const Bucket& bk = buckets_[b];
    for (;;) {
      uint32_t v1 = bk.version.load(std::memory_order_acquire);
      if (v1 & 1) continue;  // writer active
      bool found = false;
      uint8_t vlen = 0;
      std::array<uint8_t, kMaxCacheItemBytes> val;
      for (int i = 0; i < kBucketWidth + kChainSlots; ++i) {
        if (key_equals(bk.slots[i], key)) {
          vlen = bk.slots[i].vlen;
          std::memcpy(val.data(), bk.slots[i].val.data(), vlen);
          found = true;
          break;
        }
      }
      std::atomic_thread_fence(std::memory_order_acquire);
      uint32_t v2 = bk.version.load(std::memory_order_acquire);
      if (v1 != v2) continue;  // raced with the writer, retry
      if (found && item_out) item_out->assign(val.begin(), val.begin() + vlen);
      return found;
    }
  }

  const size_t capacity_items_;
  const uint64_t seed_;
  size_t nbuckets_ = 0;
  std::unique_ptr<Bucket[]> buckets_;
  std::atomic<size_t> size_{0};
};

}  // namespace dds
