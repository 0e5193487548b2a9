#include "dds/cache_table.hpp"

#include <gtest/gtest.h>

#include "dds/wire.hpp"

#include <atomic>
#include <map>
#include <random>
#include <thread>
#include <vector>

namespace dds {
namespace {

std::vector<uint8_t> item_for(uint64_t v) {
  std::vector<uint8_t> it(16);
  detail::put_u64(it.data(), v);
  detail::put_u64(it.data() + 8, ~v);
  return it;
}

TEST(CacheTable, InsertLookupErase) {
  CacheTable t;
  EXPECT_EQ(t.insert(42, item_for(1)), Status::kSuccess);
  std::vector<uint8_t> got;
  EXPECT_EQ(t.lookup(42, &got), Status::kSuccess);
  EXPECT_EQ(got, item_for(1));
  EXPECT_EQ(t.lookup(43, &got), Status::kMiss);
  EXPECT_EQ(t.erase(42), Status::kSuccess);
  EXPECT_EQ(t.erase(42), Status::kNotFound);
  EXPECT_EQ(t.lookup(42, &got), Status::kMiss);
}

TEST(CacheTable, UpdateInPlaceKeepsSize) {
  CacheTable t;
  ASSERT_EQ(t.insert(7, item_for(1)), Status::kSuccess);
  ASSERT_EQ(t.insert(7, item_for(2)), Status::kSuccess);
  EXPECT_EQ(t.size(), 1u);
  std::vector<uint8_t> got;
  ASSERT_EQ(t.lookup(7, &got), Status::kSuccess);
  EXPECT_EQ(got, item_for(2));
}

TEST(CacheTable, LookupProbesAtMostTwoBuckets) {
  CacheTableConfig cfg;
  cfg.capacity_items = 1 << 12;
  CacheTable t(cfg);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 3000; ++i) t.insert(rng(), item_for(uint64_t(i)));
  rng.seed(5);
  std::vector<uint8_t> got;
  for (int i = 0; i < 3000; ++i) {
    int probes = 9;
    ASSERT_EQ(t.lookup(rng(), &got, &probes), Status::kSuccess);
    EXPECT_LE(probes, 2);
    EXPECT_GE(probes, 1);
  }
  int probes = 9;
  t.lookup(uint64_t(-1), &got, &probes);
  EXPECT_LE(probes, 2);
}

TEST(CacheTable, FullTableRejectsWithoutEviction) {
  CacheTableConfig cfg;
  cfg.capacity_items = 64;
  CacheTable t(cfg);
  std::vector<uint64_t> keys;
  uint64_t k = 0;
  while (t.size() < t.capacity()) {
    if (t.insert(k, item_for(k)) == Status::kSuccess) keys.push_back(k);
    ++k;
  }
  EXPECT_EQ(t.insert(k + 1, item_for(0)), Status::kTableFull);
  // Nothing already present was displaced out.
  std::vector<uint8_t> got;
  for (uint64_t key : keys) {
    EXPECT_EQ(t.lookup(key, &got), Status::kSuccess) << key;
  }
}

TEST(CacheTable, NeverResizes) {
  CacheTableConfig cfg;
  cfg.capacity_items = 4096;
  CacheTable t(cfg);
  const void* addr = t.bucket_array_address();
  size_t buckets = t.bucket_count();
  for (uint64_t i = 0; t.size() < t.capacity() && i < 100'000; ++i) {
    t.insert(i * 2654435761u, item_for(i));
  }
  EXPECT_EQ(t.bucket_array_address(), addr);
  EXPECT_EQ(t.bucket_count(), buckets);
}

TEST(CacheTable, OversizeKeyOrItemRejected) {
  CacheTable t;
  std::vector<uint8_t> big_key(kMaxCacheKeyBytes + 1, 1);
  std::vector<uint8_t> big_item(kMaxCacheItemBytes + 1, 1);
  std::vector<uint8_t> item(8, 1);
  EXPECT_EQ(t.insert(big_key, item), Status::kRecordTooLarge);
  EXPECT_EQ(t.insert(7, big_item), Status::kRecordTooLarge);
}

// Differential test against std::map over a long random op sequence.
TEST(CacheTable, DifferentialAgainstStdMap) {
  CacheTableConfig cfg;
  cfg.capacity_items = 1 << 10;
  CacheTable t(cfg);
  std::map<uint64_t, std::vector<uint8_t>> oracle;
  std::mt19937_64 rng(17);
  const uint64_t key_space = 4096;
  for (int op = 0; op < 1'000'000; ++op) {
    uint64_t key = rng() % key_space;
    switch (rng() % 4) {
      case 0:
      case 1: {  // insert/update
        auto item = item_for(rng());
        Status s = t.insert(key, item);
        if (s == Status::kSuccess) {
          oracle[key] = item;
        } else {
          ASSERT_EQ(s, Status::kTableFull);
          ASSERT_FALSE(oracle.count(key));  // updates never hit the limit
          ASSERT_EQ(t.size(), oracle.size());
        }
        break;
      }
      case 2: {  // erase
        Status s = t.erase(key);
        ASSERT_EQ(s, oracle.erase(key) ? Status::kSuccess : Status::kNotFound);
        break;
      }
      default: {  // lookup
        std::vector<uint8_t> got;
        Status s = t.lookup(key, &got);
        auto it = oracle.find(key);
        if (it == oracle.end()) {
          ASSERT_EQ(s, Status::kMiss);
        } else {
          ASSERT_EQ(s, Status::kSuccess);
          ASSERT_EQ(got, it->second);
        }
      }
    }
    ASSERT_EQ(t.size(), oracle.size());
  }
}

// Readers race a writer; every observed item must be one the writer actually
// stored for that key, never torn.
TEST(CacheTable, ConcurrentReadersSeeOnlyWholeItems) {
  CacheTableConfig cfg;
  cfg.capacity_items = 1 << 12;
  CacheTable t(cfg);
  constexpr uint64_t kKeys = 512;
  for (uint64_t k = 0; k < kKeys; ++k) {
    ASSERT_EQ(t.insert(k, item_for(k << 32)), Status::kSuccess);
  }
  std::atomic<bool> stop{false};
  std::atomic<uint64_t> bad{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 4; ++r) {
    readers.emplace_back([&, r] {
      std::mt19937_64 rng(uint64_t(r) + 100);
      std::vector<uint8_t> got;
      while (!stop.load(std::memory_order_relaxed)) {
        uint64_t k = rng() % kKeys;
        if (t.lookup(k, &got) != Status::kSuccess) continue;
        if (got.size() != 16) {
          bad.fetch_add(1);
          continue;
        }
        uint64_t a = detail::get_u64(got.data());
        uint64_t b = detail::get_u64(got.data() + 8);
        // Writer only ever stores (v, ~v) pairs with low key bits matching.
        if (b != ~a || (a >> 32) != k) bad.fetch_add(1);
      }
    });
  }
  std::mt19937_64 wrng(1);
  for (int i = 0; i < 200'000; ++i) {
    uint64_t k = wrng() % kKeys;
    uint64_t v = (k << 32) | (uint64_t(i) & 0xffffffff);
    // item_for stores (v, ~v); readers check that pairing and the key bits.
    ASSERT_EQ(t.insert(k, item_for(v)), Status::kSuccess);
  }
  stop.store(true);
  for (auto& th : readers) th.join();
  EXPECT_EQ(bad.load(), 0u);
}

}  // namespace
}  // namespace dds
