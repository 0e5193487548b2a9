// Microbenchmarks: request-ring throughput under producer contention, and
// cache-table insert/lookup scaling. These run real threads against wall
// time; the consumer charges itself a modeled DMA delay per transfer so ring
// layouts pay for the bus crossings their design implies.
#pragma once

#include <atomic>
#include <chrono>
#include <random>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "dds/cache_table.hpp"
#include "dds/dma.hpp"
#include "dds/ring.hpp"
#include "dds/wire.hpp"

namespace dds {

inline void spin_for_ns(uint64_t ns) {
  auto end = std::chrono::steady_clock::now() + std::chrono::nanoseconds(ns);
  while (std::chrono::steady_clock::now() < end) {
  }
}

struct RingBenchResult {
  std::string kind;
  size_t producers = 0;
  uint64_t total_ops = 0;
  double seconds = 0.0;
  double mops = 0.0;

  static std::string csv_header() {
    return "kind,producers,total_ops,seconds,mops";
  }
  std::string csv() const {
    return kind + "," + std::to_string(producers) + "," +
           std::to_string(total_ops) + "," + std::to_string(seconds) + "," +
           std::to_string(mops);
  }
};

// Per-transfer cost constants mirror the channel model used by the
// simulated data path (fixed op latency plus a per-byte term).
struct BenchDmaCost {
  uint64_t op_latency_ns = 1000;
  double per_byte_ns = 0.15625;
};

struct RingBenchOptions {
  uint64_t ops_per_producer = 20'000;
  bool model_dma = true;  // charge the consumer modeled transfer delays
  BenchDmaCost dma;
};

// One 64-byte record carrying an 8-byte message (the smallest record the
// wire format admits).
inline std::vector<uint8_t> bench_record() {
  FileRequestHeader h;
  h.request_id = 1;
  h.length = 0;
  h.op_kind = OpKind::kWrite;
  std::vector<uint8_t> rec;
  encode_request(h, {}, &rec);
  return rec;
}

inline uint64_t dma_cost_ns(const BenchDmaCost& m, uint64_t ops,
                            uint64_t bytes) {
  return ops * m.op_latency_ns + uint64_t(m.per_byte_ns * double(bytes));
}

// kind: "progress" (cursor-based multi-producer ring), "locked" (same layout
// behind a producer mutex), "farm" (per-slot flags, one message per
// transfer).
inline RingBenchResult bench_ring(const std::string& kind, size_t producers,
                                  const RingBenchOptions& opt = {}) {
  RingBenchResult out;
  out.kind = kind;
  out.producers = producers;
  out.total_ops = opt.ops_per_producer * producers;

  const auto rec = bench_record();
  std::atomic<bool> go{false};
  std::atomic<uint64_t> consumed{0};
  std::vector<std::thread> threads;
  auto t0 = std::chrono::steady_clock::now();

  auto start_clock = [&] {
    go.store(true, std::memory_order_release);
    t0 = std::chrono::steady_clock::now();
  };

  if (kind == "farm") {
    FarmRing ring(4096);
    for (size_t p = 0; p < producers; ++p) {
      threads.emplace_back([&, p] {
        while (!go.load(std::memory_order_acquire)) {
        }
        for (uint64_t i = 0; i < opt.ops_per_producer; ++i) {
          while (ring.insert(p << 32 | i) != RingResult::kOk) {
            std::this_thread::yield();
          }
        }
      });
    }
    start_clock();
    uint64_t value = 0;
    while (consumed.load(std::memory_order_relaxed) < out.total_ops) {
      if (ring.consume(&value) == RingResult::kOk) {
        // Poll the flag+value and write the cleared flag back: two
        // transfers for every 8-byte message.
        if (opt.model_dma) spin_for_ns(dma_cost_ns(opt.dma, 2, 16));
        consumed.fetch_add(1, std::memory_order_relaxed);
      }
    }
  } else if (kind == "locked" || kind == "progress") {
    RingConfig rcfg;
    RequestRing pring(rcfg);
    LockedRing lring(rcfg);
    const bool locked = kind == "locked";
    for (size_t p = 0; p < producers; ++p) {
      threads.emplace_back([&] {
        while (!go.load(std::memory_order_acquire)) {
        }
        for (uint64_t i = 0; i < opt.ops_per_producer; ++i) {
          for (;;) {
            RingResult r = locked ? lring.insert(rec) : pring.insert(rec);
            if (r == RingResult::kOk) break;
            std::this_thread::yield();
          }
        }
      });
    }
    start_clock();
    RequestRing::Batch batch;
    while (consumed.load(std::memory_order_relaxed) < out.total_ops) {
      RingResult r =
          locked ? lring.consume_batch(&batch) : pring.consume_batch(&batch);
      if (r != RingResult::kOk) continue;
      uint64_t records = 0;
      for_each_request(batch, [&](const DecodedRequest&) { ++records; });
      // One cursor read, one data read covering the batch, one head write.
      if (opt.model_dma) {
        spin_for_ns(dma_cost_ns(opt.dma, 3, batch.end - batch.begin));
      }
      if (locked) {
        lring.release(batch.end);
      } else {
        pring.release(batch.end);
      }
      consumed.fetch_add(records, std::memory_order_relaxed);
    }
    out.total_ops = consumed.load();  // pads excluded by the walker
  } else {
    out.kind = "unknown";
    return out;
  }

  auto t1 = std::chrono::steady_clock::now();
  for (auto& t : threads) t.join();
  out.seconds = std::chrono::duration<double>(t1 - t0).count();
  out.mops = out.seconds > 0 ? double(out.total_ops) / out.seconds / 1e6 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Cache-table bench: one writer fills the table, then 1..max_readers threads
// look keys up concurrently.
// ---------------------------------------------------------------------------
struct TableBenchPoint {
  size_t readers = 0;
  uint64_t lookups = 0;
  double seconds = 0.0;
  double mops = 0.0;
};

struct TableBenchResult {
  size_t items = 0;
  double insert_seconds = 0.0;
  double insert_mops = 0.0;
  std::vector<TableBenchPoint> points;

  static std::string csv_header() {
    return "phase,readers,ops,seconds,mops";
  }
  std::string csv() const {
    std::string s = "insert,1," + std::to_string(items) + "," +
                    std::to_string(insert_seconds) + "," +
                    std::to_string(insert_mops);
    for (const auto& p : points) {
      s += "\nlookup," + std::to_string(p.readers) + "," +
           std::to_string(p.lookups) + "," + std::to_string(p.seconds) + "," +
           std::to_string(p.mops);
    }
    return s;
  }
};

inline TableBenchResult bench_cache_table(size_t max_readers, size_t items,
                                          uint64_t lookups_per_reader =
                                              500'000) {
  TableBenchResult out;
  out.items = items;
  CacheTableConfig cfg;
  cfg.capacity_items = items * 2;  // below the displacement-failure regime
  CacheTable table(cfg);

  std::vector<uint8_t> item(8, 0xCD);
  auto t0 = std::chrono::steady_clock::now();
  for (size_t i = 0; i < items; ++i) {
    detail::put_u64(item.data(), i);
    if (table.insert(uint64_t(i), item) != Status::kSuccess) {
      out.items = i;
      break;
    }
  }
  auto t1 = std::chrono::steady_clock::now();
  out.insert_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.insert_mops = double(out.items) / out.insert_seconds / 1e6;

  for (size_t readers = 1; readers <= max_readers; ++readers) {
    std::atomic<bool> go{false};
    std::atomic<uint64_t> misses{0};
    std::vector<std::thread> threads;
    for (size_t r = 0; r < readers; ++r) {
      threads.emplace_back([&, r] {
        std::mt19937_64 rng(r + 1);
        std::vector<uint8_t> found;
        uint64_t local_misses = 0;
        while (!go.load(std::memory_order_acquire)) {
        }
        for (uint64_t i = 0; i < lookups_per_reader; ++i) {
          uint64_t key = rng() % out.items;
          if (table.lookup(key, &found) != Status::kSuccess) {
            ++local_misses;
          }
        }
        misses.fetch_add(local_misses, std::memory_order_relaxed);
      });
    }
    auto l0 = std::chrono::steady_clock::now();
    go.store(true, std::memory_order_release);
    for (auto& t : threads) t.join();
    auto l1 = std::chrono::steady_clock::now();
    TableBenchPoint p;
    p.readers = readers;
    p.lookups = lookups_per_reader * readers - misses.load();
    p.seconds = std::chrono::duration<double>(l1 - l0).count();
    p.mops = double(lookups_per_reader * readers) / p.seconds / 1e6;
    out.points.push_back(p);
  }
  return out;
}

}  // namespace dds
