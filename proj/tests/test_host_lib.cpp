#include "dds/host_lib.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <random>
#include <thread>

namespace dds {
namespace {

struct Rig {
  SimBlockDevice dev;
  RequestRing ring;
  ResponseRing resp;
  DmaChannel chan;
  FileService svc;
  HostLib lib;
  std::unique_ptr<PollGroup> group;

  Rig() : Rig(make_dcfg(), make_fcfg()) {}
  Rig(BlockDeviceConfig dcfg, FileServiceConfig fcfg)
      : dev(dcfg),
        ring(RingConfig{}),
        resp(1 << 20),
        svc(&dev, &ring, &resp, &chan, fcfg),
        lib(&svc),
        group(lib.create_poll(&ring, &resp, &chan)) {
    EXPECT_EQ(svc.format(), Status::kSuccess);
  }

  static BlockDeviceConfig make_dcfg() {
    BlockDeviceConfig d;
    d.num_blocks = (64u << 20) / 512;
    d.jitter_ns = 4000;
    return d;
  }
  static FileServiceConfig make_fcfg() {
    FileServiceConfig f;
    f.delivery_batch_bytes = 1;
    return f;
  }

  FileHandle make_file(const std::string& name) {
    uint32_t dir = 0;
    EXPECT_EQ(lib.create_directory("d-" + name, &dir), Status::kSuccess);
    FileHandle h;
    EXPECT_EQ(lib.create_file(dir, name, &h), Status::kSuccess);
    EXPECT_EQ(lib.poll_add(group.get(), &h), Status::kSuccess);
    return h;
  }

  // Single-threaded pump: advance simulated time until `want` completions.
  std::vector<Completion> pump(size_t want, SimTime max_ns = 50'000'000) {
    std::vector<Completion> got;
    for (SimTime t = 0; t <= max_ns && got.size() < want; t += 1000) {
      svc.step(t);
      group->poll_wait(64, 0, &got);
    }
    return got;
  }
};

TEST(HostLib, ControlPlaneBasics) {
  Rig r;
  uint32_t dir = 0;
  ASSERT_EQ(r.lib.create_directory("d", &dir), Status::kSuccess);
  FileHandle h;
  ASSERT_EQ(r.lib.create_file(dir, "f", &h), Status::kSuccess);
  EXPECT_EQ(h.size, 0u);
  FileHandle dup;
  EXPECT_EQ(r.lib.create_file(dir, "f", &dup), Status::kNameExists);
  EXPECT_EQ(r.lib.poll_add(r.group.get(), &h), Status::kSuccess);
  EXPECT_EQ(h.group, r.group.get());
}

TEST(HostLib, DataPlaneRequiresGroupMembership) {
  Rig r;
  uint32_t dir = 0;
  ASSERT_EQ(r.lib.create_directory("d", &dir), Status::kSuccess);
  FileHandle h;
  ASSERT_EQ(r.lib.create_file(dir, "f", &h), Status::kSuccess);
  std::vector<uint8_t> buf(64);
  uint64_t id = 0;
  EXPECT_EQ(r.group->read(&h, 0, buf, &id), Status::kConfigInvalid);
}

TEST(HostLib, WriteReadRoundTripUpdatesHandleSize) {
  Rig r;
  FileHandle h = r.make_file("f");
  std::vector<uint8_t> data(1024);
  std::iota(data.begin(), data.end(), 3);
  uint64_t wid = 0;
  ASSERT_EQ(r.group->write(&h, 0, data, &wid), Status::kSuccess);
  auto got = r.pump(1);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].request_id, wid);
  EXPECT_EQ(got[0].status, Status::kSuccess);
  EXPECT_EQ(got[0].length, 1024u);
  EXPECT_EQ(h.size, 1024u);

  std::vector<uint8_t> back(1024, 0);
  uint64_t rid = 0;
  ASSERT_EQ(r.group->read(&h, 0, back, &rid), Status::kSuccess);
  got = r.pump(1);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].request_id, rid);
  EXPECT_EQ(got[0].status, Status::kSuccess);
  EXPECT_EQ(back, data);
}

TEST(HostLib, ReadPastEofSurfacesOutOfRangeAtCompletion) {
  Rig r;
  FileHandle h = r.make_file("f");
  std::vector<uint8_t> buf(64);
  uint64_t id = 0;
  // The issuing call itself succeeds; the error arrives as a completion.
  ASSERT_EQ(r.group->read(&h, 1 << 20, buf, &id), Status::kSuccess);
  auto got = r.pump(1);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].status, Status::kOutOfRange);
}

TEST(HostLib, GatherThenContiguousRead) {
  Rig r;
  FileHandle h = r.make_file("f");
  const uint8_t ab[] = {'a', 'b'};
  const uint8_t cd[] = {'c', 'd'};
  std::vector<std::span<const uint8_t>> srcs = {ab, cd};
  uint64_t id = 0;
  ASSERT_EQ(r.group->write_gather(&h, 0, srcs, &id), Status::kSuccess);
  auto got = r.pump(1);
  ASSERT_EQ(got.size(), 1u);
  ASSERT_EQ(got[0].status, Status::kSuccess);
  std::vector<uint8_t> back(4);
  ASSERT_EQ(r.group->read(&h, 0, back, &id), Status::kSuccess);
  got = r.pump(1);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(std::string(back.begin(), back.end()), "abcd");
}

TEST(HostLib, ScatterHalvesMatchContiguousRead) {
  Rig r;
  FileHandle h = r.make_file("f");
  std::vector<uint8_t> data = {'w', 'x', 'y', 'z'};
  uint64_t id = 0;
  ASSERT_EQ(r.group->write(&h, 0, data, &id), Status::kSuccess);
  auto got = r.pump(1);
  ASSERT_EQ(got.size(), 1u);
  std::vector<uint8_t> lo(2), hi(2);
  std::vector<std::span<uint8_t>> dsts = {lo, hi};
  ASSERT_EQ(r.group->read_scatter(&h, 0, dsts, &id), Status::kSuccess);
  got = r.pump(1);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(std::string(lo.begin(), lo.end()), "wx");
  EXPECT_EQ(std::string(hi.begin(), hi.end()), "yz");
}

TEST(HostLib, GatherScatterMatchesFlatBufferOracle) {
  Rig r;
  FileHandle h = r.make_file("f");
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    size_t pieces = 1 + rng() % 4;
    std::vector<std::vector<uint8_t>> bufs(pieces);
    std::vector<std::span<const uint8_t>> srcs;
    std::vector<uint8_t> flat;
    for (auto& b : bufs) {
      b.resize(1 + rng() % 512);
      for (auto& x : b) x = uint8_t(rng());
      srcs.push_back(b);
      flat.insert(flat.end(), b.begin(), b.end());
    }
    uint64_t off = (rng() % 64) * 512;
    uint64_t id = 0;
    ASSERT_EQ(r.group->write_gather(&h, off, srcs, &id), Status::kSuccess);
    auto got = r.pump(1);
    ASSERT_EQ(got.size(), 1u);
    ASSERT_EQ(got[0].status, Status::kSuccess);

    // Scatter back into a random partition of the same total size.
    std::vector<std::vector<uint8_t>> outs;
    std::vector<std::span<uint8_t>> dsts;
    size_t left = flat.size();
    while (left) {
      size_t take = 1 + rng() % left;
      outs.emplace_back(take);
      left -= take;
    }
    for (auto& o : outs) dsts.push_back(o);
    ASSERT_EQ(r.group->read_scatter(&h, off, dsts, &id), Status::kSuccess);
    got = r.pump(1);
    ASSERT_EQ(got.size(), 1u);
    ASSERT_EQ(got[0].status, Status::kSuccess);
    std::vector<uint8_t> joined;
    for (auto& o : outs) joined.insert(joined.end(), o.begin(), o.end());
    ASSERT_EQ(joined, flat);
  }
}

TEST(HostLib, NonBlockingPollOnIdleGroupReturnsEmpty) {
  Rig r;
  std::vector<Completion> got;
  EXPECT_EQ(r.group->poll_wait(16, 0, &got), 0u);
  EXPECT_TRUE(got.empty());
}

TEST(HostLib, PartialDrainLeavesRestPending) {
  Rig r;
  FileHandle h = r.make_file("f");
  std::vector<uint8_t> data(512, 1);
  uint64_t id = 0;
  ASSERT_EQ(r.group->write(&h, 0, data, &id), Status::kSuccess);
  auto wgot = r.pump(1);
  ASSERT_EQ(wgot.size(), 1u);
  std::vector<uint8_t> buf(64);
  for (int i = 0; i < 64; ++i) {
    ASSERT_EQ(r.group->read(&h, uint64_t(i) * 4, buf, &id), Status::kSuccess);
  }
  // Let everything complete and deliver without draining.
  for (SimTime t = 0; t < 1'000'000; t += 1000) r.svc.step(t);
  std::vector<Completion> got;
  EXPECT_EQ(r.group->poll_wait(16, 0, &got), 16u);
  EXPECT_EQ(r.group->pending_count(), 48u);
  got.clear();
  size_t rest = 0;
  while (r.group->poll_wait(16, 0, &got) > 0) rest = got.size();
  EXPECT_EQ(rest, 48u);
  EXPECT_EQ(r.group->pending_count(), 0u);
}

TEST(HostLib, SleepingPollWakesOnDoorbell) {
  Rig r;
  FileHandle h = r.make_file("f");
  std::vector<uint8_t> data(512, 2);
  uint64_t id = 0;
  ASSERT_EQ(r.group->write(&h, 0, data, &id), Status::kSuccess);
  std::thread pump([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    for (SimTime t = 0; t < 1'000'000; t += 1000) r.svc.step(t);
  });
  std::vector<Completion> got;
  auto start = std::chrono::steady_clock::now();
  size_t n = r.group->poll_wait(16, 2'000'000'000, &got);  // 2 s budget
  auto waited = std::chrono::steady_clock::now() - start;
  pump.join();
  EXPECT_EQ(n, 1u);
  EXPECT_LT(std::chrono::duration_cast<std::chrono::milliseconds>(waited).count(),
            1500);
}

TEST(HostLib, RingFullAfterBoundedRetries) {
  BlockDeviceConfig dcfg = Rig::make_dcfg();
  Rig r(dcfg, Rig::make_fcfg());
  FileHandle h = r.make_file("f");
  // Fill the ring's admission window with nobody consuming.
  std::vector<uint8_t> chunk(32 * 1024, 7);
  uint64_t id = 0;
  Status s = Status::kSuccess;
  int issued = 0;
  for (; issued < 1024; ++issued) {
    s = r.group->write(&h, uint64_t(issued) * chunk.size(), chunk, &id);
    if (s != Status::kSuccess) break;
  }
  EXPECT_EQ(s, Status::kRingFull);
  EXPECT_EQ(r.group->pending_count(), size_t(issued));  // failed op not pending
}

TEST(HostLib, EightThreadsThousandOpsEachCompleteExactlyOnce) {
  Rig r;
  constexpr int kThreads = 8;
  constexpr int kOpsPerThread = 1000;
  std::vector<FileHandle> handles(kThreads);
  uint32_t dir = 0;
  ASSERT_EQ(r.lib.create_directory("d", &dir), Status::kSuccess);
  for (int i = 0; i < kThreads; ++i) {
    ASSERT_EQ(r.lib.create_file(dir, "f" + std::to_string(i), &handles[size_t(i)]),
              Status::kSuccess);
    ASSERT_EQ(r.lib.poll_add(r.group.get(), &handles[size_t(i)]),
              Status::kSuccess);
  }
  std::atomic<bool> stop{false};
  std::thread pump([&] {
    SimTime t = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      t += 1000;
      r.svc.step(t);
    }
  });
  std::mutex seen_mu;
  std::unordered_map<uint64_t, int> seen;
  std::atomic<size_t> total{0};
  std::thread collector([&] {
    std::vector<Completion> got;
    while (total.load() < kThreads * kOpsPerThread) {
      got.clear();
      r.group->poll_wait(64, 1'000'000, &got);
      std::lock_guard<std::mutex> lk(seen_mu);
      for (const Completion& c : got) {
        ++seen[c.request_id];
        total.fetch_add(1);
      }
    }
  });
  std::vector<std::thread> workers;
  std::vector<std::vector<uint64_t>> issued(kThreads);
  // Outlives the collector: read destinations must stay valid until their
  // completions drain.
  std::vector<std::vector<uint8_t>> bufs(kThreads, std::vector<uint8_t>(256));
  for (int w = 0; w < kThreads; ++w) {
    workers.emplace_back([&, w] {
      std::mt19937_64 rng(uint64_t(w) + 55);
      std::vector<uint8_t>& buf = bufs[size_t(w)];
      for (int i = 0; i < kOpsPerThread; ++i) {
        uint64_t off = (rng() % 128) * 256;
        uint64_t id = 0;
        Status s;
        do {
          if (i % 3 == 0 || i < 3) {
            s = r.group->write(&handles[size_t(w)], off, buf, &id);
          } else {
            s = r.group->read(&handles[size_t(w)], 0, buf, &id);
          }
          if (s == Status::kRingFull) std::this_thread::yield();
        } while (s == Status::kRingFull);
        ASSERT_EQ(s, Status::kSuccess);
        issued[size_t(w)].push_back(id);
      }
    });
  }
  for (auto& t : workers) t.join();
  collector.join();
  stop.store(true);
  pump.join();
  size_t distinct = 0;
  {
    std::lock_guard<std::mutex> lk(seen_mu);
    for (auto& w : issued) {
      for (uint64_t id : w) {
        auto it = seen.find(id);
        ASSERT_NE(it, seen.end()) << "request never completed: " << id;
        ASSERT_EQ(it->second, 1) << "duplicate completion: " << id;
        ++distinct;
      }
    }
  }
  EXPECT_EQ(distinct, size_t(kThreads) * kOpsPerThread);
  EXPECT_EQ(r.group->unknown_completions(), 0u);
  EXPECT_EQ(r.group->pending_count(), 0u);
}

}  // namespace
}  // namespace dds
