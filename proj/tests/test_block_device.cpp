#include "dds/block_device.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

namespace dds {
namespace {

TEST(BlockDevice, WriteThenReadRoundTrip) {
  BlockDeviceConfig cfg;
  cfg.num_blocks = 64;
  cfg.jitter_ns = 0;
  SimBlockDevice dev(cfg);
  std::vector<uint8_t> data(1024);
  std::iota(data.begin(), data.end(), 0);
  bool wrote = false;
  dev.submit_write(512, data, [&](Status s) {
    EXPECT_EQ(s, Status::kSuccess);
    wrote = true;
  });
  EXPECT_FALSE(wrote);  // nothing completes before its deadline
  dev.poll(cfg.base_latency_ns);
  ASSERT_TRUE(wrote);
  std::vector<uint8_t> back(1024);
  bool read = false;
  dev.submit_read(512, back, [&](Status) { read = true; }, cfg.base_latency_ns);
  dev.poll(2 * cfg.base_latency_ns);
  ASSERT_TRUE(read);
  EXPECT_EQ(back, data);
}

TEST(BlockDevice, DataMovesAtCompletionNotSubmission) {
  BlockDeviceConfig cfg;
  cfg.num_blocks = 8;
  cfg.jitter_ns = 0;
  SimBlockDevice dev(cfg);
  std::vector<uint8_t> data(512, 0xAA);
  dev.submit_write(0, data, nullptr);
  EXPECT_EQ(dev.image()[0], 0);
  // Mutating the source before completion is visible, by design: the device
  // reads the caller's span when the op retires.
  data[0] = 0xBB;
  dev.poll(cfg.base_latency_ns);
  EXPECT_EQ(dev.image()[0], 0xBB);
}

TEST(BlockDevice, OutOfRangeFailsImmediately) {
  BlockDeviceConfig cfg;
  cfg.num_blocks = 2;
  SimBlockDevice dev(cfg);
  std::vector<uint8_t> buf(2048);
  Status got = Status::kSuccess;
  dev.submit_read(0, buf, [&](Status s) { got = s; });
  EXPECT_EQ(got, Status::kOutOfRange);
  EXPECT_EQ(dev.pending_count(), 0u);
}

TEST(BlockDevice, JitterReordersCompletions) {
  BlockDeviceConfig cfg;
  cfg.num_blocks = 256;
  cfg.base_latency_ns = 1000;
  cfg.jitter_ns = 50'000;
  cfg.seed = 7;
  SimBlockDevice dev(cfg);
  std::vector<uint8_t> buf(512);
  std::vector<int> completion_order;
  for (int i = 0; i < 32; ++i) {
    dev.submit_read(uint64_t(i) * 512, buf,
                    [&, i](Status) { completion_order.push_back(i); });
  }
  dev.poll(1'000'000);
  ASSERT_EQ(completion_order.size(), 32u);
  std::vector<int> sorted = completion_order;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_TRUE(std::is_sorted(sorted.begin(), sorted.end()));
  EXPECT_NE(completion_order, sorted);  // at least one inversion
}

TEST(BlockDevice, PollRespectsDeadlines) {
  BlockDeviceConfig cfg;
  cfg.num_blocks = 8;
  cfg.base_latency_ns = 1000;
  cfg.jitter_ns = 0;
  SimBlockDevice dev(cfg);
  std::vector<uint8_t> buf(512);
  int done = 0;
  dev.submit_read(0, buf, [&](Status) { ++done; }, 0);
  dev.submit_read(0, buf, [&](Status) { ++done; }, 500);
  EXPECT_EQ(dev.poll(999), 0u);
  EXPECT_EQ(dev.poll(1000), 1u);
  EXPECT_EQ(done, 1);
  EXPECT_EQ(dev.next_completion_time(), 1500u);
  EXPECT_EQ(dev.poll(1500), 1u);
  EXPECT_EQ(done, 2);
  EXPECT_EQ(dev.next_completion_time(), 0u);
}

TEST(BlockDevice, ManualModeCompletesInAnyOrder) {
  BlockDeviceConfig cfg;
  cfg.num_blocks = 8;
  cfg.manual_completion = true;
  SimBlockDevice dev(cfg);
  std::vector<uint8_t> a(512, 1), b(512, 2);
  std::vector<int> order;
  dev.submit_write(0, a, [&](Status) { order.push_back(1); });
  dev.submit_write(512, b, [&](Status) { order.push_back(2); });
  ASSERT_EQ(dev.pending_count(), 2u);
  dev.complete_index(1);  // second submission first
  dev.complete_index(0);
  EXPECT_EQ(order, (std::vector<int>{2, 1}));
  EXPECT_EQ(dev.image()[0], 1);
  EXPECT_EQ(dev.image()[512], 2);
}

TEST(BlockDevice, EveryCompletionFiresExactlyOnce) {
  BlockDeviceConfig cfg;
  cfg.num_blocks = 1024;
  cfg.jitter_ns = 20'000;
  cfg.seed = 11;
  SimBlockDevice dev(cfg);
  std::vector<uint8_t> buf(512);
  std::vector<int> fired(500, 0);
  std::mt19937_64 rng(3);
  SimTime now = 0;
  for (int i = 0; i < 500; ++i) {
    now += rng() % 100;
    dev.submit_read((rng() % 1024) * 512, buf,
                    [&, i](Status) { ++fired[size_t(i)]; }, now);
    if (rng() % 4 == 0) dev.poll(now);
  }
  dev.poll(now + 1'000'000);
  for (int f : fired) EXPECT_EQ(f, 1);
  EXPECT_EQ(dev.pending_count(), 0u);
}

}  // namespace
}  // namespace dds
