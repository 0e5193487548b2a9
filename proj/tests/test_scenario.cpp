#include "dds/scenario.hpp"

#include <gtest/gtest.h>

namespace dds {
namespace {

ScenarioConfig parse_ok(const std::string& text) {
  ScenarioConfig cfg;
  std::string err;
  EXPECT_EQ(parse_scenario(text, &cfg, &err), Status::kSuccess) << err;
  return cfg;
}

TEST(ConfigTest, ParsesAllFieldsWithCommentsAndSpaces) {
  auto cfg = parse_ok(
      "# a scenario\n"
      "io_size = 512\n"
      "read_fraction=0.75   # mostly reads\n"
      "requests_per_message=8\n"
      "outstanding_messages=3\n"
      "connections=4\n"
      "total_ops=5000\n"
      "seed=99\n"
      "plugin=page_lsn\n"
      "mode=library_only\n"
      "key_space=128\n"
      "preload=0\n"
      "link_latency_ns=7000\n"
      "link_loss_rate=0.01\n"
      "engine_slots=256\n");
  EXPECT_EQ(cfg.workload.io_size, 512u);
  EXPECT_DOUBLE_EQ(cfg.workload.read_fraction, 0.75);
  EXPECT_EQ(cfg.workload.requests_per_message, 8u);
  EXPECT_EQ(cfg.workload.connections, 4u);
  EXPECT_EQ(cfg.workload.plugin, "page_lsn");
  EXPECT_EQ(cfg.workload.mode, OffloadMode::kLibraryOnly);
  EXPECT_FALSE(cfg.workload.preload);
  EXPECT_EQ(cfg.env.link_latency_ns, 7000u);
  EXPECT_DOUBLE_EQ(cfg.env.link_loss_rate, 0.01);
  EXPECT_EQ(cfg.env.engine_slots, 256u);
}

TEST(ConfigTest, FieldLevelDiagnostics) {
  ScenarioConfig cfg;
  std::string err;
  EXPECT_EQ(parse_scenario("read_fraction=1.5\n", &cfg, &err),
            Status::kConfigInvalid);
  EXPECT_NE(err.find("read_fraction"), std::string::npos);
  EXPECT_EQ(parse_scenario("no_such_knob=1\n", &cfg, &err),
            Status::kConfigInvalid);
  EXPECT_NE(err.find("no_such_knob"), std::string::npos);
  EXPECT_EQ(parse_scenario("connections\n", &cfg, &err),
            Status::kConfigInvalid);
  EXPECT_EQ(parse_scenario("engine_slots=100\n", &cfg, &err),
            Status::kConfigInvalid);  // not a power of two
  EXPECT_EQ(parse_scenario("mode=sideways\n", &cfg, &err),
            Status::kConfigInvalid);
}

TEST(ConfigTest, SchemaMentionsEveryField) {
  auto schema = scenario_schema();
  for (const char* field :
       {"io_size", "read_fraction", "requests_per_message",
        "outstanding_messages", "connections", "total_ops", "seed", "plugin",
        "mode", "key_space", "preload", "link_latency_ns", "inspect_ns",
        "link_loss_rate", "device_base_latency_ns", "device_jitter_ns",
        "host_cache_records", "host_op_cost_ns", "engine_slots",
        "device_image_bytes"}) {
    EXPECT_NE(schema.find(field), std::string::npos) << field;
  }
  // The schema text itself round-trips through the parser.
  ScenarioConfig cfg;
  std::string err;
  EXPECT_EQ(parse_scenario(schema, &cfg, &err), Status::kSuccess) << err;
}

std::string small_workload(const std::string& mode, const std::string& extra) {
  return "io_size=512\nkey_space=64\nconnections=2\ntotal_ops=400\n"
         "requests_per_message=4\noutstanding_messages=2\nseed=7\n"
         "mode=" + mode + "\n" + extra;
}

TEST(ScenarioTest, ZeroOpsYieldsEmptyReport) {
  auto cfg = parse_ok(small_workload("off", "total_ops=0\npreload=0\n"));
  Scenario s(cfg);
  MetricsReport r;
  std::string err;
  ASSERT_EQ(s.run(&r, &err), Status::kSuccess) << err;
  EXPECT_EQ(r.total_ops, 0u);
  EXPECT_EQ(r.host_served + r.dpu_served, 0u);
}

TEST(ScenarioTest, AllWritesNeverServedByDpu) {
  auto cfg = parse_ok(small_workload("full_offload", "read_fraction=0\n"));
  Scenario s(cfg);
  MetricsReport r;
  std::string err;
  ASSERT_EQ(s.run(&r, &err), Status::kSuccess) << err;
  EXPECT_EQ(r.total_ops, 400u);
  EXPECT_EQ(r.dpu_served, 0u);
  EXPECT_EQ(r.host_served, 400u);
}

TEST(ScenarioTest, ReadOnlyFullOffloadServedEntirelyByDpu) {
  auto cfg = parse_ok(small_workload("full_offload", "read_fraction=1\n"));
  Scenario s(cfg);
  MetricsReport r;
  std::string err;
  ASSERT_EQ(s.run(&r, &err), Status::kSuccess) << err;
  EXPECT_EQ(r.total_ops, 400u);
  EXPECT_EQ(r.dpu_served, 400u);
  EXPECT_EQ(r.host_served, 0u);
  EXPECT_EQ(r.retransmissions, 0u);
  EXPECT_GT(r.throughput_ops_s, 0.0);
  EXPECT_GT(r.latency_p50_ns, 0u);
  EXPECT_LE(r.latency_p50_ns, r.latency_p99_ns);
}

TEST(ScenarioTest, OffVersusFullOffloadAreByteEquivalent) {
  MetricsReport off, full;
  {
    auto cfg = parse_ok(small_workload("off", "read_fraction=1\n"));
    std::string err;
    ASSERT_EQ(Scenario(cfg).run(&off, &err), Status::kSuccess) << err;
  }
  {
    auto cfg = parse_ok(small_workload("full_offload", "read_fraction=1\n"));
    std::string err;
    ASSERT_EQ(Scenario(cfg).run(&full, &err), Status::kSuccess) << err;
  }
  EXPECT_EQ(off.response_payload_hash, full.response_payload_hash);
  EXPECT_EQ(off.total_ops, full.total_ops);
  EXPECT_EQ(off.dpu_served, 0u);
  EXPECT_EQ(full.dpu_served, full.total_ops);
  // Offloading frees host CPU.
  EXPECT_LT(full.host_busy_ns, off.host_busy_ns);
}

TEST(ScenarioTest, MixedWorkloadConservation) {
  auto cfg = parse_ok(small_workload("full_offload", "read_fraction=0.6\n"));
  Scenario s(cfg);
  MetricsReport r;
  std::string err;
  ASSERT_EQ(s.run(&r, &err), Status::kSuccess) << err;
  EXPECT_EQ(r.total_ops, 400u);
  EXPECT_EQ(r.host_served + r.dpu_served, 400u);
  EXPECT_GT(r.dpu_served, 0u);
  EXPECT_GT(r.host_served, 0u);
}

TEST(ScenarioTest, DeterministicForFixedSeed) {
  auto run_once = [](const std::string& mode) {
    auto cfg = parse_ok(small_workload(mode, "read_fraction=0.5\n"));
    Scenario s(cfg);
    MetricsReport r;
    std::string err;
    EXPECT_EQ(s.run(&r, &err), Status::kSuccess) << err;
    return r.csv();
  };
  EXPECT_EQ(run_once("full_offload"), run_once("full_offload"));
  EXPECT_EQ(run_once("off"), run_once("off"));
}

TEST(ScenarioTest, PageLsnPluginRoundTrips) {
  auto cfg = parse_ok(small_workload(
      "full_offload", "read_fraction=0.7\nplugin=page_lsn\n"));
  Scenario s(cfg);
  MetricsReport r;
  std::string err;
  ASSERT_EQ(s.run(&r, &err), Status::kSuccess) << err;
  EXPECT_EQ(r.total_ops, 400u);
  EXPECT_EQ(r.host_served + r.dpu_served, 400u);
}

TEST(ScenarioTest, LibraryOnlyRoutesEverythingToHost) {
  auto cfg = parse_ok(small_workload("library_only", "read_fraction=1\n"));
  Scenario s(cfg);
  MetricsReport r;
  std::string err;
  ASSERT_EQ(s.run(&r, &err), Status::kSuccess) << err;
  EXPECT_EQ(r.dpu_served, 0u);
  EXPECT_EQ(r.host_served, 400u);
}

}  // namespace
}  // namespace dds
