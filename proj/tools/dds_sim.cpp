// dds-sim: drive the disaggregated-storage simulator from the command line.
//
//   dds-sim run <config> [--seed N] [--csv out.csv] [--trace out.csv]
//   dds-sim run --print-schema
//   dds-sim bench ring  --kind progress|locked|farm --producers N [--csv f]
//   dds-sim bench table --readers N --items M [--csv f]
//   dds-sim fsck <image> [--block-size N]

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dds/bench.hpp"
#include "dds/file_service.hpp"
#include "dds/scenario.hpp"

namespace {

bool read_file(const std::string& path, std::string* out, std::string* err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    *err = "cannot open " + path;
    return false;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  *out = ss.str();
  return true;
}

bool write_file(const std::string& path, const std::string& body,
                std::string* err) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    *err = "cannot write " + path;
    return false;
  }
  out << body;
  return bool(out);
}

int cmd_run(const std::string& config_path, bool print_schema,
            bool have_seed, uint64_t seed, const std::string& csv_path,
            const std::string& trace_path) {
  if (print_schema) {
    std::cout << dds::scenario_schema();
    return 0;
  }
  std::string text, err;
  if (!read_file(config_path, &text, &err)) {
    std::cerr << "error: " << err << "\n";
    return 1;
  }
  dds::ScenarioConfig cfg;
  if (dds::parse_scenario(text, &cfg, &err) != dds::Status::kSuccess) {
    std::cerr << "error: " << config_path << ": " << err << "\n";
    return 1;
  }
  if (have_seed) cfg.workload.seed = seed;

  dds::TraceLog trace;
  dds::Scenario scenario(cfg, trace_path.empty() ? nullptr : &trace);
  dds::MetricsReport report;
  if (dds::Status s = scenario.run(&report, &err); s != dds::Status::kSuccess) {
    std::cerr << "error: scenario failed (" << dds::to_string(s) << "): "
              << err << "\n";
    return 1;
  }
  std::string csv = dds::MetricsReport::csv_header() + "\n" + report.csv() + "\n";
  if (!csv_path.empty()) {
    if (!write_file(csv_path, csv, &err)) {
      std::cerr << "error: " << err << "\n";
      return 1;
    }
  }
  if (!trace_path.empty()) {
    if (!write_file(trace_path, trace.csv(), &err)) {
      std::cerr << "error: " << err << "\n";
      return 1;
    }
  }
  std::cout << csv;
  return 0;
}

int cmd_bench_ring(const std::string& kind, size_t producers, uint64_t ops,
                   const std::string& csv_path) {
  dds::RingBenchOptions opt;
  if (ops) opt.ops_per_producer = ops;
  auto r = dds::bench_ring(kind, producers, opt);
  if (r.kind == "unknown") {
    std::cerr << "error: unknown ring kind \"" << kind
              << "\" (want progress, locked, or farm)\n";
    return 1;
  }
  std::string csv = dds::RingBenchResult::csv_header() + "\n" + r.csv() + "\n";
  std::string err;
  if (!csv_path.empty() && !write_file(csv_path, csv, &err)) {
    std::cerr << "error: " << err << "\n";
    return 1;
  }
  std::cout << csv;
  return 0;
}

int cmd_bench_table(size_t readers, size_t items, uint64_t lookups,
                    const std::string& csv_path) {
  auto r = dds::bench_cache_table(readers, items,
                                  lookups ? lookups : 500'000);
  std::string csv = dds::TableBenchResult::csv_header() + "\n" + r.csv() + "\n";
  std::string err;
  if (!csv_path.empty() && !write_file(csv_path, csv, &err)) {
    std::cerr << "error: " << err << "\n";
    return 1;
  }
  std::cout << csv;
  return 0;
}

int cmd_fsck(const std::string& image_path, size_t block_size) {
  std::ifstream in(image_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << image_path << "\n";
    return 1;
  }
  std::vector<uint8_t> image((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  std::string report;
  dds::Status s = dds::describe_image(image, block_size, &report);
  if (s != dds::Status::kSuccess) {
    std::cerr << "error: image check failed: " << dds::to_string(s) << "\n";
    return 1;
  }
  std::cout << report;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disaggregated-storage simulator"};
  app.require_subcommand(1);

  // run
  std::string config_path, csv_path, trace_path;
  uint64_t seed = 0;
  bool print_schema = false;
  auto* run = app.add_subcommand("run", "run a workload scenario");
  run->add_option("config", config_path, "scenario config file (key=value)");
  auto* seed_opt =
      run->add_option("--seed", seed, "override the workload seed");
  run->add_option("--csv", csv_path, "write the metrics row to this file");
  run->add_option("--trace", trace_path, "write the event trace to this file");
  run->add_flag("--print-schema", print_schema,
                "print every config key with its default and exit");

  // bench ring / bench table
  auto* bench = app.add_subcommand("bench", "microbenchmarks");
  bench->require_subcommand(1);
  std::string ring_kind = "progress";
  size_t producers = 4;
  uint64_t ring_ops = 0;
  std::string ring_csv;
  auto* ring = bench->add_subcommand("ring", "request-ring throughput");
  ring->add_option("--kind", ring_kind, "progress, locked, or farm");
  ring->add_option("--producers", producers, "concurrent producer threads");
  ring->add_option("--ops", ring_ops, "operations per producer");
  ring->add_option("--csv", ring_csv, "write results to this file");

  size_t readers = 4, items = 100'000;
  uint64_t lookups = 0;
  std::string table_csv;
  auto* table = bench->add_subcommand("table", "cache-table lookup scaling");
  table->add_option("--readers", readers, "max concurrent reader threads");
  table->add_option("--items", items, "items to insert before the read phase");
  table->add_option("--lookups", lookups, "lookups per reader");
  table->add_option("--csv", table_csv, "write results to this file");

  // fsck
  std::string image_path;
  size_t block_size = 512;
  auto* fsck = app.add_subcommand("fsck", "inspect a raw device image");
  fsck->add_option("image", image_path, "image file")->required();
  fsck->add_option("--block-size", block_size, "device block size in bytes");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (!print_schema && config_path.empty()) {
      std::cerr << "error: run needs a config file (or --print-schema)\n";
      return 1;
    }
    return cmd_run(config_path, print_schema, seed_opt->count() > 0, seed,
                   csv_path, trace_path);
  }
  if (ring->parsed()) return cmd_bench_ring(ring_kind, producers, ring_ops, ring_csv);
  if (table->parsed()) return cmd_bench_table(readers, items, lookups, table_csv);
  if (fsck->parsed()) return cmd_fsck(image_path, block_size);
  return 1;
}
