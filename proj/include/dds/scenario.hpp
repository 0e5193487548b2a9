// Scenario harness: parses a key=value config, assembles clients, the
// traffic director, the offload engine, the file service, and the host
// service over the simulated transport, drives a closed-loop workload, and
// reports metrics.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dds/director.hpp"
#include "dds/host_service.hpp"
#include "dds/plugins/kv_log.hpp"
#include "dds/plugins/page_lsn.hpp"

namespace dds {

enum class OffloadMode : uint8_t { kOff = 0, kLibraryOnly = 1, kFullOffload = 2 };

struct WorkloadSpec {
  uint32_t io_size = 1024;
  double read_fraction = 0.5;
  uint32_t requests_per_message = 4;
  uint32_t outstanding_messages = 2;
  uint32_t connections = 2;
  uint64_t total_ops = 1000;
  uint64_t seed = 1;
  std::string plugin = "kv_log";  // kv_log | page_lsn
  OffloadMode mode = OffloadMode::kFullOffload;
  uint64_t key_space = 256;
  bool preload = true;  // write every key once before measuring
};

struct ScenarioEnv {
  SimTime link_latency_ns = 5'000;
  SimTime inspect_ns = 2'000;
  double link_loss_rate = 0.0;
  SimTime device_base_latency_ns = 8'000;
  SimTime device_jitter_ns = 12'000;
  size_t host_cache_records = 4096;
  SimTime host_op_cost_ns = 2'000;
  size_t engine_slots = 1024;
  uint64_t device_image_bytes = 256u << 20;
};

struct ScenarioConfig {
  WorkloadSpec workload;
  ScenarioEnv env;
};

inline std::string scenario_schema() {
  return
      "# Scenario config: one `key=value` per line, `#` starts a comment.\n"
      "# Workload\n"
      "io_size=1024               # bytes per I/O request (= record size)\n"
      "read_fraction=0.5          # in [0,1]\n"
      "requests_per_message=4     # >= 1\n"
      "outstanding_messages=2     # >= 1, per connection (closed loop)\n"
      "connections=2              # >= 1\n"
      "total_ops=1000             # requests measured across all connections\n"
      "seed=1                     # workload and environment RNG seed\n"
      "plugin=kv_log              # kv_log | page_lsn\n"
      "mode=full_offload          # off | library_only | full_offload\n"
      "key_space=256              # distinct keys/pages\n"
      "preload=1                  # write every key before measuring (0|1)\n"
      "# Environment\n"
      "link_latency_ns=5000       # one-way network latency\n"
      "inspect_ns=2000            # per-segment middlebox inspection cost\n"
      "link_loss_rate=0.0         # data-segment loss probability\n"
      "device_base_latency_ns=8000\n"
      "device_jitter_ns=12000\n"
      "host_cache_records=4096    # bounded host-side record cache\n"
      "host_op_cost_ns=2000       # modeled host CPU per request\n"
      "engine_slots=1024          # offload-engine context ring slots\n"
      "device_image_bytes=268435456\n";
}

// Parses config text. On failure returns kConfigInvalid and sets *error to a
// field-level diagnostic.
inline Status parse_scenario(const std::string& text, ScenarioConfig* cfg,
                             std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = msg;
    return Status::kConfigInvalid;
  };
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    line.erase(std::remove_if(line.begin(), line.end(), is_space), line.end());
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      return fail("line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto bad = [&](const std::string& why) {
      return fail("field `" + key + "`: " + why + " (got `" + val + "`)");
    };
    auto as_u64 = [&](uint64_t* out) {
      try {
        size_t used = 0;
        uint64_t v = std::stoull(val, &used);
        if (used != val.size()) return false;
        *out = v;
        return true;
      } catch (...) {
        return false;
      }
    };
    auto as_f = [&](double* out) {
      try {
        size_t used = 0;
        double v = std::stod(val, &used);
        if (used != val.size()) return false;
        *out = v;
        return true;
      } catch (...) {
        return false;
      }
    };
    uint64_t u = 0;
    double f = 0;
    WorkloadSpec& w = cfg->workload;
    ScenarioEnv& e = cfg->env;
    if (key == "io_size") {
      if (!as_u64(&u) || u == 0 || u > (1u << 20)) {
        return bad("want integer in [1, 1048576]");
      }
      w.io_size = uint32_t(u);
    } else if (key == "read_fraction") {
      if (!as_f(&f) || f < 0.0 || f > 1.0) return bad("want number in [0,1]");
      w.read_fraction = f;
    } else if (key == "requests_per_message") {
      if (!as_u64(&u) || u == 0) return bad("want integer >= 1");
      w.requests_per_message = uint32_t(u);
    } else if (key == "outstanding_messages") {
      if (!as_u64(&u) || u == 0) return bad("want integer >= 1");
      w.outstanding_messages = uint32_t(u);
    } else if (key == "connections") {
      if (!as_u64(&u) || u == 0) return bad("want integer >= 1");
      w.connections = uint32_t(u);
    } else if (key == "total_ops") {
      if (!as_u64(&u)) return bad("want integer");
      w.total_ops = u;
    } else if (key == "seed") {
      if (!as_u64(&u)) return bad("want integer");
      w.seed = u;
    } else if (key == "plugin") {
      if (val != "kv_log" && val != "page_lsn") {
        return bad("want kv_log | page_lsn");
      }
      w.plugin = val;
    } else if (key == "mode") {
      if (val == "off") {
        w.mode = OffloadMode::kOff;
      } else if (val == "library_only") {
        w.mode = OffloadMode::kLibraryOnly;
      } else if (val == "full_offload") {
        w.mode = OffloadMode::kFullOffload;
      } else {
        return bad("want off | library_only | full_offload");
      }
    } else if (key == "key_space") {
      if (!as_u64(&u) || u == 0) return bad("want integer >= 1");
      w.key_space = u;
    } else if (key == "preload") {
      if (!as_u64(&u) || u > 1) return bad("want 0 or 1");
      w.preload = u == 1;
    } else if (key == "link_latency_ns") {
      if (!as_u64(&e.link_latency_ns)) return bad("want integer");
    } else if (key == "inspect_ns") {
      if (!as_u64(&e.inspect_ns)) return bad("want integer");
    } else if (key == "link_loss_rate") {
      if (!as_f(&f) || f < 0.0 || f >= 1.0) return bad("want number in [0,1)");
      e.link_loss_rate = f;
    } else if (key == "device_base_latency_ns") {
      if (!as_u64(&e.device_base_latency_ns)) return bad("want integer");
    } else if (key == "device_jitter_ns") {
      if (!as_u64(&e.device_jitter_ns)) return bad("want integer");
    } else if (key == "host_cache_records") {
      if (!as_u64(&u) || u == 0) return bad("want integer >= 1");
      e.host_cache_records = size_t(u);
    } else if (key == "host_op_cost_ns") {
      if (!as_u64(&e.host_op_cost_ns)) return bad("want integer");
    } else if (key == "engine_slots") {
      if (!as_u64(&u) || u == 0 || (u & (u - 1)) != 0) {
        return bad("want power-of-two integer >= 1");
      }
      e.engine_slots = size_t(u);
    } else if (key == "device_image_bytes") {
      if (!as_u64(&e.device_image_bytes)) return bad("want integer");
    } else {
      return fail("unknown field `" + key + "`");
    }
  }
  if (cfg->workload.key_space * uint64_t(cfg->workload.io_size) >
      cfg->env.device_image_bytes / 2) {
    return fail("key_space * io_size exceeds half the device image");
  }
  return Status::kSuccess;
}

struct MetricsReport {
  uint64_t total_ops = 0;
  double sim_seconds = 0.0;
  double throughput_ops_s = 0.0;
  uint64_t latency_p50_ns = 0;
  uint64_t latency_p99_ns = 0;
  uint64_t host_path_copies = 0;    // bounce-buffer copies on the host path
  uint64_t engine_path_copies = 0;  // same, on the offload path
  uint64_t host_busy_ns = 0;
  uint64_t host_served = 0;
  uint64_t dpu_served = 0;
  uint64_t retransmissions = 0;
  uint64_t fast_retransmits = 0;
  uint64_t dup_acks = 0;
  uint64_t response_payload_hash = 0;  // order-independent, per-request

  static std::string csv_header() {
    return "total_ops,sim_seconds,throughput_ops_s,latency_p50_ns,"
           "latency_p99_ns,host_path_copies,engine_path_copies,host_busy_ns,"
           "host_served,dpu_served,retransmissions,fast_retransmits,dup_acks,"
           "response_payload_hash";
  }
  std::string csv() const {
    std::ostringstream o;
    o << total_ops << ',' << sim_seconds << ',' << throughput_ops_s << ','
      << latency_p50_ns << ',' << latency_p99_ns << ',' << host_path_copies
      << ',' << engine_path_copies << ',' << host_busy_ns << ',' << host_served
      << ',' << dpu_served << ',' << retransmissions << ',' << fast_retransmits
      << ',' << dup_acks << ',' << response_payload_hash;
    return o.str();
  }
};

// ---------------------------------------------------------------------------
// The assembled system.
// ---------------------------------------------------------------------------
class Scenario {
 public:
  explicit Scenario(const ScenarioConfig& cfg, TraceLog* trace = nullptr)
      : cfg_(cfg), trace_(trace) {}

  // Runs to completion. Returns kSuccess and fills *report, or an error if
  // the system stalls or an invariant trips.
  Status run(MetricsReport* report, std::string* error = nullptr) {
    if (Status s = build(error); s != Status::kSuccess) return s;
    if (cfg_.workload.preload) {
      if (Status s = preload(error); s != Status::kSuccess) return s;
    }
    const SimTime start = clock_.now();
    for (Client& c : clients_) {
      for (uint32_t i = 0; i < cfg_.workload.outstanding_messages; ++i) {
        issue_message(c);
      }
    }
    uint64_t stalls = 0;
    while (completed_ < issued_target()) {
      if (!pump()) {
        if (++stalls > 1000) {
          if (error) {
            *error = "stalled at " + std::to_string(completed_) + "/" +
                     std::to_string(issued_target()) + " completions";
          }
          return Status::kTimeout;
        }
      } else {
        stalls = 0;
      }
    }
    fill_report(start, report);
    return Status::kSuccess;
  }

  const TrafficDirector* director() const { return director_.get(); }
  const HostService* host_service() const { return host_service_.get(); }

 private:
  struct Client {
    size_t index = 0;
    StreamEndpoint* app = nullptr;   // client application endpoint
    std::vector<uint8_t> rx;
    std::mt19937_64 rng{0};
    uint64_t ops_issued = 0;
    uint64_t ops_quota = 0;
    uint64_t next_seq = 0;
  };

  uint64_t issued_target() const {
    uint64_t t = 0;
    for (const Client& c : clients_) t += c.ops_quota;
    return t;
  }

  std::vector<uint8_t> value_for(uint64_t key, uint64_t version) {
    std::vector<uint8_t> v(cfg_.workload.io_size);
    std::mt19937_64 rng(cfg_.workload.seed * 0x9e3779b9 + key * 131 + version);
    for (auto& b : v) b = uint8_t(rng());
    if (cfg_.workload.plugin == "page_lsn" && v.size() >= 8) {
      detail::put_u64(v.data(), version);  // page update sequence number
    }
    return v;
  }

  Status build(std::string* error) {
    const WorkloadSpec& w = cfg_.workload;
    const ScenarioEnv& e = cfg_.env;

    BlockDeviceConfig dcfg;
    dcfg.block_size = 512;
    dcfg.num_blocks = e.device_image_bytes / 512;
    dcfg.base_latency_ns = e.device_base_latency_ns;
    dcfg.jitter_ns = e.device_jitter_ns;
    dcfg.seed = w.seed;
    dev_ = std::make_unique<SimBlockDevice>(dcfg);
    ring_ = std::make_unique<RequestRing>(RingConfig{});
    resp_ = std::make_unique<ResponseRing>(1 << 20);
    chan_ = std::make_unique<DmaChannel>();
    FileServiceConfig fcfg;
    fcfg.delivery_batch_bytes = 1;  // responses deliver as soon as complete
    svc_ = std::make_unique<FileService>(dev_.get(), ring_.get(), resp_.get(),
                                         chan_.get(), fcfg);
    if (svc_->format() != Status::kSuccess) {
      if (error) *error = "device format failed";
      return Status::kIoError;
    }
    lib_ = std::make_unique<HostLib>(svc_.get());
    uint32_t dir_id = 0;
    if (lib_->create_directory("data", &dir_id) != Status::kSuccess ||
        lib_->create_file(dir_id, "store", &handle_) != Status::kSuccess) {
      if (error) *error = "file creation failed";
      return Status::kIoError;
    }
    group_ = lib_->create_poll(ring_.get(), resp_.get(), chan_.get());
    lib_->poll_add(group_.get(), &handle_);

    table_ = std::make_unique<CacheTable>();
    if (w.plugin == "kv_log") {
      plugin_ = std::make_unique<KvLogPlugin>(handle_.file_id, w.io_size);
    } else {
      plugin_ = std::make_unique<PageLsnPlugin>(handle_.file_id, w.io_size);
    }
    svc_->set_offload(plugin_.get(), table_.get());
    svc_->set_copy_audit(&audit_);

    const bool offload = w.mode == OffloadMode::kFullOffload;
    pool_ = std::make_unique<PacketBufferPool>();
    if (offload) {
      EngineConfig ecfg;
      ecfg.context_ring_slots = e.engine_slots;
      eng_ = std::make_unique<OffloadEngine>(svc_.get(), plugin_.get(),
                                             table_.get(), pool_.get(), ecfg);
    }
    DirectorConfig dir_cfg;
    dir_cfg.signatures.push_back(
        *parse_signature("[*:*, 10.10.1.1:1111, TCP]"));
    director_ = std::make_unique<TrafficDirector>(
        &clock_, dir_cfg, offload ? plugin_.get() : nullptr,
        offload ? table_.get() : nullptr, offload ? eng_.get() : nullptr,
        pool_.get(), trace_);

    HostServiceConfig hcfg;
    hcfg.record_size = w.io_size;
    hcfg.cache_records = e.host_cache_records;
    hcfg.op_cost_ns = e.host_op_cost_ns;
    host_service_ =
        std::make_unique<HostService>(group_.get(), &handle_, hcfg);

    LinkConfig link;
    link.latency_ns = e.link_latency_ns;
    link.inspect_ns = e.inspect_ns;
    link.loss_rate = e.link_loss_rate;
    clients_.resize(w.connections);
    uint64_t per_conn = w.total_ops / w.connections;
    uint64_t extra = w.total_ops % w.connections;
    for (size_t i = 0; i < w.connections; ++i) {
      Client& c = clients_[i];
      c.index = i;
      c.rng.seed(w.seed * 7919 + i);
      c.ops_quota = per_conn + (i < extra ? 1 : 0);
      auto name = std::to_string(i);
      endpoints_.push_back(std::make_unique<StreamEndpoint>(
          &clock_, "client" + name, EndpointConfig{}, trace_));
      c.app = endpoints_.back().get();
      endpoints_.push_back(std::make_unique<StreamEndpoint>(
          &clock_, "dpu_c" + name, EndpointConfig{}, trace_));
      StreamEndpoint* dpu_c = endpoints_.back().get();
      endpoints_.push_back(std::make_unique<StreamEndpoint>(
          &clock_, "dpu_h" + name, EndpointConfig{}, trace_));
      StreamEndpoint* dpu_h = endpoints_.back().get();
      endpoints_.push_back(std::make_unique<StreamEndpoint>(
          &clock_, "host" + name, EndpointConfig{}, trace_));
      StreamEndpoint* host_ep = endpoints_.back().get();

      LinkConfig cl = link;
      cl.seed = w.seed * 101 + i * 2;
      duplexes_.push_back(connect(&clock_, c.app, dpu_c, cl, trace_));
      LinkConfig hl = link;
      hl.seed = w.seed * 101 + i * 2 + 1;
      hl.inspect_ns = 0;  // DPU-to-host leg is not inspected
      duplexes_.push_back(connect(&clock_, dpu_h, host_ep, hl, trace_));

      PacketMeta tuple;
      tuple.src_ip = *parse_ipv4("10.0.0.2") + uint32_t(i);
      tuple.src_port = uint16_t(40000 + i);
      tuple.dst_ip = *parse_ipv4("10.10.1.1");
      tuple.dst_port = 1111;
      director_->open_connection(dpu_c, dpu_h, tuple);
      host_service_->attach(host_ep);

      StreamEndpoint* app = c.app;
      size_t idx = i;
      app->set_on_deliver([this, idx](std::span<const uint8_t> bytes) {
        on_client_bytes(clients_[idx], bytes);
      });
    }
    return Status::kSuccess;
  }

  Status preload(std::string* error) {
    // Populate every key directly through the file library (not measured).
    for (uint64_t key = 0; key < cfg_.workload.key_space; ++key) {
      auto value = value_for(key, 0);
      uint64_t rid = 0;
      Status s = group_->write(&handle_, key * cfg_.workload.io_size, value,
                               &rid);
      if (s != Status::kSuccess) {
        if (error) *error = "preload write failed";
        return s;
      }
      // Settle each write so the table publication order is deterministic.
      std::vector<Completion> done;
      for (int spin = 0; spin < 100000 && done.empty(); ++spin) {
        pump_storage();
        group_->poll_wait(8, 0, &done);
      }
      if (done.empty() || done[0].status != Status::kSuccess) {
        if (error) *error = "preload completion failed";
        return Status::kIoError;
      }
      versions_[key] = 0;
    }
    return Status::kSuccess;
  }

  void pump_storage() {
    SimTime next = dev_->next_completion_time();
    if (next > clock_.now()) {
      // Device completions define the passage of storage time.
      if (dev_->pending_count() > 0 &&
          (!clock_.next_event_time() || next < *clock_.next_event_time())) {
        clock_.advance_to(next);
      }
    }
    svc_->step(clock_.now());
    if (eng_) eng_->complete_pending(clock_.now());
  }

  // One quantum of progress; returns whether anything happened.
  bool pump() {
    bool advanced = false;
    if (clock_.pending_events()) {
      auto next_ev = *clock_.next_event_time();
      SimTime next_dev =
          dev_->pending_count() ? dev_->next_completion_time() : UINT64_MAX;
      if (next_dev < next_ev) {
        clock_.advance_to(next_dev);
      } else {
        clock_.step();
      }
      advanced = true;
    } else if (dev_->pending_count()) {
      clock_.advance_to(dev_->next_completion_time());
      advanced = true;
    }
    svc_->step(clock_.now());
    if (eng_) eng_->complete_pending(clock_.now());
    if (host_service_->poll() > 0) advanced = true;
    return advanced;
  }

  void issue_message(Client& c) {
    const WorkloadSpec& w = cfg_.workload;
    if (c.ops_issued >= c.ops_quota) return;
    uint32_t n = uint32_t(
        std::min<uint64_t>(w.requests_per_message, c.ops_quota - c.ops_issued));
    std::vector<uint8_t> payload;
    for (uint32_t i = 0; i < n; ++i) {
      // Ids are a pure function of (connection, per-connection sequence) so
      // the id->request mapping is identical whatever order the closed loop
      // interleaves connections in.
      uint64_t id = (uint64_t(c.index + 1) << 40) | c.next_seq++;
      uint64_t key = c.rng() % w.key_space;
      bool is_read =
          std::uniform_real_distribution<double>(0.0, 1.0)(c.rng) <
          w.read_fraction;
      if (is_read) {
        if (w.plugin == "kv_log") {
          append_app_request(&payload, id, AppOp::kKvGet, kv_get_body(key));
        } else {
          uint64_t lsn = versions_.count(key) ? versions_[key] : 0;
          append_app_request(&payload, id, AppOp::kPageGet,
                            page_get_body(key, lsn));
        }
      } else {
        uint64_t version = ++versions_[key];
        auto value = value_for(key, version);
        if (w.plugin == "kv_log") {
          append_app_request(&payload, id, AppOp::kKvPut,
                            kv_put_body(key, value));
        } else {
          append_app_request(&payload, id, AppOp::kPageWrite,
                            page_write_body(key, version, value));
        }
      }
      issue_time_[id] = clock_.now();
      message_of_[id] = next_msg_id_;
    }
    msg_remaining_[next_msg_id_] = n;
    msg_client_[next_msg_id_] = c.index;
    ++next_msg_id_;
    c.ops_issued += n;
    c.app->send(make_frame(n, payload));
  }

  void on_client_bytes(Client& c, std::span<const uint8_t> bytes) {
    c.rx.insert(c.rx.end(), bytes.begin(), bytes.end());
    size_t at = 0;
    while (c.rx.size() - at >= kAppResponseHeaderSize) {
      uint32_t total = detail::get_u32(c.rx.data() + at);
      if (total < kAppResponseHeaderSize || c.rx.size() - at < total) break;
      AppResponseView v{std::span<const uint8_t>(c.rx.data() + at, total)};
      retire(c, v);
      at += total;
    }
    c.rx.erase(c.rx.begin(), c.rx.begin() + long(at));
  }

  void retire(Client& c, const AppResponseView& v) {
    uint64_t id = v.app_req_id();
    auto it = issue_time_.find(id);
    if (it == issue_time_.end()) return;  // duplicate or unknown
    latencies_.push_back(clock_.now() - it->second);
    issue_time_.erase(it);
    ++completed_;
    // Order-independent content hash over (id, status, payload).
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](uint8_t b) { h = (h ^ b) * 0x100000001b3ULL; };
    for (int i = 0; i < 8; ++i) mix(uint8_t(id >> (8 * i)));
    mix(uint8_t(v.status()));
    for (uint8_t b : v.payload()) mix(b);
    payload_hash_ += h;

    uint64_t msg = message_of_[id];
    message_of_.erase(id);
    if (--msg_remaining_[msg] == 0) {
      msg_remaining_.erase(msg);
      size_t owner = msg_client_[msg];
      msg_client_.erase(msg);
      issue_message(clients_[owner]);
    }
  }

  void fill_report(SimTime start, MetricsReport* r) {
    *r = MetricsReport{};
    r->total_ops = completed_;
    SimTime span = clock_.now() - start;
    r->sim_seconds = double(span) / 1e9;
    r->throughput_ops_s =
        span > 0 ? double(completed_) / r->sim_seconds : 0.0;
    if (!latencies_.empty()) {
      std::sort(latencies_.begin(), latencies_.end());
      r->latency_p50_ns = latencies_[latencies_.size() / 2];
      r->latency_p99_ns = latencies_[latencies_.size() * 99 / 100];
    }
    r->host_path_copies = audit_.host_write_to_device.load() +
                          audit_.device_to_response.load();
    r->engine_path_copies = audit_.engine_read_path.load();
    r->host_busy_ns = host_service_->busy_ns();
    const DirectorCounters& d = director_->counters();
    r->host_served = d.responses_from_host;
    r->dpu_served = d.responses_from_engine;
    for (const auto& ep : endpoints_) {
      r->retransmissions += ep->counters().retransmissions;
      r->fast_retransmits += ep->counters().fast_retransmits;
      r->dup_acks += ep->counters().dup_acks_emitted;
    }
    r->response_payload_hash = payload_hash_;
  }

  ScenarioConfig cfg_;
  TraceLog* trace_;

  SimClock clock_;
  std::unique_ptr<SimBlockDevice> dev_;
  std::unique_ptr<RequestRing> ring_;
  std::unique_ptr<ResponseRing> resp_;
  std::unique_ptr<DmaChannel> chan_;
  std::unique_ptr<FileService> svc_;
  std::unique_ptr<HostLib> lib_;
  std::unique_ptr<PollGroup> group_;
  FileHandle handle_;
  std::unique_ptr<CacheTable> table_;
  std::unique_ptr<OffloadPlugin> plugin_;
  std::unique_ptr<PacketBufferPool> pool_;
  std::unique_ptr<OffloadEngine> eng_;
  std::unique_ptr<TrafficDirector> director_;
  std::unique_ptr<HostService> host_service_;
  CopyAudit audit_;

  std::vector<std::unique_ptr<StreamEndpoint>> endpoints_;
  std::vector<Duplex> duplexes_;
  std::vector<Client> clients_;

  uint64_t next_msg_id_ = 1;
  std::map<uint64_t, SimTime> issue_time_;
  std::map<uint64_t, uint64_t> message_of_;
  std::map<uint64_t, uint32_t> msg_remaining_;
  std::map<uint64_t, size_t> msg_client_;
  std::map<uint64_t, uint64_t> versions_;
  std::vector<uint64_t> latencies_;
  uint64_t completed_ = 0;
  uint64_t payload_hash_ = 0;
};

}  // namespace dds
