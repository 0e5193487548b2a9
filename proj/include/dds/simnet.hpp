// Deterministic discrete-event transport: a virtual clock, latency/loss
// links, and reliable byte-stream endpoints with cumulative ACKs and
// duplicate-ACK fast retransmit.
#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dds/dma.hpp"

namespace dds {

// ---------------------------------------------------------------------------
// Virtual clock / event loop.  Events fire in nondecreasing time; ties are
// broken by insertion order so a run is a pure function of its inputs.
// ---------------------------------------------------------------------------
class SimClock {
 public:
  using Fn = std::function<void()>;

  SimTime now() const { return now_; }

  void schedule_at(SimTime t, Fn fn) {
    if (t < now_) t = now_;
    queue_.push(Event{t, seq_++, std::move(fn)});
  }
  void schedule_after(SimTime delta, Fn fn) {
    schedule_at(now_ + delta, std::move(fn));
  }

  // Runs one event; returns false when the queue is empty.
  bool step() {
    if (queue_.empty()) return false;
    Event e = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ = e.time;
    e.fn();
    return true;
  }

  void run_until_idle(uint64_t max_events = UINT64_MAX) {
    for (uint64_t i = 0; i < max_events && step(); ++i) {
    }
  }

  void run_until(SimTime deadline) {
    while (!queue_.empty() && queue_.top().time <= deadline) step();
    if (now_ < deadline) now_ = deadline;
  }

  size_t pending_events() const { return queue_.size(); }

  std::optional<SimTime> next_event_time() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.top().time;
  }

  // Advances virtual time, running any events due on the way.
  void advance_to(SimTime t) { run_until(t); }

 private:
  struct Event {
    SimTime time;
    uint64_t seq;
    Fn fn;
    bool operator>(const Event& o) const {
      if (time != o.time) return o.time < time;
      return o.seq < seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  SimTime now_ = 0;
  uint64_t seq_ = 0;
};

// ---------------------------------------------------------------------------
// Trace log: CSV rows of (time, component, event, detail) plus a running
// FNV-1a hash so determinism can be asserted cheaply.
// ---------------------------------------------------------------------------
class TraceLog {
 public:
  void record(SimTime t, std::string_view component, std::string_view event,
              std::string_view detail) {
    std::string line;
    line.reserve(32 + component.size() + event.size() + detail.size());
    line += std::to_string(t);
    line += ',';
    line += component;
    line += ',';
    line += event;
    line += ',';
    line += detail;
    for (unsigned char c : line) hash_ = (hash_ ^ c) * 0x100000001b3ULL;
    hash_ = (hash_ ^ '\n') * 0x100000001b3ULL;
    lines_.push_back(std::move(line));
  }

  uint64_t hash() const { return hash_; }
  const std::vector<std::string>& lines() const { return lines_; }

  std::string csv() const {
    std::string out = "time,component,event,detail\n";
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
  uint64_t hash_ = 0xcbf29ce484222325ULL;
};

// ---------------------------------------------------------------------------
// Segments and links.
// ---------------------------------------------------------------------------
struct Segment {
  uint64_t seq = 0;  // byte offset of payload[0] in the stream
  uint64_t ack = 0;  // cumulative: next byte expected by the sender of this
  bool is_ack = false;
  std::vector<uint8_t> payload;
};

struct LinkConfig {
  SimTime latency_ns = 5'000;   // one-way, intra-rack scale
  SimTime inspect_ns = 2'000;   // added when an interceptor examines a segment
  double loss_rate = 0.0;       // applies to data segments only
  uint64_t seed = 1;
};

// Unidirectional link.  An interceptor (when set) sees every segment after
// the propagation delay and may consume it (return false) instead of letting
// it reach the endpoint — this is how a transparent middlebox is modeled.
class Link {
 public:
  using DeliverFn = std::function<void(const Segment&)>;
  using Interceptor = std::function<bool(const Segment&)>;

  Link(SimClock* clock, std::string name, const LinkConfig& cfg,
       TraceLog* trace = nullptr)
      : clock_(clock), name_(std::move(name)), cfg_(cfg), rng_(cfg.seed),
        trace_(trace) {}

  void set_deliver(DeliverFn fn) { deliver_ = std::move(fn); }
  void set_interceptor(Interceptor fn) { interceptor_ = std::move(fn); }

  void transmit(Segment seg) {
    if (!seg.is_ack && cfg_.loss_rate > 0.0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(rng_) <
            cfg_.loss_rate) {
      ++dropped_;
      if (trace_) {
        trace_->record(clock_->now(), name_, "drop",
                       "seq=" + std::to_string(seg.seq) +
                           " len=" + std::to_string(seg.payload.size()));
      }
      return;
    }
    SimTime delay = cfg_.latency_ns + (interceptor_ ? cfg_.inspect_ns : 0);
    clock_->schedule_after(delay, [this, s = std::move(seg)]() mutable {
      if (interceptor_ && !interceptor_(s)) {
        if (trace_) {
          trace_->record(clock_->now(), name_, "divert",
                         "seq=" + std::to_string(s.seq) +
                             " len=" + std::to_string(s.payload.size()));
        }
        return;
      }
      if (deliver_) deliver_(s);
    });
  }

  uint64_t dropped() const { return dropped_; }

 private:
  SimClock* clock_;
  std::string name_;
  LinkConfig cfg_;
  std::mt19937_64 rng_;
  TraceLog* trace_;
  DeliverFn deliver_;
  Interceptor interceptor_;
  uint64_t dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Reliable byte-stream endpoint.  Go-back-N style: on timeout or on the
// third duplicate ACK the sender resends everything between the expected
// sequence number and the highest sequence sent.
// ---------------------------------------------------------------------------
struct StreamCounters {
  uint64_t segments_sent = 0;
  uint64_t segments_received = 0;
  uint64_t retransmissions = 0;  // data segments re-sent
  uint64_t dup_acks = 0;         // duplicate ACKs this endpoint received
  uint64_t dup_acks_emitted = 0; // duplicate ACKs this endpoint sent
  uint64_t fast_retransmits = 0; // go-back-N bursts triggered by 3 dup ACKs
};

struct EndpointConfig {
  uint32_t mtu = 1500;         // payload bytes per segment
  SimTime rto_ns = 400'000;    // retransmission timeout
};

class StreamEndpoint {
 public:
  using OnDeliver = std::function<void(std::span<const uint8_t>)>;

  StreamEndpoint(SimClock* clock, std::string name,
                 const EndpointConfig& cfg = {}, TraceLog* trace = nullptr)
      : clock_(clock), name_(std::move(name)), cfg_(cfg), trace_(trace) {}

  void set_outbound(Link* link) { out_ = link; }
  void set_on_deliver(OnDeliver fn) { on_deliver_ = std::move(fn); }
  const std::string& name() const { return name_; }
  const StreamCounters& counters() const { return counters_; }
  const EndpointConfig& config() const { return cfg_; }

  uint64_t bytes_sent() const { return stream_.size(); }
  uint64_t bytes_acked() const { return snd_una_; }
  uint64_t bytes_delivered() const { return rcv_next_; }
  bool all_acked() const { return snd_una_ == stream_.size(); }

  // Appends to the outgoing stream and transmits MTU-sized segments.
  void send(std::span<const uint8_t> bytes) {
    stream_.insert(stream_.end(), bytes.begin(), bytes.end());
    if (snd_una_ == snd_nxt_) last_progress_ = clock_->now();
    transmit_range(snd_nxt_, stream_.size(), /*retransmit=*/false);
    snd_nxt_ = stream_.size();
    arm_timer();
  }

  // Entry point for segments arriving from the peer's link.
  void deliver_segment(const Segment& seg) {
    ++counters_.segments_received;
    if (seg.is_ack) {
      handle_ack(seg.ack);
      return;
    }
    handle_data(seg);
  }

 private:
  void transmit_range(uint64_t from, uint64_t to, bool retransmit) {
    for (uint64_t at = from; at < to;) {
      uint64_t take = std::min<uint64_t>(cfg_.mtu, to - at);
      Segment seg;
      seg.seq = at;
      seg.payload.assign(stream_.begin() + long(at),
                         stream_.begin() + long(at + take));
      ++counters_.segments_sent;
      if (retransmit) ++counters_.retransmissions;
      if (trace_) {
        trace_->record(clock_->now(), name_,
                       retransmit ? "retransmit" : "send",
                       "seq=" + std::to_string(at) +
                           " len=" + std::to_string(take));
      }
      if (out_) out_->transmit(std::move(seg));
      at += take;
    }
  }

  void handle_ack(uint64_t ack) {
    if (ack > snd_una_) {
      snd_una_ = ack;
      dup_count_ = 0;
      last_progress_ = clock_->now();
      if (trace_) {
        trace_->record(clock_->now(), name_, "ack_advance",
                       "una=" + std::to_string(snd_una_));
      }
      return;
    }
    if (ack == snd_una_ && snd_nxt_ > snd_una_) {
      ++counters_.dup_acks;
      if (++dup_count_ == 3) {
        dup_count_ = 0;
        ++counters_.fast_retransmits;
        if (trace_) {
          trace_->record(clock_->now(), name_, "fast_retransmit",
                         "from=" + std::to_string(snd_una_));
        }
        transmit_range(snd_una_, snd_nxt_, /*retransmit=*/true);
      }
    }
  }

  void handle_data(const Segment& seg) {
    uint64_t end = seg.seq + seg.payload.size();
    if (end <= rcv_next_) {
      send_ack(/*dup=*/false);  // stale duplicate; refresh the peer
      return;
    }
    if (seg.seq > rcv_next_) {
      ooo_.emplace(seg.seq, seg.payload);
      ++counters_.dup_acks_emitted;
      if (trace_) {
        trace_->record(clock_->now(), name_, "dup_ack",
                       "expected=" + std::to_string(rcv_next_) +
                           " got=" + std::to_string(seg.seq));
      }
      send_ack(/*dup=*/true);
      return;
    }
    // In order (possibly overlapping the front).
    size_t skip = size_t(rcv_next_ - seg.seq);
    deliver_bytes({seg.payload.data() + skip, seg.payload.size() - skip});
    rcv_next_ = end;
    // Drain any contiguous out-of-order segments.
    for (auto it = ooo_.begin(); it != ooo_.end();) {
      if (it->first > rcv_next_) break;
      uint64_t seg_end = it->first + it->second.size();
      if (seg_end > rcv_next_) {
        size_t off = size_t(rcv_next_ - it->first);
        deliver_bytes({it->second.data() + off, it->second.size() - off});
        rcv_next_ = seg_end;
      }
      it = ooo_.erase(it);
    }
    send_ack(/*dup=*/false);
  }

  void deliver_bytes(std::span<const uint8_t> bytes) {
    if (trace_) {
      trace_->record(clock_->now(), name_, "deliver",
                     "len=" + std::to_string(bytes.size()));
    }
    if (on_deliver_) on_deliver_(bytes);
  }

  void send_ack(bool) {
    Segment ack;
    ack.is_ack = true;
    ack.ack = rcv_next_;
    if (out_) out_->transmit(std::move(ack));
  }

  void arm_timer() {
    if (timer_armed_) return;
    timer_armed_ = true;
    clock_->schedule_after(cfg_.rto_ns, [this] { on_timer(); });
  }

  void on_timer() {
    timer_armed_ = false;
    if (snd_una_ >= snd_nxt_) return;  // everything acknowledged
    // An ACK (or a fresh first send) restarted the clock on the outstanding
    // data; defer to the restarted deadline instead of retransmitting early.
    SimTime deadline = last_progress_ + cfg_.rto_ns;
    if (clock_->now() < deadline) {
      timer_armed_ = true;
      clock_->schedule_at(deadline, [this] { on_timer(); });
      return;
    }
    if (trace_) {
      trace_->record(clock_->now(), name_, "rto",
                     "from=" + std::to_string(snd_una_));
    }
    transmit_range(snd_una_, snd_nxt_, /*retransmit=*/true);
    arm_timer();
  }

  SimClock* clock_;
  std::string name_;
  EndpointConfig cfg_;
  TraceLog* trace_;
  Link* out_ = nullptr;
  OnDeliver on_deliver_;

  std::vector<uint8_t> stream_;  // full outgoing byte stream
  uint64_t snd_una_ = 0;         // lowest unacknowledged byte
  uint64_t snd_nxt_ = 0;         // next byte to send
  int dup_count_ = 0;
  bool timer_armed_ = false;
  SimTime last_progress_ = 0;

  uint64_t rcv_next_ = 0;                         // next byte expected
  std::map<uint64_t, std::vector<uint8_t>> ooo_;  // out-of-order segments
  StreamCounters counters_;
};

// Wires two endpoints together with a pair of unidirectional links.
struct Duplex {
  std::unique_ptr<Link> a_to_b;
  std::unique_ptr<Link> b_to_a;
};

inline Duplex connect(SimClock* clock, StreamEndpoint* a, StreamEndpoint* b,
                      const LinkConfig& cfg = {}, TraceLog* trace = nullptr) {
  Duplex d;
  LinkConfig fwd = cfg;
  LinkConfig rev = cfg;
  rev.seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  d.a_to_b = std::make_unique<Link>(clock, a->name() + "->" + b->name(), fwd,
                                    trace);
  d.b_to_a = std::make_unique<Link>(clock, b->name() + "->" + a->name(), rev,
                                    trace);
  d.a_to_b->set_deliver([b](const Segment& s) { b->deliver_segment(s); });
  d.b_to_a->set_deliver([a](const Segment& s) { a->deliver_segment(s); });
  a->set_outbound(d.a_to_b.get());
  b->set_outbound(d.b_to_a.get());
  return d;
}

}  // namespace dds
