#pragma once

#include <cstdint>
#include <functional>

namespace dds {

// Simulated time in nanoseconds.
using SimTime = uint64_t;

// Cost and accounting model for the host<->DPU channel. Every ring access by
// the DPU goes through one of the accrue_* calls, so tests can assert the
// exact operation mix (e.g. one cursor read per successful poll) and the
// scenario clock can charge transfer time.
struct DmaChannel {
  SimTime op_latency_ns = 1000;     // fixed cost per DMA operation
  double per_byte_ns = 0.15625;     // 0.01 us per 64 B

  uint64_t cursor_reads = 0;
  uint64_t data_reads = 0;
  uint64_t head_writes = 0;
  uint64_t data_writes = 0;
  SimTime accrued_ns = 0;

  // Fired after a response batch is DMA-written, to wake sleeping pollers.
  std::function<void()> interrupt_hook;

  void accrue_cursor_read() {
    ++cursor_reads;
    accrued_ns += op_latency_ns;
  }
  void accrue_data_read(uint64_t bytes) {
    ++data_reads;
    accrued_ns += op_latency_ns + SimTime(per_byte_ns * double(bytes));
  }
  void accrue_head_write() {
    ++head_writes;
    accrued_ns += op_latency_ns;
  }
  void accrue_data_write(uint64_t bytes) {
    ++data_writes;
    accrued_ns += op_latency_ns + SimTime(per_byte_ns * double(bytes));
  }

  uint64_t total_ops() const {
    return cursor_reads + data_reads + head_writes + data_writes;
  }

  // Drains the accrued time, returning the delta since the last take. The
  // scenario driver uses this to schedule downstream events.
  SimTime take_accrued() {
    SimTime t = accrued_ns;
    accrued_ns = 0;
    return t;
  }

  void reset_counters() {
    cursor_reads = data_reads = head_writes = data_writes = 0;
    accrued_ns = 0;
  }
};

}  // namespace dds
