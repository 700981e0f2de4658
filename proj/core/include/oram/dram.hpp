#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "oram/command.hpp"
#include "oram/config.hpp"

namespace oram {

// Aggregate timing counters for one run.
struct DramStats {
  uint64_t enqueued = 0;
  uint64_t completed = 0;
  uint64_t busy_bytes = 0;
  uint64_t transfer_cycles = 0;  // summed over channels; transfers never overlap per channel
  uint64_t row_hits = 0;
  uint64_t row_misses = 0;
  double occupancy_integral = 0;  // outstanding commands integrated over cycles
  uint64_t last_event_cycle = 0;
  std::array<uint64_t, 6> phase_service_cycles{};  // indexed by Phase

  double avg_outstanding(uint64_t elapsed) const {
    return elapsed == 0 ? 0.0 : occupancy_integral / static_cast<double>(elapsed);
  }
  double row_hit_fraction() const {
    uint64_t t = row_hits + row_misses;
    return t == 0 ? 0.0 : static_cast<double>(row_hits) / static_cast<double>(t);
  }
};

// Multi-channel, bank-aware, cycle-approximate DRAM model.
//
// Commands interleave across channels at block granularity and queue per
// channel. A command issues when its bank is free and no older queued
// command targets the same block address (per-address ordering keeps
// read-after-write intact under reordering). Arbitration is
// first-ready (open row), oldest-first, with an age cap that forces the
// oldest eligible command through to bound reordering. A row hit costs tCL,
// a miss tRP+tRCD+tCL; the data transfer then occupies the channel bus.
class DramModel {
 public:
  DramModel(const DramConfig& cfg, double clock_hz);

  // False = back-pressure, the channel queue is full.
  bool enqueue(const MemCommand& cmd, uint64_t now, uint64_t token);

  struct Issued {
    uint64_t token = 0;
    uint64_t complete = 0;
    MemCommand cmd;
  };
  // Retire in-flight work up to `now`, then issue everything issueable.
  // Completion times of newly issued commands land in `out`.
  void pump(uint64_t now, std::vector<Issued>& out);

  bool channel_has_space(const MemCommand& cmd) const;
  uint32_t channel_of(const MemCommand& cmd) const;
  std::size_t outstanding() const { return outstanding_; }

  const DramStats& stats() const { return stats_; }
  const DramConfig& config() const { return cfg_; }

  uint64_t tCL_cycles() const { return tCL_; }
  uint64_t tRCD_cycles() const { return tRCD_; }
  uint64_t tRP_cycles() const { return tRP_; }
  uint64_t transfer_cycles(uint32_t bytes) const {
    return (bytes + bytes_per_cycle_ - 1) / bytes_per_cycle_;
  }

 private:
  struct Queued {
    MemCommand cmd;
    uint64_t token;
    uint64_t enq_round;
    uint64_t enq_cycle;
    uint64_t order;  // global arrival order for age comparisons
  };
  struct Bank {
    int64_t open_row = -1;
    uint64_t free_at = 0;
  };
  struct Channel {
    std::vector<Queued> queue;
    std::vector<Bank> banks;
    uint64_t bus_free = 0;
    uint64_t round = 0;
  };

  struct BankAddr {
    uint32_t bank;
    int64_t row;
  };
  BankAddr map_bank(const MemCommand& cmd) const;
  void note_occupancy(uint64_t now);

  DramConfig cfg_;
  uint64_t tCL_, tRCD_, tRP_;
  uint32_t bytes_per_cycle_;
  std::vector<Channel> channels_;
  std::vector<uint64_t> inflight_;  // completion cycles, retired on pump
  std::size_t outstanding_ = 0;
  uint64_t order_counter_ = 0;
  DramStats stats_;
};

}  // namespace oram
