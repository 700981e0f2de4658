#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "oram/command.hpp"
#include "oram/config.hpp"
#include "oram/dram.hpp"
#include "oram/protocols.hpp"
#include "oram/workload.hpp"

namespace oram {

// One response-latency sample plus the victim-behavior label the security
// analysis conditions on.
struct LatencyObs {
  uint64_t request_index = 0;
  uint64_t issue_cycle = 0;
  uint64_t response_cycle = 0;
  bool stash_hit = false;  // block was stash-resident when the access started
};

struct SimCounters {
  uint64_t data_reads = 0, data_writes = 0;    // protocol-level block commands
  uint64_t meta_reads = 0, meta_writes = 0;
  std::array<uint64_t, 6> by_phase{};          // protocol commands per phase
  std::vector<uint64_t> row_data_commands;     // per hierarchy row
  uint64_t treetop_hits = 0;
  uint64_t dram_commands = 0;
};

struct SimResult {
  uint64_t elapsed_cycles = 0;
  uint64_t work_cycles = 0;  // cycles with at least one request in flight
  DramStats dram;
  SimCounters counters;
  uint64_t real_requests = 0;
  uint64_t dummy_requests = 0;   // protocol relief + rate padding
  uint64_t padded_dummies = 0;
  uint64_t bypasses = 0;
  std::vector<LatencyObs> observations;
  std::vector<uint64_t> leaf_sequence;  // data-row read paths (security runs)
  std::vector<uint32_t> stash_series;   // interval max stash tags per 1% progress
  std::size_t stash_max_tags = 0;
  std::vector<std::size_t> stash_max_per_row;
  uint64_t state_digest = 0;
  std::vector<uint64_t> issue_cycles;   // admission instants (pacing checks)
  double ns_per_cycle = 0.625;
};

struct SimOptions {
  bool collect_leaves = false;
  bool leak_stash_hits = false;  // negative control: stash hits observed at zero latency
  uint64_t seed = 1;
};

class SchedulerBase;

// Discrete-event driver: owns the clock, the DRAM model, the tree-top
// filter, the front-end (pacing, prefetch bypass, dummy padding) and the
// run log. A scheduler (serialized or PE mesh) decides when each phase's
// traffic issues.
class Simulator {
 public:
  Simulator(ProtocolEngine& proto, const OramConfig& ocfg, const DramConfig& dcfg,
            const MeshConfig& mcfg, Protocol kind, std::vector<TraceRecord> trace,
            IssuePolicy policy, SimOptions opts);
  ~Simulator();

  SimResult run();

  // ---- services used by schedulers ----
  uint64_t now() const { return now_; }
  const MeshConfig& mesh_config() const { return mcfg_; }
  void schedule(uint64_t cycle, uint64_t token);

  struct PhaseRun {
    const std::vector<MemCommand>* cmds = nullptr;
    std::size_t next = 0;
    std::size_t inflight = 0;
    void bind(const std::vector<MemCommand>& c) {
      cmds = &c;
      next = 0;
      inflight = 0;
    }
    bool issued_all() const { return cmds == nullptr || next == cmds->size(); }
    bool done() const { return issued_all() && inflight == 0; }
    bool empty() const { return cmds == nullptr || cmds->empty(); }
  };

  // Issue from the cursor until done or back-pressure; parks the token on the
  // saturated channel. Completions arrive as events carrying `token`.
  void pump_phase(PhaseRun& pr, uint64_t token);

  // Row-0 path read finished: resolves store-to-load forwarding and reports
  // when the response data can exist. Returns 0 when it must wait; the
  // scheduler then receives `token` once the producing fetch lands.
  uint64_t serve_ready_at(const AccessPlan& plan, uint64_t rp_done, uint64_t token);
  void note_rp_complete(const AccessPlan& plan, uint64_t cycle);

  void deliver_response(const AccessPlan& plan, uint64_t cycle);
  void plan_finished(const AccessPlan& plan);

  uint32_t treetop_levels(uint32_t row) const { return treetop_levels_[row]; }
  bool treetop_hit(const MemCommand& cmd) const {
    return cmd.tree_level < treetop_levels_[cmd.row];
  }

 private:
  friend class SerialScheduler;
  friend class MeshScheduler;

  struct Event {
    uint64_t cycle;
    uint64_t seq;
    uint8_t kind;  // 0 = scheduler token, 1 = dram completion, 2 = issue tick
    uint64_t token;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      return a.cycle != b.cycle ? a.cycle > b.cycle : a.seq > b.seq;
    }
  };

  void feed_front(uint64_t issue_cycle);  // pull trace through the bypass filter
  bool try_admit();
  void count_plan(const AccessPlan& plan);
  void flush_dram();
  void update_work_span();
  void sample_stash();

  ProtocolEngine& proto_;
  OramConfig ocfg_;
  DramConfig dcfg_;
  MeshConfig mcfg_;
  Protocol kind_;
  std::vector<TraceRecord> trace_;
  std::size_t trace_pos_ = 0;
  IssuePolicy policy_;
  SimOptions opts_;

  std::unique_ptr<DramModel> dram_;
  std::unique_ptr<SchedulerBase> sched_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> events_;
  uint64_t event_seq_ = 0;
  uint64_t now_ = 0;

  std::deque<AccessPlan> planq_;  // functionally executed, waiting for capacity
  uint64_t next_request_index_ = 1;
  std::unordered_map<uint64_t, uint64_t> rp_done_;            // request_index -> cycle
  std::unordered_map<uint64_t, std::vector<uint64_t>> rp_waiters_;  // producer -> tokens
  std::unordered_map<uint64_t, uint64_t> issue_cycle_of_;     // request_index -> cycle

  std::vector<std::vector<uint64_t>> parked_;  // per channel: tokens awaiting space
  std::vector<uint32_t> treetop_levels_;
  std::unique_ptr<PrefetchFilter> filter_;

  Rng pad_rng_;
  std::vector<std::byte> payload_buf_;

  // bookkeeping
  SimResult res_;
  uint64_t in_flight_ = 0;
  uint64_t work_since_ = 0;
  uint64_t admitted_plans_ = 0;
  uint64_t finished_plans_ = 0;
  uint64_t writes_seen_ = 0;
};

// Scheduling discipline: translates plans into timed traffic.
class SchedulerBase {
 public:
  virtual ~SchedulerBase() = default;
  virtual bool can_admit() const = 0;
  virtual void admit(AccessPlan&& plan, uint64_t now) = 0;
  virtual void on_event(uint64_t token, uint64_t now) = 0;
  virtual bool idle() const = 0;
  virtual std::string snapshot() const = 0;
};

}  // namespace oram
