#pragma once

#include <deque>
#include <map>
#include <optional>

#include "oram/sim.hpp"

namespace oram {

// Per-PE snapshot (diagnostics and tests).
struct PeState {
  uint32_t row = 0;
  uint32_t col = 0;
  Phase phase = Phase::CP;
  bool busy = false;
  bool west_clear = false;
  bool child_response = false;
  uint64_t seq = 0;
};

// Discrete-event model of the rows x cols PE array running the concurrent
// protocol. Each column serves one request; each row serves one sub-ORAM.
// Sibling dependencies travel as clear signals in issue order around the
// ring; parent/child queries and responses hop between rows. An online
// monitor asserts that every executed overlap respects the dependency
// contract.
class MeshScheduler : public SchedulerBase {
 public:
  MeshScheduler(Simulator& sim, uint32_t levels, uint32_t a, bool sw_mode);

  bool can_admit() const override { return !free_cols_.empty(); }
  void admit(AccessPlan&& plan, uint64_t now) override;
  void on_event(uint64_t token, uint64_t now) override;
  bool idle() const override { return busy_cols_ == 0; }
  std::string snapshot() const override;

  PeState pe_state(uint32_t row, uint32_t col) const;
  // Column that held each admitted request, in admission order (tests).
  const std::vector<uint32_t>& admission_columns() const { return admit_cols_; }

 private:
  enum class St : uint8_t {
    Idle,
    WaitChild,  // CP sent, waiting for the mapped leaf
    WaitClear,  // leaf known, waiting for the sibling clear
    Lm,
    ErR,
    ErW,
    Rp,
    EpR,
    EpW,
    Done
  };
  enum Code : uint64_t {
    kLm = 1,
    kErR,
    kErW,
    kRp,
    kEpR,
    kEpW,
    kChildResp,
    kClearFire,
    kServe,
    kWriteGate
  };

  struct RowFsm {
    St st = St::Idle;
    Simulator::PhaseRun run;
    bool child_resp = false;
    bool er_done = false;
    bool rp_done = false;
    bool ep_done = false;
    bool responded = false;
    bool serve_done = false;
    bool clear_sent = false;
    bool rp_issued_noted = false;
  };
  struct Column {
    bool busy = false;
    AccessPlan plan;
    std::vector<RowFsm> rows;
    uint64_t admit_cycle = 0;
  };

  static uint64_t token(uint32_t col, uint32_t row, Code c) {
    return (uint64_t{col} << 16) | (uint64_t{row} << 8) | uint64_t{c};
  }

  void advance(uint32_t col, uint32_t row, uint64_t now);
  void start_lm_if_ready(uint32_t col, uint32_t row, uint64_t now);
  void fire_clear(uint32_t col, uint32_t row, uint64_t now);
  void note_rp_issued(uint32_t col, uint32_t row);
  void wake_write_gate(uint32_t row, uint64_t now);
  void check_column_done(uint32_t col, uint64_t now);
  bool write_gate_open(uint32_t row, uint64_t seq) const;

  Simulator& sim_;
  uint32_t levels_, cols_, a_;
  bool sw_mode_;
  std::vector<Column> columns_;
  std::deque<uint32_t> free_cols_;  // least-recently-freed first
  uint32_t busy_cols_ = 0;

  // per row ordering state, keyed on dense per-row seq
  std::vector<uint64_t> clear_head_;      // last seq whose clear has fired
  std::vector<uint64_t> er_done_head_;    // monitor: ER completions stay in order
  std::vector<uint64_t> rp_issued_head_;  // all seqs <= head fully issued RP
  std::vector<std::map<uint64_t, uint32_t>> rp_issued_pending_;   // seq -> col
  std::vector<std::map<uint64_t, uint32_t>> wait_clear_cols_;     // seq -> col
  std::vector<std::map<uint64_t, uint32_t>> wait_gate_cols_;      // seq -> col

  std::vector<uint32_t> admit_cols_;
};

}  // namespace oram
