#pragma once

#include "oram/sim.hpp"

namespace oram {

// One request at a time, sub-ORAMs strictly in recursion order, phases in
// protocol order with a barrier after every read batch. Trailing writes are
// posted: the next phase (and the next request) starts once they are
// enqueued at the memory controller, not when they complete.
class SerialScheduler : public SchedulerBase {
 public:
  SerialScheduler(Simulator& sim, uint32_t levels, bool path_family);

  bool can_admit() const override { return !busy_; }
  void admit(AccessPlan&& plan, uint64_t now) override;
  void on_event(uint64_t token, uint64_t now) override;
  bool idle() const override { return !busy_; }
  std::string snapshot() const override;

 private:
  enum class St : uint8_t { Lm, Rp, Serve, EpR, EpW, ErR, ErW, RowDone };

  void pump(uint64_t now);
  bool phase_step(uint64_t now);  // returns true when the current phase finished
  void bind_phase();
  void next_row(uint64_t now);
  uint64_t phase_token() const;

  Simulator& sim_;
  uint32_t levels_;
  bool path_family_;
  bool busy_ = false;
  AccessPlan plan_;
  int32_t row_ = 0;  // counts down from levels-1
  St st_ = St::Lm;
  Simulator::PhaseRun run_;
  bool serve_pending_ = false;
};

}  // namespace oram
