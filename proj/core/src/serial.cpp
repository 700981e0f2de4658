#include "oram/serial.hpp"

#include <sstream>

namespace oram {

namespace {
constexpr uint64_t kRetryBit = uint64_t{1} << 62;
constexpr uint64_t kServeToken = 0x5e57e0000ull;
constexpr uint64_t kStepWake = 0x57e90000ull;
}  // namespace

SerialScheduler::SerialScheduler(Simulator& sim, uint32_t levels, bool path_family)
    : sim_(sim), levels_(levels), path_family_(path_family) {}

void SerialScheduler::admit(AccessPlan&& plan, uint64_t now) {
  busy_ = true;
  plan_ = std::move(plan);
  row_ = static_cast<int32_t>(levels_) - 1;
  st_ = path_family_ ? St::Rp : St::Lm;
  bind_phase();
  // on-chip position-map consultation before the first tree touch
  sim_.schedule(now + sim_.mesh_config().onchip_posmap_latency, kStepWake);
}

void SerialScheduler::bind_phase() {
  const RowPlan& r = plan_.rows[static_cast<std::size_t>(row_)];
  switch (st_) {
    case St::Lm: run_.bind(r.lm); break;
    case St::Rp: run_.bind(r.rp); break;
    case St::EpR: run_.bind(r.ep_reads); break;
    case St::EpW: run_.bind(r.ep_writes); break;
    case St::ErR: run_.bind(r.er_reads); break;
    case St::ErW: run_.bind(r.er_writes); break;
    default: run_ = Simulator::PhaseRun{}; break;
  }
}

// Tokens name the (row, phase) a command belongs to so that completions of
// posted writes from an abandoned phase never touch the current one.
uint64_t SerialScheduler::phase_token() const {
  return 0x100u | (static_cast<uint64_t>(row_) << 4) | static_cast<uint64_t>(st_);
}

void SerialScheduler::next_row(uint64_t now) {
  if (row_ == 0) {
    busy_ = false;
    sim_.plan_finished(plan_);
    return;
  }
  --row_;
  st_ = path_family_ ? St::Rp : St::Lm;
  bind_phase();
  sim_.schedule(now + sim_.mesh_config().signal_latency, kStepWake);
}

bool SerialScheduler::phase_step(uint64_t now) {
  (void)now;
  bool posted = (st_ == St::EpW || st_ == St::ErW);
  sim_.pump_phase(run_, phase_token());
  return posted ? run_.issued_all() : run_.done();
}

void SerialScheduler::pump(uint64_t now) {
  while (busy_) {
    if (st_ == St::Serve) {
      if (serve_pending_) return;
      serve_pending_ = true;
      uint64_t rdy = sim_.serve_ready_at(plan_, now, kServeToken);
      if (rdy != 0)
        sim_.schedule(std::max(now, rdy) + sim_.mesh_config().onchip_sram_latency, kServeToken);
      return;
    }
    if (!phase_step(now)) return;
    switch (st_) {
      case St::Lm: st_ = St::Rp; break;
      case St::Rp:
        if (row_ == 0) {
          sim_.note_rp_complete(plan_, now);
          st_ = St::Serve;
        } else {
          st_ = path_family_ ? St::EpW : St::EpR;
        }
        break;
      case St::EpR: st_ = St::EpW; break;
      case St::EpW: st_ = path_family_ ? St::RowDone : St::ErR; break;
      case St::ErR: st_ = St::ErW; break;
      case St::ErW: st_ = St::RowDone; break;
      case St::Serve:
      case St::RowDone: break;
    }
    if (st_ == St::RowDone) {
      next_row(now);
      return;
    }
    if (st_ != St::Serve) bind_phase();
  }
}

void SerialScheduler::on_event(uint64_t token, uint64_t now) {
  if (!busy_) return;
  if (token & kRetryBit) {
    pump(now);
    return;
  }
  if (token == kServeToken) {
    if (st_ == St::Serve && serve_pending_) {
      uint64_t rdy = sim_.serve_ready_at(plan_, now, kServeToken);
      if (rdy == 0) return;  // producing fetch still in flight
      uint64_t at = rdy + sim_.mesh_config().onchip_sram_latency;
      if (now < at) {
        sim_.schedule(at, kServeToken);
        return;
      }
      serve_pending_ = false;
      sim_.deliver_response(plan_, now);
      st_ = path_family_ ? St::EpW : St::EpR;
      bind_phase();
      pump(now);
    }
    return;
  }
  if (token == kStepWake) {
    pump(now);
    return;
  }
  // command completion: only the current phase's counter may move
  if (token == phase_token()) {
    if (run_.inflight > 0) --run_.inflight;
    pump(now);
  }
}

std::string SerialScheduler::snapshot() const {
  std::ostringstream os;
  os << "serial scheduler: busy=" << busy_ << " row=" << row_
     << " state=" << static_cast<int>(st_) << " issued=" << run_.next
     << " inflight=" << run_.inflight;
  return os.str();
}

}  // namespace oram
