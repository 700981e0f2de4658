#include "oram/mesh.hpp"

#include <algorithm>
#include <sstream>

#include "oram/errors.hpp"

namespace oram {

namespace {
constexpr uint64_t kRetryBit = uint64_t{1} << 62;
}

MeshScheduler::MeshScheduler(Simulator& sim, uint32_t levels, uint32_t a, bool sw_mode)
    : sim_(sim), levels_(levels), cols_(sim.mesh_config().cols), a_(a), sw_mode_(sw_mode) {
  columns_.resize(cols_);
  for (uint32_t c = 0; c < cols_; ++c) free_cols_.push_back(c);
  clear_head_.assign(levels_, 0);
  er_done_head_.assign(levels_, 0);
  rp_issued_head_.assign(levels_, 0);
  rp_issued_pending_.resize(levels_);
  wait_clear_cols_.resize(levels_);
  wait_gate_cols_.resize(levels_);
}

void MeshScheduler::admit(AccessPlan&& plan, uint64_t now) {
  uint32_t col = free_cols_.front();
  free_cols_.pop_front();
  admit_cols_.push_back(col);
  Column& c = columns_[col];
  c.busy = true;
  c.plan = std::move(plan);
  c.admit_cycle = now;
  c.rows.assign(levels_, RowFsm{});
  ++busy_cols_;
  for (uint32_t r = 0; r < levels_; ++r) c.rows[r].st = St::WaitChild;
  // CP query chain hops to the top row, which consults the on-chip map.
  uint32_t top = levels_ - 1;
  uint64_t at = now + uint64_t{levels_ - 1} * sim_.mesh_config().signal_latency +
                sim_.mesh_config().onchip_posmap_latency;
  sim_.schedule(at, token(col, top, kChildResp));
}

bool MeshScheduler::write_gate_open(uint32_t row, uint64_t seq) const {
  return rp_issued_head_[row] >= seq - 1;
}

void MeshScheduler::note_rp_issued(uint32_t col, uint32_t row) {
  uint64_t seq = columns_[col].plan.rows[row].seq;
  rp_issued_pending_[row][seq] = col;
  auto& pend = rp_issued_pending_[row];
  while (true) {
    auto it = pend.find(rp_issued_head_[row] + 1);
    if (it == pend.end()) break;
    rp_issued_head_[row] = it->first;
    pend.erase(it);
  }
}

void MeshScheduler::wake_write_gate(uint32_t row, uint64_t now) {
  auto& waiting = wait_gate_cols_[row];
  while (!waiting.empty()) {
    auto it = waiting.begin();
    if (!write_gate_open(row, it->first)) break;
    uint32_t col = it->second;
    waiting.erase(it);
    advance(col, row, now);
  }
}

void MeshScheduler::start_lm_if_ready(uint32_t col, uint32_t row, uint64_t now) {
  Column& c = columns_[col];
  RowFsm& f = c.rows[row];
  if (f.st == St::WaitChild && f.child_resp) f.st = St::WaitClear;
  if (f.st != St::WaitClear) return;
  uint64_t seq = c.plan.rows[row].seq;
  if (clear_head_[row] < seq - 1) {
    wait_clear_cols_[row][seq] = col;
    return;
  }
  // dependency monitor: LM may only start once the sibling clear arrived and
  // the child row returned the mapped leaf
  if (!f.child_resp)
    throw ProtocolViolation("monitor: LM without a child response");
  f.st = St::Lm;
  f.run.bind(c.plan.rows[row].lm);
  advance(col, row, now);
}

void MeshScheduler::fire_clear(uint32_t col, uint32_t row, uint64_t now) {
  Column& c = columns_[col];
  uint64_t seq = c.plan.rows[row].seq;
  if (seq != clear_head_[row] + 1)
    throw ProtocolViolation("monitor: sibling clears fired out of issue order");
  clear_head_[row] = seq;
  auto it = wait_clear_cols_[row].find(seq + 1);
  if (it != wait_clear_cols_[row].end()) {
    uint32_t wcol = it->second;
    wait_clear_cols_[row].erase(it);
    Column& wc = columns_[wcol];
    if (wc.rows[row].st == St::WaitClear) start_lm_if_ready(wcol, row, now);
  }
}

void MeshScheduler::check_column_done(uint32_t col, uint64_t now) {
  Column& c = columns_[col];
  for (uint32_t r = 0; r < levels_; ++r) {
    if (c.rows[r].st != St::Done) return;
  }
  if (!c.rows[0].serve_done) return;
  c.busy = false;
  --busy_cols_;
  free_cols_.push_back(col);  // least-recently-freed admission order
  sim_.plan_finished(c.plan);
  (void)now;
}

void MeshScheduler::advance(uint32_t col, uint32_t row, uint64_t now) {
  Column& c = columns_[col];
  RowFsm& f = c.rows[row];
  RowPlan& rp = c.plan.rows[row];
  while (true) {
    switch (f.st) {
      case St::Idle:
      case St::WaitChild:
      case St::WaitClear:
        return;
      case St::Lm:
        sim_.pump_phase(f.run, token(col, row, kLm));
        if (!f.run.done()) return;
        f.st = St::ErR;
        f.run.bind(rp.er_reads);
        break;
      case St::ErR:
        sim_.pump_phase(f.run, token(col, row, kErR));
        if (!f.run.done()) return;
        f.st = St::ErW;
        f.run.bind(rp.er_writes);
        break;
      case St::ErW:
        // Bucket rewrites must not race older requests' still-unissued path
        // reads of the same tree (per-address ordering needs arrival order).
        if (!rp.er_writes.empty() && !write_gate_open(row, rp.seq)) {
          wait_gate_cols_[row][rp.seq] = col;
          return;
        }
        sim_.pump_phase(f.run, token(col, row, kErW));
        if (!f.run.issued_all()) return;  // writes are posted once enqueued
        if (!f.er_done) {
          f.er_done = true;
          if (er_done_head_[row] != rp.seq - 1)
            throw ProtocolViolation("monitor: ER completions out of issue order");
          er_done_head_[row] = rp.seq;
          if (!rp.evict_due && !f.clear_sent) {
            f.clear_sent = true;
            sim_.schedule(now + sim_.mesh_config().signal_latency, token(col, row, kClearFire));
          }
        }
        f.st = St::Rp;
        f.run.bind(rp.rp);
        break;
      case St::Rp:
        if (!f.er_done) throw ProtocolViolation("monitor: RP before own reshuffle finished");
        sim_.pump_phase(f.run, token(col, row, kRp));
        if (f.run.issued_all() && !f.rp_issued_noted) {
          f.rp_issued_noted = true;
          note_rp_issued(col, row);
          wake_write_gate(row, now);
        }
        if (!f.run.done()) return;
        f.rp_done = true;
        if (row == 0) {
          sim_.note_rp_complete(c.plan, now);
          uint64_t rdy = sim_.serve_ready_at(c.plan, now, token(col, 0, kServe));
          if (rdy != 0) {
            uint64_t lat = sim_.mesh_config().onchip_sram_latency;
            sim_.schedule(std::max(now, rdy) + lat, token(col, 0, kServe));
          }
        } else if (!sw_mode_) {
          sim_.schedule(now + sim_.mesh_config().signal_latency, token(col, row - 1, kChildResp));
        }
        if (rp.evict_due) {
          f.st = St::EpR;
          f.run.bind(rp.ep_reads);
          break;
        }
        f.st = St::Done;
        if (sw_mode_ && row > 0)
          sim_.schedule(now + sim_.mesh_config().signal_latency, token(col, row - 1, kChildResp));
        check_column_done(col, now);
        return;
      case St::EpR:
        if (!f.rp_done) throw ProtocolViolation("monitor: EP before own RP completed");
        sim_.pump_phase(f.run, token(col, row, kEpR));
        if (!f.run.done()) return;
        f.st = St::EpW;
        f.run.bind(rp.ep_writes);
        break;
      case St::EpW:
        if (!write_gate_open(row, rp.seq)) {
          wait_gate_cols_[row][rp.seq] = col;
          return;
        }
        sim_.pump_phase(f.run, token(col, row, kEpW));
        if (!f.run.issued_all()) return;
        if (!f.ep_done) {
          f.ep_done = true;
          if (!f.clear_sent) {
            f.clear_sent = true;
            sim_.schedule(now + sim_.mesh_config().signal_latency, token(col, row, kClearFire));
          }
        }
        f.st = St::Done;
        if (sw_mode_ && row > 0)
          sim_.schedule(now + sim_.mesh_config().signal_latency, token(col, row - 1, kChildResp));
        check_column_done(col, now);
        return;
      case St::Done:
        return;
    }
  }
}

void MeshScheduler::on_event(uint64_t tok, uint64_t now) {
  bool retry = (tok & kRetryBit) != 0;
  tok &= ~kRetryBit;
  uint32_t col = static_cast<uint32_t>(tok >> 16);
  uint32_t row = static_cast<uint32_t>((tok >> 8) & 0xff);
  Code code = static_cast<Code>(tok & 0xff);
  if (col >= cols_ || row >= levels_) return;
  Column& c = columns_[col];
  if (!c.busy) return;
  RowFsm& f = c.rows[row];

  if (retry) {
    advance(col, row, now);
    return;
  }
  switch (code) {
    case kChildResp:
      f.child_resp = true;
      start_lm_if_ready(col, row, now);
      break;
    case kClearFire:
      fire_clear(col, row, now);
      break;
    case kServe: {
      if (f.serve_done) break;
      uint64_t rdy = sim_.serve_ready_at(c.plan, now, token(col, 0, kServe));
      if (rdy == 0) break;
      uint64_t lat = sim_.mesh_config().onchip_sram_latency;
      if (now < rdy + lat) {
        sim_.schedule(rdy + lat, token(col, 0, kServe));
        break;
      }
      f.serve_done = true;
      sim_.deliver_response(c.plan, now);
      check_column_done(col, now);
      break;
    }
    case kLm:
    case kErR:
    case kErW:
    case kRp:
    case kEpR:
    case kEpW: {
      // completion for the phase this token names; stale posted-write
      // completions are ignored
      St want = code == kLm    ? St::Lm
                : code == kErR ? St::ErR
                : code == kErW ? St::ErW
                : code == kRp  ? St::Rp
                : code == kEpR ? St::EpR
                               : St::EpW;
      if (f.st == want && f.run.inflight > 0) --f.run.inflight;
      advance(col, row, now);
      break;
    }
    default:
      break;
  }
}

PeState MeshScheduler::pe_state(uint32_t row, uint32_t col) const {
  PeState s;
  s.row = row;
  s.col = col;
  const Column& c = columns_[col];
  s.busy = c.busy;
  if (!c.busy) return s;
  const RowFsm& f = c.rows[row];
  s.seq = c.plan.rows[row].seq;
  s.child_response = f.child_resp;
  s.west_clear = clear_head_[row] >= s.seq - 1;
  switch (f.st) {
    case St::Idle:
    case St::WaitChild:
    case St::WaitClear: s.phase = Phase::CP; break;
    case St::Lm: s.phase = Phase::LM; break;
    case St::ErR:
    case St::ErW: s.phase = Phase::ER; break;
    case St::Rp: s.phase = Phase::RP; break;
    case St::EpR:
    case St::EpW: s.phase = Phase::EP; break;
    case St::Done: s.phase = Phase::Serve; break;
  }
  return s;
}

std::string MeshScheduler::snapshot() const {
  std::ostringstream os;
  os << "mesh " << levels_ << "x" << cols_ << " busy=" << busy_cols_ << "\n";
  for (uint32_t col = 0; col < cols_; ++col) {
    const Column& c = columns_[col];
    if (!c.busy) continue;
    os << " col " << col << " req " << c.plan.request_index << ":";
    for (uint32_t r = 0; r < levels_; ++r) {
      os << " row" << r << "=st" << static_cast<int>(c.rows[r].st)
         << "(issued " << c.rows[r].run.next << ", inflight " << c.rows[r].run.inflight << ")";
    }
    os << "\n";
  }
  for (uint32_t r = 0; r < levels_; ++r) {
    os << " row " << r << ": clear_head=" << clear_head_[r]
       << " rp_issued_head=" << rp_issued_head_[r] << "\n";
  }
  return os.str();
}

}  // namespace oram
