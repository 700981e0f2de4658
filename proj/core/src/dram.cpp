#include "oram/dram.hpp"

#include <algorithm>
#include <cmath>

#include "oram/errors.hpp"

namespace oram {

DramModel::DramModel(const DramConfig& cfg, double clock_hz) : cfg_(cfg) {
  cfg.validate();
  auto cycles = [clock_hz](double ns) {
    return static_cast<uint64_t>(std::llround(ns * clock_hz / 1e9));
  };
  tCL_ = std::max<uint64_t>(1, cycles(cfg.tCL_ns));
  tRCD_ = cycles(cfg.tRCD_ns);
  tRP_ = cycles(cfg.tRP_ns);
  double bpc = cfg.per_channel_bw() / clock_hz;
  bytes_per_cycle_ = std::max<uint32_t>(1, static_cast<uint32_t>(std::llround(bpc)));
  channels_.resize(cfg.channels);
  for (auto& ch : channels_) ch.banks.resize(cfg.banks_per_channel);
}

uint32_t DramModel::channel_of(const MemCommand& cmd) const {
  return static_cast<uint32_t>((cmd.addr / cmd.size) & (cfg_.channels - 1));
}

DramModel::BankAddr DramModel::map_bank(const MemCommand& cmd) const {
  uint64_t block = cmd.addr / cmd.size;
  uint64_t local = block / cfg_.channels;
  uint64_t blocks_per_row = std::max<uint64_t>(1, cfg_.row_bytes / cmd.size);
  uint64_t row_space = local / blocks_per_row;
  return BankAddr{static_cast<uint32_t>(row_space % cfg_.banks_per_channel),
                  static_cast<int64_t>(row_space / cfg_.banks_per_channel)};
}

bool DramModel::channel_has_space(const MemCommand& cmd) const {
  return channels_[channel_of(cmd)].queue.size() < cfg_.queue_depth;
}

void DramModel::note_occupancy(uint64_t now) {
  if (now > stats_.last_event_cycle) {
    stats_.occupancy_integral +=
        static_cast<double>(outstanding_) * static_cast<double>(now - stats_.last_event_cycle);
    stats_.last_event_cycle = now;
  }
}

bool DramModel::enqueue(const MemCommand& cmd, uint64_t now, uint64_t token) {
  Channel& ch = channels_[channel_of(cmd)];
  if (ch.queue.size() >= cfg_.queue_depth) return false;
  note_occupancy(now);
  Queued q;
  q.cmd = cmd;
  q.cmd.issue_cycle = now;
  q.token = token;
  q.enq_round = ch.round;
  q.enq_cycle = now;
  q.order = order_counter_++;
  ch.queue.push_back(std::move(q));
  ++outstanding_;
  ++stats_.enqueued;
  return true;
}

void DramModel::pump(uint64_t now, std::vector<Issued>& out) {
  note_occupancy(now);
  // retire transfers that finished by now
  for (std::size_t i = 0; i < inflight_.size();) {
    if (inflight_[i] <= now) {
      --outstanding_;
      ++stats_.completed;
      inflight_[i] = inflight_.back();
      inflight_.pop_back();
    } else {
      ++i;
    }
  }

  for (auto& ch : channels_) {
    while (true) {
      ++ch.round;
      // candidate ranking: aged beats everything (oldest aged first), then
      // open-row hits oldest-first, then plain oldest-first
      int best = -1;
      bool best_hit = false, best_aged = false;
      for (std::size_t i = 0; i < ch.queue.size(); ++i) {
        const Queued& q = ch.queue[i];
        BankAddr ba = map_bank(q.cmd);
        const Bank& bank = ch.banks[ba.bank];
        if (bank.free_at > now) continue;
        // per-address ordering: an older queued command to the same block
        // must go first
        bool blocked = false;
        for (std::size_t j = 0; j < ch.queue.size(); ++j) {
          if (ch.queue[j].order < q.order && ch.queue[j].cmd.addr == q.cmd.addr) {
            blocked = true;
            break;
          }
        }
        if (blocked) continue;
        bool aged = (ch.round - q.enq_round) >= cfg_.age_cap_rounds;
        bool hit = bank.open_row == ba.row;
        bool better;
        if (best < 0) {
          better = true;
        } else {
          const Queued& b = ch.queue[static_cast<std::size_t>(best)];
          if (aged != best_aged) {
            better = aged;
          } else if (!aged && hit != best_hit) {
            better = hit;
          } else {
            better = q.order < b.order;
          }
        }
        if (better) {
          best = static_cast<int>(i);
          best_hit = hit;
          best_aged = aged;
        }
      }
      if (best < 0) break;

      Queued q = std::move(ch.queue[static_cast<std::size_t>(best)]);
      ch.queue.erase(ch.queue.begin() + best);
      BankAddr ba = map_bank(q.cmd);
      Bank& bank = ch.banks[ba.bank];
      bool hit = bank.open_row == ba.row;
      uint64_t access = hit ? tCL_ : (tRP_ + tRCD_ + tCL_);
      uint64_t ready = now + access;
      uint64_t xfer = transfer_cycles(q.cmd.size);
      uint64_t data_start = std::max(ready, ch.bus_free);
      uint64_t complete = data_start + xfer;
      bank.open_row = ba.row;
      bank.free_at = complete;
      ch.bus_free = complete;

      if (hit) ++stats_.row_hits; else ++stats_.row_misses;
      stats_.busy_bytes += q.cmd.size;
      stats_.transfer_cycles += xfer;
      stats_.phase_service_cycles[static_cast<std::size_t>(q.cmd.phase)] +=
          complete - q.enq_cycle;

      q.cmd.complete_cycle = complete;
      inflight_.push_back(complete);
      out.push_back(Issued{q.token, complete, q.cmd});
    }
  }
}

}  // namespace oram
