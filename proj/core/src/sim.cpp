#include "oram/sim.hpp"

#include <algorithm>
#include <cmath>

#include "oram/errors.hpp"
#include "oram/mesh.hpp"
#include "oram/serial.hpp"

namespace oram {

namespace {
constexpr uint64_t kChannelShift = 48;
constexpr uint64_t kTokenMask = (uint64_t{1} << kChannelShift) - 1;
constexpr uint64_t kOnChipChannel = 0xffff;

uint32_t auto_treetop(uint64_t bucket_bytes, uint64_t budget, uint32_t depth) {
  uint32_t t = 0;
  while (t <= depth) {
    uint64_t buckets = (uint64_t{1} << (t + 1)) - 1;
    if (buckets * bucket_bytes > budget) break;
    ++t;
  }
  return t;
}
}  // namespace

Simulator::Simulator(ProtocolEngine& proto, const OramConfig& ocfg, const DramConfig& dcfg,
                     const MeshConfig& mcfg, Protocol kind, std::vector<TraceRecord> trace,
                     IssuePolicy policy, SimOptions opts)
    : proto_(proto),
      ocfg_(ocfg),
      dcfg_(dcfg),
      mcfg_(mcfg),
      kind_(kind),
      trace_(std::move(trace)),
      policy_(policy),
      opts_(opts),
      pad_rng_(opts.seed, 0xdadd1ull) {
  mcfg_.validate();
  dram_ = std::make_unique<DramModel>(dcfg_, mcfg_.clock_hz);
  parked_.resize(dcfg_.channels);
  payload_buf_.resize(ocfg_.block_bytes);

  treetop_levels_.resize(proto_.levels());
  for (uint32_t r = 0; r < proto_.levels(); ++r) {
    if (mcfg_.treetop_levels >= 0) {
      treetop_levels_[r] =
          std::min<uint32_t>(static_cast<uint32_t>(mcfg_.treetop_levels), proto_.row_depth(r) + 1);
    } else {
      treetop_levels_[r] = auto_treetop(proto_.bucket_bytes(r), mcfg_.treetop_budget_bytes,
                                        proto_.row_depth(r));
    }
  }
  res_.counters.row_data_commands.assign(proto_.levels(), 0);

  switch (kind_) {
    case Protocol::PathOram:
    case Protocol::PrOram:
      sched_ = std::make_unique<SerialScheduler>(*this, proto_.levels(), true);
      break;
    case Protocol::RingOram:
      sched_ = std::make_unique<SerialScheduler>(*this, proto_.levels(), false);
      break;
    case Protocol::Palermo:
      sched_ = std::make_unique<MeshScheduler>(*this, proto_.levels(), ocfg_.a, false);
      break;
    case Protocol::PalermoSw:
      sched_ = std::make_unique<MeshScheduler>(*this, proto_.levels(), ocfg_.a, true);
      break;
  }
}

Simulator::~Simulator() = default;

void Simulator::schedule(uint64_t cycle, uint64_t token) {
  events_.push(Event{cycle, event_seq_++, 0, token});
}

void Simulator::count_plan(const AccessPlan& plan) {
  auto count = [this](const std::vector<MemCommand>& v) {
    for (const auto& c : v) {
      res_.counters.by_phase[static_cast<std::size_t>(c.phase)]++;
      if (c.meta) {
        if (c.kind == CmdKind::Read) res_.counters.meta_reads++; else res_.counters.meta_writes++;
      } else {
        if (c.kind == CmdKind::Read) res_.counters.data_reads++; else res_.counters.data_writes++;
        res_.counters.row_data_commands[c.row]++;
      }
    }
  };
  for (const auto& r : plan.rows) {
    count(r.lm);
    count(r.er_reads);
    count(r.er_writes);
    count(r.rp);
    count(r.ep_reads);
    count(r.ep_writes);
  }
}

void Simulator::sample_stash() {
  std::size_t tags = proto_.stash_tags();
  uint64_t total = std::max<uint64_t>(1, trace_.size());
  uint64_t bucket = std::min<uint64_t>(99, trace_pos_ * 100 / total);
  if (res_.stash_series.size() <= bucket) res_.stash_series.resize(bucket + 1, 0);
  res_.stash_series[bucket] =
      std::max<uint32_t>(res_.stash_series[bucket], static_cast<uint32_t>(tags));
}

void Simulator::feed_front(uint64_t issue_cycle) {
  // self-paced: pull until one record survives the bypass filter
  while (planq_.empty() && trace_pos_ < trace_.size()) {
    const TraceRecord& rec = trace_[trace_pos_++];
    uint64_t line = rec.addr / ocfg_.block_bytes;
    if (filter_ && filter_->filter(rec)) {
      ++res_.bypasses;
      continue;
    }
    const Block* data = nullptr;
    if (rec.is_write) {
      synth_payload(opts_.seed, writes_seen_++, payload_buf_);
      data = &payload_buf_;
    }
    std::vector<AccessPlan> plans;
    proto_.access(line, rec.is_write, data, next_request_index_, plans);
    for (auto& p : plans) {
      issue_cycle_of_[p.request_index] = issue_cycle;
      res_.issue_cycles.push_back(issue_cycle);
      if (p.is_dummy) ++res_.dummy_requests; else ++res_.real_requests;
      if (opts_.collect_leaves && !p.rows.empty()) res_.leaf_sequence.push_back(p.rows[0].leaf);
      count_plan(p);
      planq_.push_back(std::move(p));
    }
    sample_stash();
  }
}

bool Simulator::try_admit() {
  if (!policy_.constant_rate()) feed_front(now_);
  bool any = false;
  while (!planq_.empty() && sched_->can_admit()) {
    AccessPlan plan = std::move(planq_.front());
    planq_.pop_front();
    if (in_flight_ == 0) work_since_ = now_;
    ++in_flight_;
    ++admitted_plans_;
    sched_->admit(std::move(plan), now_);
    any = true;
    if (!policy_.constant_rate()) feed_front(now_);
  }
  return any;
}

void Simulator::flush_dram() {
  std::vector<DramModel::Issued> issued;
  dram_->pump(now_, issued);
  for (const auto& i : issued) {
    uint64_t ch = dram_->channel_of(i.cmd);
    events_.push(Event{i.complete, event_seq_++, 1, (ch << kChannelShift) | i.token});
  }
}

void Simulator::pump_phase(PhaseRun& pr, uint64_t token) {
  if (pr.cmds == nullptr) return;
  while (!pr.issued_all()) {
    const MemCommand& cmd = (*pr.cmds)[pr.next];
    if (treetop_hit(cmd)) {
      ++res_.counters.treetop_hits;
      ++pr.inflight;
      ++pr.next;
      events_.push(Event{now_ + mcfg_.onchip_sram_latency, event_seq_++, 1,
                         (kOnChipChannel << kChannelShift) | token});
      continue;
    }
    if (!dram_->enqueue(cmd, now_, token)) {
      parked_[dram_->channel_of(cmd)].push_back(token);
      return;
    }
    ++res_.counters.dram_commands;
    ++pr.inflight;
    ++pr.next;
  }
}

uint64_t Simulator::serve_ready_at(const AccessPlan& plan, uint64_t rp_done, uint64_t token) {
  if (plan.forward_from < 0) return rp_done;
  auto it = rp_done_.find(static_cast<uint64_t>(plan.forward_from));
  if (it != rp_done_.end()) return std::max(rp_done, it->second);
  rp_waiters_[static_cast<uint64_t>(plan.forward_from)].push_back(token);
  return 0;
}

void Simulator::note_rp_complete(const AccessPlan& plan, uint64_t cycle) {
  rp_done_[plan.request_index] = cycle;
  auto it = rp_waiters_.find(plan.request_index);
  if (it != rp_waiters_.end()) {
    for (uint64_t tok : it->second) schedule(cycle + 1, tok);
    rp_waiters_.erase(it);
  }
}

void Simulator::deliver_response(const AccessPlan& plan, uint64_t cycle) {
  if (plan.is_dummy) return;
  LatencyObs obs;
  obs.request_index = plan.request_index;
  obs.issue_cycle = issue_cycle_of_[plan.request_index];
  obs.response_cycle = (opts_.leak_stash_hits && plan.stash_hit) ? obs.issue_cycle : cycle;
  obs.stash_hit = plan.stash_hit;
  res_.observations.push_back(obs);
}

void Simulator::plan_finished(const AccessPlan& plan) {
  (void)plan;
  ++finished_plans_;
  --in_flight_;
  if (in_flight_ == 0) res_.work_cycles += now_ - work_since_;
}

SimResult Simulator::run() {
  filter_ = std::make_unique<PrefetchFilter>(ocfg_.prefetch_len, 4096);
  if (policy_.constant_rate()) {
    events_.push(Event{policy_.interval_cycles(), event_seq_++, 2, 0});
  } else {
    try_admit();
    flush_dram();
  }

  while (!events_.empty()) {
    Event e = events_.top();
    events_.pop();
    now_ = e.cycle;
    if (e.kind == 2) {
      // constant-rate issue tick: exactly one ORAM request enters per tick
      if (trace_pos_ < trace_.size()) {
        const TraceRecord& rec = trace_[trace_pos_++];
        bool bypassed = filter_->filter(rec);
        if (bypassed) ++res_.bypasses;
        if (bypassed && !policy_.pad_with_dummies) {
          // LLC hit and no padding: this issue slot stays empty
        } else {
          const TraceRecord* use = bypassed ? nullptr : &rec;
          TraceRecord dummy_rec{false, (pad_rng_.below(ocfg_.protected_lines())) * 64};
          const TraceRecord& r = use ? *use : dummy_rec;
          uint64_t line = r.addr / ocfg_.block_bytes;
          const Block* data = nullptr;
          if (r.is_write) {
            synth_payload(opts_.seed, writes_seen_++, payload_buf_);
            data = &payload_buf_;
          }
          std::vector<AccessPlan> plans;
          proto_.access(line, r.is_write, data, next_request_index_, plans);
          if (!use) {
            plans.back().is_dummy = true;
            ++res_.padded_dummies;
          }
          for (auto& p : plans) {
            issue_cycle_of_[p.request_index] = now_;
            res_.issue_cycles.push_back(now_);
            if (p.is_dummy) ++res_.dummy_requests; else ++res_.real_requests;
            if (opts_.collect_leaves && !p.rows.empty())
              res_.leaf_sequence.push_back(p.rows[0].leaf);
            count_plan(p);
            planq_.push_back(std::move(p));
          }
          sample_stash();
        }
        if (trace_pos_ < trace_.size())
          events_.push(Event{now_ + policy_.interval_cycles(), event_seq_++, 2, 0});
      }
    } else if (e.kind == 1) {
      uint64_t ch = e.token >> kChannelShift;
      uint64_t token = e.token & kTokenMask;
      sched_->on_event(token, now_);
      if (ch != kOnChipChannel) {
        auto& parked = parked_[ch];
        if (!parked.empty()) {
          std::vector<uint64_t> retry;
          retry.swap(parked);
          for (uint64_t t : retry) sched_->on_event(t | (uint64_t{1} << 62), now_);
        }
      }
    } else {
      sched_->on_event(e.token, now_);
    }
    // post-event settling: admissions and newly issueable DRAM work
    flush_dram();
    while (try_admit()) flush_dram();
  }

  if (in_flight_ != 0 || !planq_.empty() ||
      (!policy_.constant_rate() && trace_pos_ < trace_.size())) {
    throw DeadlockError("simulation wedged with work in flight:\n" + sched_->snapshot());
  }

  res_.elapsed_cycles = now_;
  res_.dram = dram_->stats();
  res_.stash_max_tags = proto_.stash_max_tags();
  res_.stash_max_per_row = proto_.stash_max_rows();
  res_.state_digest = proto_.state_digest();
  res_.ns_per_cycle = mcfg_.ns_per_cycle();
  if (res_.stash_series.size() > 100) res_.stash_series.resize(100);
  return res_;
}

}  // namespace oram
