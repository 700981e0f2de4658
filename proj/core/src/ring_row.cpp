#include "oram/ring_row.hpp"

#include <string>

#include "oram/errors.hpp"

namespace oram {

RingRowEngine::RingRowEngine(uint8_t row, uint32_t depth, const OramConfig& cfg, uint64_t seed,
                             bool concurrent, uint32_t bus_blocks, bool bounded_stash)
    : row_(row),
      cfg_(cfg),
      concurrent_(concurrent),
      bus_blocks_(bus_blocks),
      tree_(depth, cfg.z, cfg.s),
      stash_(cfg.stash_capacity, bounded_stash),
      leaf_rng_(seed, 0x11c0ffee00ull + row),
      perm_rng_(seed, 0x22d00dad00ull + row) {}

void RingRowEngine::set_address_base(uint64_t slot_base, uint64_t meta_base) {
  slot_base_ = slot_base;
  meta_base_ = meta_base;
}

void RingRowEngine::emit_slot(std::vector<MemCommand>& out, NodeId node, uint32_t offset,
                              CmdKind kind, Phase phase) {
  uint64_t slot_index = node * tree_.slots() + offset;
  for (uint32_t j = 0; j < bus_blocks_; ++j) {
    MemCommand c;
    c.addr = slot_base_ + (slot_index * bus_blocks_ + j) * cfg_.block_bytes;
    c.size = cfg_.block_bytes;
    c.kind = kind;
    c.row = row_;
    c.phase = phase;
    c.tree_level = static_cast<uint8_t>(level_of(node));
    c.meta = false;
    c.req_id = cur_seq_tag_;
    out.push_back(c);
  }
}

void RingRowEngine::emit_meta(std::vector<MemCommand>& out, NodeId node, CmdKind kind,
                              Phase phase) {
  MemCommand c;
  c.addr = meta_base_ + node * 64;
  c.size = 64;
  c.kind = kind;
  c.row = row_;
  c.phase = phase;
  c.tree_level = static_cast<uint8_t>(level_of(node));
  c.meta = true;
  c.req_id = cur_seq_tag_;
  out.push_back(c);
}

void RingRowEngine::note_stash_size() {
  if (stash_.size() > stash_max_) stash_max_ = stash_.size();
}

uint32_t RingRowEngine::write_bucket(NodeId node) {
  std::vector<uint64_t> chosen;
  chosen.reserve(tree_.z());
  for (const auto& e : stash_.entries()) {
    if (chosen.size() >= tree_.z()) break;
    if (node_on_path(node, e.leaf, tree_.depth())) chosen.push_back(e.addr);
  }
  std::vector<RealSlot> blocks;
  blocks.reserve(chosen.size());
  for (uint64_t addr : chosen) {
    Stash::Entry* e = stash_.find(addr);
    blocks.push_back(RealSlot{0, e->addr, e->leaf, std::move(e->data)});
    stash_.erase(addr);
    pending_.erase(addr);
  }
  uint32_t moved = static_cast<uint32_t>(blocks.size());
  tree_.fill_bucket(node, std::move(blocks), perm_rng_);
  return moved;
}

void RingRowEngine::reset_node(NodeId node, std::vector<MemCommand>& reads,
                               std::vector<MemCommand>& writes, Phase phase) {
  // Oblivious fetch: valid reals padded with dummies to exactly z reads.
  for (uint32_t off : tree_.reset_fetch_offsets(node)) {
    emit_slot(reads, node, off, CmdKind::Read, phase);
  }
  for (auto& slot : tree_.extract_valid_reals(node)) {
    stash_.put(slot.addr, slot.leaf, std::move(slot.data));
  }
  // Refill from the stash, freshly permuted; the full bucket is rewritten.
  write_bucket(node);
  for (uint32_t off = 0; off < tree_.slots(); ++off) {
    emit_slot(writes, node, off, CmdKind::Write, phase);
  }
  emit_meta(writes, node, CmdKind::Write, phase);
  note_stash_size();
}

void RingRowEngine::begin_access(RowPlan& plan, uint64_t addr, Leaf mapped_leaf, Leaf new_leaf) {
  ++seq_;
  cur_seq_tag_ = seq_;
  plan.seq = seq_;

  bool pending_hit = concurrent_ && pending_.count(addr) != 0;
  Leaf read_leaf = pending_hit ? draw_leaf() : mapped_leaf;
  plan.leaf = read_leaf;
  plan.fake_read = pending_hit;
  if (concurrent_) pending_.insert(addr);

  auto path = path_nodes(read_leaf, tree_.depth());
  for (NodeId n : path) emit_meta(plan.lm, n, CmdKind::Read, Phase::LM);

  // Concurrent mode: reshuffle one touch early so no interleaving can find an
  // exhausted bucket; those nodes are bypassed by this request's path read.
  std::vector<NodeId> bypassed;
  if (concurrent_) {
    for (NodeId n : path) {
      if (tree_.accessed(n) == cfg_.s - 1) {
        reset_node(n, plan.er_reads, plan.er_writes, Phase::ER);
        plan.er_nodes.push_back(n);
        bypassed.push_back(n);
      }
    }
    plan.bypassed_nodes = static_cast<uint32_t>(bypassed.size());
  }

  uint64_t want = pending_hit ? kNoAddr : addr;
  for (NodeId n : path) {
    bool skip = false;
    for (NodeId b : bypassed) skip = skip || (b == n);
    if (skip) continue;
    auto t = tree_.touch(n, want);
    emit_slot(plan.rp, n, t.offset, CmdKind::Read, Phase::RP);
    if (t.real_hit) {
      stash_.put(t.pulled->addr, new_leaf, std::move(t.pulled->data));
    }
  }
  // The freshest mapping always wins, including for stash-resident blocks.
  stash_.set_leaf(addr, new_leaf);
  note_stash_size();
}

void RingRowEngine::finish_access(RowPlan& plan) {
  cur_seq_tag_ = plan.seq;
  plan.evict_due = (seq_ % cfg_.a == 0);
  if (plan.evict_due) {
    plan.ep_nodes = evict_path(plan);
  }
  if (!concurrent_) {
    // Serialized RingORAM reshuffles after the read, at accessed == s.
    plan.er_nodes = early_reshuffle(plan.leaf, plan);
  }
  note_stash_size();
}

std::vector<NodeId> RingRowEngine::early_reshuffle(Leaf leaf, RowPlan& plan) {
  std::vector<NodeId> reset;
  for (NodeId n : path_nodes(leaf, tree_.depth())) {
    if (tree_.accessed(n) == cfg_.s) {
      reset_node(n, plan.er_reads, plan.er_writes, Phase::ER);
      reset.push_back(n);
    }
  }
  return reset;
}

Leaf RingRowEngine::next_evict_leaf() const {
  uint64_t period = Leaf{1} << tree_.depth();
  uint64_t v = evict_counter_ % period;
  return cfg_.sequential_evict_order ? v : bit_reverse(v, tree_.depth());
}

std::vector<NodeId> RingRowEngine::evict_path(RowPlan& plan) {
  Leaf g = next_evict_leaf();
  ++evict_counter_;
  auto nodes = path_nodes(g, tree_.depth());
  for (NodeId n : nodes) {
    emit_meta(plan.ep_reads, n, CmdKind::Read, Phase::EP);
    reset_node(n, plan.ep_reads, plan.ep_writes, Phase::EP);
  }
  return nodes;
}

Block* RingRowEngine::stash_block(uint64_t addr) {
  Stash::Entry* e = stash_.find(addr);
  return e ? &e->data : nullptr;
}

Block& RingRowEngine::ensure_block(uint64_t addr, Leaf leaf, std::size_t bytes) {
  if (Stash::Entry* e = stash_.find(addr)) return e->data;
  Block zero(bytes, std::byte{0});
  Stash::Entry& e = stash_.put(addr, leaf, std::move(zero));
  note_stash_size();
  return e.data;
}

void RingRowEngine::place_initial(uint64_t addr, Leaf leaf, Block&& data) {
  for (NodeId n : path_nodes(leaf, tree_.depth())) {
    if (tree_.try_place_initial(n, addr, leaf, std::move(data))) return;
  }
  stash_.put(addr, leaf, std::move(data));
  note_stash_size();
}

void RingRowEngine::finish_init() { tree_.finalize_initial_offsets(perm_rng_); }

uint64_t RingRowEngine::state_digest() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  for (NodeId n = 0; n < tree_.node_count(); ++n) {
    mix(tree_.valid_mask(n));
    mix(tree_.accessed(n));
    for (const auto& r : tree_.reals(n)) {
      mix(r.addr);
      mix(r.leaf);
      mix(r.offset);
      for (std::byte b : r.data) mix(static_cast<uint64_t>(b));
    }
  }
  for (const auto& e : stash_.entries()) {
    mix(e.addr);
    mix(e.leaf);
    for (std::byte b : e.data) mix(static_cast<uint64_t>(b));
  }
  return h;
}

}  // namespace oram
