#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "oram/command.hpp"
#include "oram/config.hpp"
#include "oram/rng.hpp"
#include "oram/stash.hpp"
#include "oram/tree.hpp"

namespace oram {

// One ring-style sub-ORAM: tree, stash, eviction counter and (in concurrent
// mode) the pending-address set. Executes the per-access protocol in commit
// order and records the bus traffic it would generate into a RowPlan.
//
// Concurrent mode hoists the reshuffle: buckets reset at accessed == s-1
// before the path read (which then bypasses them), and addresses stay marked
// pending until their block leaves the stash.
class RingRowEngine {
 public:
  RingRowEngine(uint8_t row, uint32_t depth, const OramConfig& cfg, uint64_t seed, bool concurrent,
                uint32_t bus_blocks, bool bounded_stash = true);

  void set_address_base(uint64_t slot_base, uint64_t meta_base);

  uint32_t depth() const { return tree_.depth(); }
  uint64_t seq() const { return seq_; }
  Leaf draw_leaf() { return leaf_rng_.leaf(tree_.depth()); }

  // Path read half of an access: LM metadata loads, (concurrent) pre-check
  // resets, and the path touches that pull the block of interest into the
  // stash under its fresh mapping.
  void begin_access(RowPlan& plan, uint64_t addr, Leaf mapped_leaf, Leaf new_leaf);

  // Write half: deterministic-order path eviction every a-th access, then (in
  // serialized mode) the post-read reshuffle of exhausted buckets.
  void finish_access(RowPlan& plan);

  bool stash_resident(uint64_t addr) const { return stash_.contains(addr) || pending_.count(addr) != 0; }
  Block* stash_block(uint64_t addr);
  Block& ensure_block(uint64_t addr, Leaf leaf, std::size_t bytes);

  // Reshuffle every read-path bucket whose dummy budget is spent. Returns the
  // reset nodes. Exposed for direct exercise; begin/finish call it internally.
  std::vector<NodeId> early_reshuffle(Leaf leaf, RowPlan& plan);
  std::vector<NodeId> evict_path(RowPlan& plan);

  // Refill `node` with up to z path-compatible stash blocks under a fresh
  // permutation, clearing its counters. Returns the number moved.
  uint32_t write_bucket(NodeId node);

  Stash& stash() { return stash_; }
  const Stash& stash() const { return stash_; }
  TreeState& tree() { return tree_; }
  const TreeState& tree() const { return tree_; }
  std::size_t pending_size() const { return pending_.size(); }
  std::size_t stash_max_tags() const { return stash_max_; }
  Leaf next_evict_leaf() const;

  // warm-init support
  void place_initial(uint64_t addr, Leaf leaf, Block&& data);
  void finish_init();

  uint64_t state_digest() const;

 private:
  void reset_node(NodeId node, std::vector<MemCommand>& reads, std::vector<MemCommand>& writes,
                  Phase phase);
  void emit_slot(std::vector<MemCommand>& out, NodeId node, uint32_t offset, CmdKind kind,
                 Phase phase);
  void emit_meta(std::vector<MemCommand>& out, NodeId node, CmdKind kind, Phase phase);
  void note_stash_size();

  uint8_t row_;
  OramConfig cfg_;
  bool concurrent_;
  uint32_t bus_blocks_;  // DRAM transactions per tree-block slot (prefetch widening)
  TreeState tree_;
  Stash stash_;
  Rng leaf_rng_, perm_rng_;
  std::unordered_set<uint64_t> pending_;
  uint64_t seq_ = 0;           // dense per-row access counter, 1-based
  uint64_t evict_counter_ = 0;
  uint64_t slot_base_ = 0, meta_base_ = 0;
  std::size_t stash_max_ = 0;
  uint64_t cur_seq_tag_ = 0;
};

}  // namespace oram
