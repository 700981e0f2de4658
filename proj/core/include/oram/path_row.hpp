#pragma once

#include <cstdint>
#include <vector>

#include "oram/command.hpp"
#include "oram/config.hpp"
#include "oram/rng.hpp"
#include "oram/stash.hpp"
#include "oram/tree.hpp"

namespace oram {

// One PathORAM-style sub-ORAM: buckets hold up to z_path blocks with no
// dummy bookkeeping; every access streams all blocks of the path into the
// stash and immediately writes the same path back greedily. The bus always
// carries the full bucket, occupied or not.
class PathRowEngine {
 public:
  PathRowEngine(uint8_t row, uint32_t depth, const OramConfig& cfg, uint64_t seed,
                bool bounded_stash);

  void set_address_base(uint64_t slot_base) { slot_base_ = slot_base; }

  uint32_t depth() const { return depth_; }
  uint64_t node_count() const { return buckets_.size(); }
  uint32_t bucket_cap(NodeId n) const { return zcap_[level_of(n)]; }
  Leaf draw_leaf() { return leaf_rng_.leaf(depth_); }

  // Read half: stream every block along the path into the stash.
  void begin_access(RowPlan& plan, Leaf leaf);
  // Write half: greedy write-back of the same path, leaf bucket first.
  void finish_access(RowPlan& plan);

  Block* stash_block(uint64_t addr);
  Block& ensure_block(uint64_t addr, Leaf leaf, std::size_t bytes);
  bool stash_resident(uint64_t addr) const { return stash_.contains(addr); }

  Stash& stash() { return stash_; }
  const Stash& stash() const { return stash_; }
  std::size_t stash_max_tags() const { return stash_max_; }

  void place_initial(uint64_t addr, Leaf leaf, Block&& data);

  uint64_t state_digest() const;

 private:
  struct PSlot {
    uint64_t addr;
    Leaf leaf;
    Block data;
  };

  void emit_bucket(std::vector<MemCommand>& out, NodeId node, CmdKind kind, Phase phase);

  uint8_t row_;
  OramConfig cfg_;
  uint32_t depth_;
  std::vector<uint32_t> zcap_;  // per tree level; fat-tree hook widens root side
  std::vector<std::vector<PSlot>> buckets_;
  Stash stash_;
  Rng leaf_rng_;
  uint64_t slot_base_ = 0;
  std::size_t stash_max_ = 0;
  uint64_t seq_ = 0;
  Leaf cur_leaf_ = 0;
};

}  // namespace oram
