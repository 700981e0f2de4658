#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "oram/rng.hpp"

namespace oram {

using Leaf = uint64_t;
using NodeId = uint64_t;
using Block = std::vector<std::byte>;

inline constexpr uint64_t kNoAddr = ~0ull;

// --- heap-indexed binary tree geometry (root = 0, children of i are 2i+1, 2i+2) ---

// Node ids along the path of `leaf`, leaf level first, root (0) last.
// Throws std::invalid_argument for an out-of-range leaf.
std::vector<NodeId> path_nodes(Leaf leaf, uint32_t depth);

inline NodeId leaf_node(Leaf leaf, uint32_t depth) { return ((NodeId{1} << depth) - 1) + leaf; }
inline NodeId parent_of(NodeId n) { return (n - 1) / 2; }
uint32_t level_of(NodeId n);

// True when `node` lies on the path from `leaf` to the root.
bool node_on_path(NodeId node, Leaf leaf, uint32_t depth);

// Reverse the low `bits` bits of v (RingORAM eviction-leaf order).
uint64_t bit_reverse(uint64_t v, uint32_t bits);

// --- bucket state for a ring-style tree ---

// Per-bucket bookkeeping: which physical slot holds which real block, which
// slots are still untouched since the last reset, and the touch counter.
// The random slot permutation is realized by the offset assignment chosen at
// each reset.
struct RealSlot {
  uint32_t offset;
  uint64_t addr;
  Leaf leaf;  // mapping the block carried when it was written here
  Block data;
};

class Stash;

// Bucket/metadata storage for one ring-style ORAM tree. Struct-of-arrays,
// sized 2^(depth+1)-1 nodes of z+s slots each.
class TreeState {
 public:
  TreeState(uint32_t depth, uint32_t z, uint32_t s);

  uint32_t depth() const { return depth_; }
  uint32_t z() const { return z_; }
  uint32_t s() const { return s_; }
  uint32_t slots() const { return z_ + s_; }
  uint64_t node_count() const { return valid_.size(); }

  uint16_t accessed(NodeId n) const { return accessed_[n]; }
  uint64_t valid_mask(NodeId n) const { return valid_[n]; }
  uint32_t valid_count(NodeId n) const;
  const std::vector<RealSlot>& reals(NodeId n) const { return reals_[n]; }

  bool has_addr(NodeId n, uint64_t addr) const;

  // Touch the bucket for `want`: select its real slot when resident, else the
  // lowest-index untouched dummy. Marks the slot invalid and bumps the touch
  // counter. When the real slot is selected its block is removed and returned.
  // Throws ProtocolViolation when no untouched slot of the needed kind exists.
  struct TouchResult {
    uint32_t offset;
    bool real_hit;
    std::optional<RealSlot> pulled;
  };
  TouchResult touch(NodeId n, uint64_t want);

  // Offsets of all still-valid real blocks, padded with untouched dummy
  // offsets to exactly z entries (the oblivious reset fetch).
  std::vector<uint32_t> reset_fetch_offsets(NodeId n) const;

  // Remove all still-valid real blocks (the reset pull).
  std::vector<RealSlot> extract_valid_reals(NodeId n);

  // Install up to z blocks with a fresh random offset assignment, clear the
  // valid bitmap and the touch counter. `blocks` is consumed.
  void fill_bucket(NodeId n, std::vector<RealSlot>&& blocks, Rng& perm_rng);

  // Place a block during warm init without consuming dummy budget.
  bool try_place_initial(NodeId n, uint64_t addr, Leaf leaf, Block&& data);
  void finalize_initial_offsets(Rng& perm_rng);

  // popcount(valid) + accessed == z + s, every bucket. Cheap full check.
  void check_touch_conservation() const;

 private:
  uint32_t depth_, z_, s_;
  std::vector<uint64_t> valid_;
  std::vector<uint16_t> accessed_;
  std::vector<std::vector<RealSlot>> reals_;
};

}  // namespace oram
