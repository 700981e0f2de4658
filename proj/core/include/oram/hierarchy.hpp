#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "oram/command.hpp"
#include "oram/config.hpp"
#include "oram/path_row.hpp"
#include "oram/posmap.hpp"
#include "oram/ring_row.hpp"

namespace oram {

// Per-row geometry of a recursive hierarchy: level k+1 holds the position
// map of level k, ceil(blocks_k / posmap_entries_per_block) blocks, until the
// top map fits on-chip.
struct HierarchyGeometry {
  std::vector<uint64_t> blocks;  // per row
  std::vector<uint32_t> depths;  // per row
  uint64_t key_count = 0;        // posmap keys at row 0 (groups for PrORAM)

  static HierarchyGeometry ring(const OramConfig& cfg);
  static HierarchyGeometry path(const OramConfig& cfg, uint32_t group_len);
};

// Recursive ring-family ORAM (serialized RingORAM and the concurrent
// variant share this functional core; only reshuffle timing and the pending
// set differ). Executes accesses in commit order and emits the traffic plan.
class RingHierarchy {
 public:
  RingHierarchy(const OramConfig& cfg, uint64_t seed, bool concurrent);

  // One protected-space access over all rows. `line` is a cache-line index.
  void access(AccessPlan& plan, uint64_t line, bool is_write, const Block* write_data);

  uint32_t levels() const { return cfg_.levels; }
  const OramConfig& config() const { return cfg_; }
  const HierarchyGeometry& geometry() const { return geo_; }
  RingRowEngine& row(uint32_t r) { return *rows_[r]; }
  const RingRowEngine& row(uint32_t r) const { return *rows_[r]; }
  PosMapTop& top() { return top_; }

  // Largest stash tag count across rows right now / over the whole run.
  std::size_t stash_tags() const;
  std::size_t stash_max_tags() const;
  std::vector<std::size_t> stash_max_rows() const;
  uint64_t state_digest() const;

  // Bucket bytes per row as laid out on the bus (tree-top sizing input).
  uint64_t bucket_bytes(uint32_t r) const;

 private:
  OramConfig cfg_;
  HierarchyGeometry geo_;
  std::vector<std::unique_ptr<RingRowEngine>> rows_;
  PosMapTop top_;
  std::unordered_map<uint64_t, uint64_t> last_fetcher_;
  uint64_t access_count_ = 0;

  friend class PalermoScheduleModel;
};

// Recursive PathORAM; with group_len > 1 it becomes the PrORAM base: blocks
// stay line-sized but whole address groups share one mapped leaf, and a
// background eviction (dummy path access) fires whenever the stash exceeds
// the configured threshold.
class PathHierarchy {
 public:
  PathHierarchy(const OramConfig& cfg, uint64_t seed, uint32_t group_len);

  void access(AccessPlan& plan, uint64_t line, bool is_write, const Block* write_data);
  // Background eviction on a uniform random leaf; pure stash relief.
  void dummy_access(AccessPlan& plan);
  bool needs_relief() const;

  uint32_t levels() const { return cfg_.levels; }
  uint32_t group_len() const { return group_len_; }
  const HierarchyGeometry& geometry() const { return geo_; }
  PathRowEngine& row(uint32_t r) { return *rows_[r]; }
  PosMapTop& top() { return top_; }

  std::size_t stash_tags() const;
  std::size_t stash_max_tags() const;
  std::vector<std::size_t> stash_max_rows() const;
  uint64_t state_digest() const;
  uint64_t bucket_bytes(uint32_t r) const;

 private:
  OramConfig cfg_;
  uint32_t group_len_;
  HierarchyGeometry geo_;
  std::vector<std::unique_ptr<PathRowEngine>> rows_;
  PosMapTop top_;
  Rng dummy_rng_;
};

// Full-scan structural check: every live block is either in the stash or in
// a bucket on the path of its current mapping. Desk-scale only.
bool check_path_invariant(RingHierarchy& h);

}  // namespace oram
