#include "oram/hierarchy.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "oram/errors.hpp"

namespace oram {
namespace {

uint32_t ceil_log2(uint64_t v) {
  uint32_t l = 0;
  while ((uint64_t{1} << l) < v) ++l;
  return l;
}

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

uint32_t derive_depth(uint64_t blocks, uint32_t z, int32_t override_depth) {
  if (override_depth >= 0) return static_cast<uint32_t>(override_depth);
  return ceil_log2(std::max<uint64_t>(1, ceil_div(blocks, z)));
}

}  // namespace

HierarchyGeometry HierarchyGeometry::ring(const OramConfig& cfg) {
  HierarchyGeometry g;
  uint64_t n0 = ceil_div(cfg.protected_lines(), cfg.prefetch_len);
  if (cfg.depth_override >= 0) n0 = uint64_t{cfg.z} << cfg.depth_override;
  g.key_count = n0;
  g.blocks.push_back(n0);
  g.depths.push_back(derive_depth(n0, cfg.z, cfg.depth_override));
  for (uint32_t r = 1; r < cfg.levels; ++r) {
    uint64_t n = ceil_div(g.blocks[r - 1], cfg.posmap_entries_per_block);
    g.blocks.push_back(n);
    g.depths.push_back(derive_depth(n, cfg.z, -1));
  }
  return g;
}

HierarchyGeometry HierarchyGeometry::path(const OramConfig& cfg, uint32_t group_len) {
  HierarchyGeometry g;
  uint64_t n0 = cfg.protected_lines();
  if (cfg.depth_override >= 0) n0 = uint64_t{cfg.z_path} << cfg.depth_override;
  g.blocks.push_back(n0);
  g.depths.push_back(derive_depth(n0, cfg.z_path, cfg.depth_override));
  g.key_count = ceil_div(n0, group_len);
  uint64_t prev = g.key_count;
  for (uint32_t r = 1; r < cfg.levels; ++r) {
    uint64_t n = ceil_div(prev, cfg.posmap_entries_per_block);
    g.blocks.push_back(n);
    g.depths.push_back(derive_depth(n, cfg.z_path, -1));
    prev = n;
  }
  return g;
}

// ---------------------------------------------------------------- ring

RingHierarchy::RingHierarchy(const OramConfig& cfg, uint64_t seed, bool concurrent)
    : cfg_(cfg), geo_(HierarchyGeometry::ring(cfg)) {
  cfg.validate();
  rows_.reserve(cfg.levels);
  uint64_t base = 0;
  for (uint32_t r = 0; r < cfg.levels; ++r) {
    uint32_t bus_blocks = (r == 0) ? cfg.prefetch_len : 1;
    rows_.push_back(
        std::make_unique<RingRowEngine>(static_cast<uint8_t>(r), geo_.depths[r], cfg, seed,
                                        concurrent, bus_blocks));
    uint64_t nodes = rows_[r]->tree().node_count();
    uint64_t slot_bytes = nodes * rows_[r]->tree().slots() * uint64_t{cfg.block_bytes} * bus_blocks;
    rows_[r]->set_address_base(base, base + slot_bytes);
    base += slot_bytes + nodes * 64;
  }

  // Warm init: assign a uniform leaf to every block, pack the assignments of
  // row r into the posmap blocks of row r+1, and place blocks greedily from
  // the leaf bucket upward. The data row stays cold when warm_init is off.
  uint32_t fanin = cfg.posmap_entries_per_block;
  std::vector<Leaf> child_leaves;
  for (uint32_t r = 0; r < cfg.levels; ++r) {
    Rng init_rng(seed, 0x5eed0000ull + r);
    std::vector<Leaf> leaves(geo_.blocks[r]);
    for (auto& l : leaves) l = init_rng.leaf(geo_.depths[r]);

    std::size_t block_size = std::size_t{cfg.block_bytes} * (r == 0 ? cfg.prefetch_len : 1);
    for (uint64_t b = 0; b < geo_.blocks[r]; ++b) {
      if (r == 0) {
        if (!cfg.warm_init) continue;
        rows_[r]->place_initial(b, leaves[b], Block(block_size, std::byte{0}));
      } else {
        Block payload(block_size, std::byte{0});
        for (uint32_t j = 0; j < fanin; ++j) {
          uint64_t child = b * fanin + j;
          if (child >= geo_.blocks[r - 1]) break;
          posmap_entry_set(payload, j, child_leaves[child]);
        }
        rows_[r]->place_initial(b, leaves[b], std::move(payload));
      }
    }
    rows_[r]->finish_init();
    child_leaves = std::move(leaves);
  }
  top_ = PosMapTop(std::move(child_leaves));
}

void RingHierarchy::access(AccessPlan& plan, uint64_t line, bool is_write,
                           const Block* write_data) {
  ++access_count_;
  plan.rows.resize(cfg_.levels);
  plan.is_write = is_write;
  plan.line_addr = line;

  uint32_t fanin = cfg_.posmap_entries_per_block;
  std::vector<uint64_t> addr(cfg_.levels);
  addr[0] = line / cfg_.prefetch_len;
  for (uint32_t r = 1; r < cfg_.levels; ++r) addr[r] = addr[r - 1] / fanin;

  plan.stash_hit = rows_[0]->stash_resident(addr[0]);
  if (plan.stash_hit) {
    auto it = last_fetcher_.find(addr[0]);
    if (it != last_fetcher_.end()) plan.forward_from = static_cast<int64_t>(it->second);
  }

  // Walk the recursion top-down; each row resolves and freshly remaps the
  // mapping of the row below inside its fetched block.
  uint32_t topr = cfg_.levels - 1;
  Leaf fresh_top = rows_[topr]->draw_leaf();
  Leaf leaf = top_.lookup_and_remap(addr[topr], fresh_top);
  Leaf fresh = fresh_top;
  for (uint32_t r = topr; r >= 1; --r) {
    rows_[r]->begin_access(plan.rows[r], addr[r], leaf, fresh);
    Block* b = rows_[r]->stash_block(addr[r]);
    if (b == nullptr)
      throw ProtocolViolation("posmap block " + std::to_string(addr[r]) + " missing at row " +
                              std::to_string(r));
    uint32_t slot = static_cast<uint32_t>(addr[r - 1] % fanin);
    Leaf next_fresh = rows_[r - 1]->draw_leaf();
    Leaf next_leaf = posmap_entry_get(*b, slot);
    posmap_entry_set(*b, slot, next_fresh);
    rows_[r]->finish_access(plan.rows[r]);
    leaf = next_leaf;
    fresh = next_fresh;
  }

  rows_[0]->begin_access(plan.rows[0], addr[0], leaf, fresh);
  std::size_t block_size = std::size_t{cfg_.block_bytes} * cfg_.prefetch_len;
  std::size_t line_off = (line % cfg_.prefetch_len) * cfg_.block_bytes;
  if (is_write) {
    Block& b = rows_[0]->ensure_block(addr[0], fresh, block_size);
    if (write_data != nullptr) {
      std::size_t n = std::min<std::size_t>(cfg_.block_bytes, write_data->size());
      std::copy(write_data->begin(), write_data->begin() + static_cast<std::ptrdiff_t>(n),
                b.begin() + static_cast<std::ptrdiff_t>(line_off));
    }
    last_fetcher_[addr[0]] = plan.request_index;
  } else {
    plan.read_result.assign(cfg_.block_bytes, std::byte{0});
    if (Block* b = rows_[0]->stash_block(addr[0])) {
      std::copy(b->begin() + static_cast<std::ptrdiff_t>(line_off),
                b->begin() + static_cast<std::ptrdiff_t>(line_off + cfg_.block_bytes),
                plan.read_result.begin());
      last_fetcher_[addr[0]] = plan.request_index;
    }
  }
  rows_[0]->finish_access(plan.rows[0]);
}

std::size_t RingHierarchy::stash_tags() const {
  std::size_t m = 0;
  for (const auto& r : rows_) m = std::max(m, r->stash().size());
  return m;
}

std::size_t RingHierarchy::stash_max_tags() const {
  std::size_t m = 0;
  for (const auto& r : rows_) m = std::max(m, r->stash_max_tags());
  return m;
}

std::vector<std::size_t> RingHierarchy::stash_max_rows() const {
  std::vector<std::size_t> out;
  for (const auto& r : rows_) out.push_back(r->stash_max_tags());
  return out;
}

uint64_t RingHierarchy::state_digest() const {
  uint64_t h = 0x9e3779b97f4a7c15ull;
  for (const auto& r : rows_) h = h * 0x100000001b3ull ^ r->state_digest();
  for (std::size_t i = 0; i < top_.size(); ++i) h = h * 0x100000001b3ull ^ top_.peek(i);
  return h;
}

uint64_t RingHierarchy::bucket_bytes(uint32_t r) const {
  uint32_t bus_blocks = (r == 0) ? cfg_.prefetch_len : 1;
  return uint64_t{cfg_.z + cfg_.s} * cfg_.block_bytes * bus_blocks + 64;
}

// ---------------------------------------------------------------- path

PathHierarchy::PathHierarchy(const OramConfig& cfg, uint64_t seed, uint32_t group_len)
    : cfg_(cfg),
      group_len_(group_len),
      geo_(HierarchyGeometry::path(cfg, group_len)),
      dummy_rng_(seed, 0x44f00dull) {
  cfg.validate();
  if (group_len_ < 1) throw ConfigError("group_len must be >= 1");
  bool relief = cfg.proram_stash_threshold > 0;
  uint64_t base = 0;
  for (uint32_t r = 0; r < cfg.levels; ++r) {
    // Row 0 runs unbounded when background eviction manages pressure.
    bool bounded = !(r == 0 && relief);
    rows_.push_back(std::make_unique<PathRowEngine>(static_cast<uint8_t>(r), geo_.depths[r], cfg,
                                                    seed, bounded));
    rows_[r]->set_address_base(base);
    uint64_t nodes = rows_[r]->node_count();
    base += nodes * rows_[r]->bucket_cap(0) * uint64_t{cfg.block_bytes};
  }

  uint32_t fanin = cfg.posmap_entries_per_block;
  std::vector<Leaf> child_leaves;  // per posmap key of the row below
  for (uint32_t r = 0; r < cfg.levels; ++r) {
    Rng init_rng(seed, 0x6eed0000ull + r);
    if (r == 0) {
      std::vector<Leaf> group_leaves(geo_.key_count);
      for (auto& l : group_leaves) l = init_rng.leaf(geo_.depths[0]);
      if (cfg.warm_init) {
        for (uint64_t b = 0; b < geo_.blocks[0]; ++b) {
          rows_[0]->place_initial(b, group_leaves[b / group_len_],
                                  Block(cfg.block_bytes, std::byte{0}));
        }
      }
      child_leaves = std::move(group_leaves);
    } else {
      std::vector<Leaf> leaves(geo_.blocks[r]);
      for (auto& l : leaves) l = init_rng.leaf(geo_.depths[r]);
      for (uint64_t b = 0; b < geo_.blocks[r]; ++b) {
        Block payload(cfg.block_bytes, std::byte{0});
        for (uint32_t j = 0; j < fanin; ++j) {
          uint64_t child = b * fanin + j;
          if (child >= child_leaves.size()) break;
          posmap_entry_set(payload, j, child_leaves[child]);
        }
        rows_[r]->place_initial(b, leaves[b], std::move(payload));
      }
      child_leaves = std::move(leaves);
    }
  }
  top_ = PosMapTop(std::move(child_leaves));
}

void PathHierarchy::access(AccessPlan& plan, uint64_t line, bool is_write,
                           const Block* write_data) {
  plan.rows.resize(cfg_.levels);
  plan.is_write = is_write;
  plan.line_addr = line;
  plan.stash_hit = rows_[0]->stash_resident(line);

  uint32_t fanin = cfg_.posmap_entries_per_block;
  uint64_t key = line / group_len_;
  std::vector<uint64_t> addr(cfg_.levels);
  if (cfg_.levels > 1) {
    addr[1] = key / fanin;
    for (uint32_t r = 2; r < cfg_.levels; ++r) addr[r] = addr[r - 1] / fanin;
  }

  Leaf fresh_g = rows_[0]->draw_leaf();
  Leaf leaf_g;
  if (cfg_.levels == 1) {
    leaf_g = top_.lookup_and_remap(key, fresh_g);
  } else {
    uint32_t topr = cfg_.levels - 1;
    Leaf fresh = rows_[topr]->draw_leaf();
    Leaf leaf = top_.lookup_and_remap(addr[topr], fresh);
    for (uint32_t r = topr; r >= 1; --r) {
      rows_[r]->begin_access(plan.rows[r], leaf);
      Block* b = rows_[r]->stash_block(addr[r]);
      if (b == nullptr)
        throw ProtocolViolation("posmap block missing at path row " + std::to_string(r));
      uint32_t slot = static_cast<uint32_t>((r == 1 ? key : addr[r - 1]) % fanin);
      Leaf next_fresh = (r == 1) ? fresh_g : rows_[r - 1]->draw_leaf();
      Leaf next_leaf = posmap_entry_get(*b, slot);
      posmap_entry_set(*b, slot, next_fresh);
      rows_[r]->finish_access(plan.rows[r]);
      leaf = next_leaf;
    }
    leaf_g = leaf;
  }

  rows_[0]->begin_access(plan.rows[0], leaf_g);
  if (is_write) {
    Block& b = rows_[0]->ensure_block(line, fresh_g, cfg_.block_bytes);
    if (write_data != nullptr) {
      std::size_t n = std::min<std::size_t>(cfg_.block_bytes, write_data->size());
      std::copy(write_data->begin(), write_data->begin() + static_cast<std::ptrdiff_t>(n),
                b.begin());
    }
  } else {
    plan.read_result.assign(cfg_.block_bytes, std::byte{0});
    if (Block* b = rows_[0]->stash_block(line)) {
      std::copy(b->begin(), b->begin() + cfg_.block_bytes, plan.read_result.begin());
    }
  }
  // The whole group shares the fresh mapping; every member that exists is in
  // the stash after the path read, so no stale tree label can survive.
  uint64_t first = key * group_len_;
  for (uint64_t m = first; m < first + group_len_ && m < geo_.blocks[0]; ++m) {
    rows_[0]->stash().set_leaf(m, fresh_g);
  }
  rows_[0]->finish_access(plan.rows[0]);
}

void PathHierarchy::dummy_access(AccessPlan& plan) {
  plan.rows.resize(cfg_.levels);
  plan.is_dummy = true;
  Leaf leaf = dummy_rng_.leaf(geo_.depths[0]);
  rows_[0]->begin_access(plan.rows[0], leaf);
  rows_[0]->finish_access(plan.rows[0]);
}

bool PathHierarchy::needs_relief() const {
  return rows_[0]->stash().size() > cfg_.proram_stash_threshold;
}

std::size_t PathHierarchy::stash_tags() const {
  std::size_t m = 0;
  for (const auto& r : rows_) m = std::max(m, r->stash().size());
  return m;
}

std::size_t PathHierarchy::stash_max_tags() const {
  std::size_t m = 0;
  for (const auto& r : rows_) m = std::max(m, r->stash_max_tags());
  return m;
}

std::vector<std::size_t> PathHierarchy::stash_max_rows() const {
  std::vector<std::size_t> out;
  for (const auto& r : rows_) out.push_back(r->stash_max_tags());
  return out;
}

uint64_t PathHierarchy::state_digest() const {
  uint64_t h = 0x9e3779b97f4a7c15ull;
  for (const auto& r : rows_) h = h * 0x100000001b3ull ^ r->state_digest();
  for (std::size_t i = 0; i < top_.size(); ++i) h = h * 0x100000001b3ull ^ top_.peek(i);
  return h;
}

uint64_t PathHierarchy::bucket_bytes(uint32_t r) const {
  return uint64_t{rows_[r]->bucket_cap(0)} * cfg_.block_bytes;
}

// ---------------------------------------------------------------- invariant scan

bool check_path_invariant(RingHierarchy& h) {
  uint32_t levels = h.levels();
  uint32_t fanin = h.config().posmap_entries_per_block;
  // Walk top-down so the parent row's block contents are at hand when the
  // child row's mapping is resolved.
  std::vector<std::unordered_map<uint64_t, const Block*>> blocks(levels);
  for (uint32_t r = 0; r < levels; ++r) {
    auto& tree = h.row(r).tree();
    for (NodeId n = 0; n < tree.node_count(); ++n) {
      for (const auto& slot : tree.reals(n)) blocks[r][slot.addr] = &slot.data;
    }
    for (const auto& e : h.row(r).stash().entries()) blocks[r][e.addr] = &e.data;
  }
  for (uint32_t r = levels; r-- > 0;) {
    auto& tree = h.row(r).tree();
    for (NodeId n = 0; n < tree.node_count(); ++n) {
      for (const auto& slot : tree.reals(n)) {
        Leaf current;
        if (r == levels - 1) {
          current = h.top().peek(slot.addr);
        } else {
          auto it = blocks[r + 1].find(slot.addr / fanin);
          if (it == blocks[r + 1].end()) return false;
          current = posmap_entry_get(*it->second, static_cast<uint32_t>(slot.addr % fanin));
        }
        if (slot.leaf != current) return false;
        if (!node_on_path(n, current, tree.depth())) return false;
      }
    }
  }
  return true;
}

}  // namespace oram
