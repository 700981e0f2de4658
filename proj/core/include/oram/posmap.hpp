#pragma once

#include <cstdint>
#include <vector>

#include "oram/rng.hpp"
#include "oram/tree.hpp"

namespace oram {

// The top position-map level, always on-chip. Lower levels live inside the
// data blocks of the parent tree (see Hierarchy); this table covers the
// blocks of the topmost tree row.
class PosMapTop {
 public:
  PosMapTop() = default;
  explicit PosMapTop(std::vector<Leaf> entries) : entries_(std::move(entries)) {}

  std::size_t size() const { return entries_.size(); }

  // Returns the prior mapping and installs `fresh` atomically.
  Leaf lookup_and_remap(uint64_t addr, Leaf fresh);
  Leaf peek(uint64_t addr) const;

 private:
  std::vector<Leaf> entries_;
};

// Position-map entries are 4-byte little-endian leaves packed into block
// payloads; these helpers are the wire format of a PosMap tree block.
Leaf posmap_entry_get(const Block& block, uint32_t slot);
void posmap_entry_set(Block& block, uint32_t slot, Leaf leaf);

}  // namespace oram
