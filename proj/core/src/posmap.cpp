#include "oram/posmap.hpp"

#include <stdexcept>
#include <string>

namespace oram {

Leaf PosMapTop::lookup_and_remap(uint64_t addr, Leaf fresh) {
  if (addr >= entries_.size())
    throw std::invalid_argument("posmap address " + std::to_string(addr) + " not covered");
  Leaf old = entries_[addr];
  entries_[addr] = fresh;
  return old;
}

Leaf PosMapTop::peek(uint64_t addr) const {
  if (addr >= entries_.size())
    throw std::invalid_argument("posmap address " + std::to_string(addr) + " not covered");
  return entries_[addr];
}

Leaf posmap_entry_get(const Block& block, uint32_t slot) {
  std::size_t off = std::size_t{slot} * 4;
  if (off + 4 > block.size()) throw std::invalid_argument("posmap entry slot out of block bounds");
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(block[off + static_cast<std::size_t>(i)]);
  return v;
}

void posmap_entry_set(Block& block, uint32_t slot, Leaf leaf) {
  std::size_t off = std::size_t{slot} * 4;
  if (off + 4 > block.size()) throw std::invalid_argument("posmap entry slot out of block bounds");
  uint32_t v = static_cast<uint32_t>(leaf);
  for (int i = 0; i < 4; ++i) {
    block[off + static_cast<std::size_t>(i)] = static_cast<std::byte>(v & 0xff);
    v >>= 8;
  }
}

}  // namespace oram
