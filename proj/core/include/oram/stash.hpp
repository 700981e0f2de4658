#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "oram/tree.hpp"

namespace oram {

// Bounded on-chip block buffer keyed by block address. Exceeding the
// capacity is a protocol violation unless the owner opted into unbounded
// mode (PrORAM relieves pressure with background evictions instead).
class Stash {
 public:
  struct Entry {
    uint64_t addr;
    Leaf leaf;
    Block data;
  };

  Stash(uint32_t capacity, bool bounded) : capacity_(capacity), bounded_(bounded) {}

  std::size_t size() const { return entries_.size(); }
  uint32_t capacity() const { return capacity_; }
  bool contains(uint64_t addr) const { return index_.count(addr) != 0; }

  Entry* find(uint64_t addr);
  const Entry* find(uint64_t addr) const;

  // Insert or overwrite; the freshest mapping/payload wins.
  Entry& put(uint64_t addr, Leaf leaf, Block&& data);

  void set_leaf(uint64_t addr, Leaf leaf);
  void erase(uint64_t addr);

  bool over(uint32_t threshold) const { return entries_.size() > threshold; }
  void check_bound() const;  // throws ProtocolViolation when bounded and over capacity

  // Deterministic iteration in (mutation-history-defined) slot order.
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  uint32_t capacity_;
  bool bounded_;
  std::vector<Entry> entries_;
  std::unordered_map<uint64_t, std::size_t> index_;
};

}  // namespace oram
