#include "oram/stash.hpp"

#include <string>

#include "oram/errors.hpp"

namespace oram {

Stash::Entry* Stash::find(uint64_t addr) {
  auto it = index_.find(addr);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const Stash::Entry* Stash::find(uint64_t addr) const {
  auto it = index_.find(addr);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

Stash::Entry& Stash::put(uint64_t addr, Leaf leaf, Block&& data) {
  auto it = index_.find(addr);
  if (it != index_.end()) {
    Entry& e = entries_[it->second];
    e.leaf = leaf;
    e.data = std::move(data);
    return e;
  }
  entries_.push_back(Entry{addr, leaf, std::move(data)});
  index_[addr] = entries_.size() - 1;
  check_bound();
  return entries_.back();
}

void Stash::set_leaf(uint64_t addr, Leaf leaf) {
  if (Entry* e = find(addr)) e->leaf = leaf;
}

void Stash::erase(uint64_t addr) {
  auto it = index_.find(addr);
  if (it == index_.end()) return;
  std::size_t pos = it->second;
  index_.erase(it);
  if (pos != entries_.size() - 1) {
    entries_[pos] = std::move(entries_.back());
    index_[entries_[pos].addr] = pos;
  }
  entries_.pop_back();
}

void Stash::check_bound() const {
  if (bounded_ && entries_.size() > capacity_)
    throw ProtocolViolation("stash overflow: " + std::to_string(entries_.size()) + " tags > capacity " +
                            std::to_string(capacity_));
}

}  // namespace oram
