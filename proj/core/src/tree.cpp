#include "oram/tree.hpp"

#include <bit>
#include <stdexcept>
#include <string>

#include "oram/errors.hpp"

namespace oram {

std::vector<NodeId> path_nodes(Leaf leaf, uint32_t depth) {
  if (depth >= 63) throw std::invalid_argument("tree depth out of range");
  if (leaf >= (Leaf{1} << depth))
    throw std::invalid_argument("leaf " + std::to_string(leaf) + " out of range for depth " +
                                std::to_string(depth));
  std::vector<NodeId> out;
  out.reserve(depth + 1);
  NodeId n = leaf_node(leaf, depth);
  out.push_back(n);
  while (n != 0) {
    n = parent_of(n);
    out.push_back(n);
  }
  return out;
}

uint32_t level_of(NodeId n) { return static_cast<uint32_t>(std::bit_width(n + 1) - 1); }

bool node_on_path(NodeId node, Leaf leaf, uint32_t depth) {
  NodeId cur = leaf_node(leaf, depth);
  while (true) {
    if (cur == node) return true;
    if (cur == 0) return false;
    cur = parent_of(cur);
  }
}

uint64_t bit_reverse(uint64_t v, uint32_t bits) {
  uint64_t out = 0;
  for (uint32_t i = 0; i < bits; ++i) {
    out = (out << 1) | ((v >> i) & 1);
  }
  return out;
}

TreeState::TreeState(uint32_t depth, uint32_t z, uint32_t s) : depth_(depth), z_(z), s_(s) {
  if (depth >= 40) throw ConfigError("tree depth too large to materialize");
  uint64_t nodes = (uint64_t{1} << (depth + 1)) - 1;
  uint64_t full = (slots() == 64) ? ~0ull : ((1ull << slots()) - 1);
  valid_.assign(nodes, full);
  accessed_.assign(nodes, 0);
  reals_.resize(nodes);
}

uint32_t TreeState::valid_count(NodeId n) const {
  return static_cast<uint32_t>(std::popcount(valid_[n]));
}

bool TreeState::has_addr(NodeId n, uint64_t addr) const {
  for (const auto& r : reals_[n])
    if (r.addr == addr) return true;
  return false;
}

TreeState::TouchResult TreeState::touch(NodeId n, uint64_t want) {
  auto& list = reals_[n];
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].addr == want) {
      uint32_t off = list[i].offset;
      if (!(valid_[n] >> off & 1))
        throw ProtocolViolation("real slot already touched (double select) at node " +
                                std::to_string(n));
      valid_[n] &= ~(1ull << off);
      ++accessed_[n];
      TouchResult res{off, true, std::move(list[i])};
      list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
      return res;
    }
  }
  // dummy touch: lowest-index valid slot not holding a real block
  uint64_t real_mask = 0;
  for (const auto& r : list) real_mask |= 1ull << r.offset;
  uint64_t dummies = valid_[n] & ~real_mask;
  if (dummies == 0)
    throw ProtocolViolation("no untouched dummy slot available at node " + std::to_string(n) +
                            " (bucket not reshuffled in time)");
  uint32_t off = static_cast<uint32_t>(std::countr_zero(dummies));
  valid_[n] &= ~(1ull << off);
  ++accessed_[n];
  return TouchResult{off, false, std::nullopt};
}

std::vector<uint32_t> TreeState::reset_fetch_offsets(NodeId n) const {
  std::vector<uint32_t> out;
  out.reserve(z_);
  uint64_t real_mask = 0;
  for (const auto& r : reals_[n]) {
    if (valid_[n] >> r.offset & 1) out.push_back(r.offset);
    real_mask |= 1ull << r.offset;
  }
  uint64_t dummies = valid_[n] & ~real_mask;
  while (out.size() < z_ && dummies != 0) {
    uint32_t off = static_cast<uint32_t>(std::countr_zero(dummies));
    dummies &= dummies - 1;
    out.push_back(off);
  }
  if (out.size() < z_)
    throw ProtocolViolation("cannot pad reset fetch to z offsets at node " + std::to_string(n));
  return out;
}

std::vector<RealSlot> TreeState::extract_valid_reals(NodeId n) {
  std::vector<RealSlot> pulled;
  auto& list = reals_[n];
  std::vector<RealSlot> keep;
  for (auto& r : list) {
    if (valid_[n] >> r.offset & 1) {
      pulled.push_back(std::move(r));
    } else {
      keep.push_back(std::move(r));
    }
  }
  list = std::move(keep);
  return pulled;
}

void TreeState::fill_bucket(NodeId n, std::vector<RealSlot>&& blocks, Rng& perm_rng) {
  if (blocks.size() > z_) throw ProtocolViolation("bucket overfill");
  // fresh permutation: random offsets for the real blocks, rest dummies
  std::vector<uint32_t> offs(slots());
  for (uint32_t i = 0; i < slots(); ++i) offs[i] = i;
  perm_rng.shuffle(offs);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].offset = offs[i];
  reals_[n] = std::move(blocks);
  valid_[n] = (slots() == 64) ? ~0ull : ((1ull << slots()) - 1);
  accessed_[n] = 0;
}

bool TreeState::try_place_initial(NodeId n, uint64_t addr, Leaf leaf, Block&& data) {
  if (reals_[n].size() >= z_) return false;
  reals_[n].push_back(RealSlot{0, addr, leaf, std::move(data)});
  return true;
}

void TreeState::finalize_initial_offsets(Rng& perm_rng) {
  std::vector<uint32_t> offs;
  for (NodeId n = 0; n < node_count(); ++n) {
    auto& list = reals_[n];
    if (list.empty()) continue;
    offs.resize(slots());
    for (uint32_t i = 0; i < slots(); ++i) offs[i] = i;
    perm_rng.shuffle(offs);
    for (std::size_t i = 0; i < list.size(); ++i) list[i].offset = offs[i];
  }
}

void TreeState::check_touch_conservation() const {
  for (NodeId n = 0; n < node_count(); ++n) {
    if (valid_count(n) + accessed_[n] != slots())
      throw ProtocolViolation("touch conservation violated at node " + std::to_string(n));
  }
}

}  // namespace oram
