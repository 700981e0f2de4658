#include "oram/path_row.hpp"

#include <cmath>

#include "oram/errors.hpp"

namespace oram {

PathRowEngine::PathRowEngine(uint8_t row, uint32_t depth, const OramConfig& cfg, uint64_t seed,
                             bool bounded_stash)
    : row_(row),
      cfg_(cfg),
      depth_(depth),
      stash_(cfg.stash_capacity, bounded_stash),
      leaf_rng_(seed, 0x33abcd00ull + row) {
  if (depth >= 40) throw ConfigError("tree depth too large to materialize");
  zcap_.resize(depth + 1);
  for (uint32_t lvl = 0; lvl <= depth; ++lvl) {
    // fat_tree_scale = 1 keeps the classic uniform bucket; > 1 widens the
    // root end geometrically down to x1 at the leaves.
    double expo = depth == 0 ? 0.0 : static_cast<double>(depth - lvl) / depth;
    zcap_[lvl] = std::max<uint32_t>(
        1, static_cast<uint32_t>(std::llround(cfg.z_path * std::pow(cfg.fat_tree_scale, expo))));
  }
  buckets_.resize((uint64_t{1} << (depth + 1)) - 1);
}

void PathRowEngine::emit_bucket(std::vector<MemCommand>& out, NodeId node, CmdKind kind,
                                Phase phase) {
  uint32_t cap = bucket_cap(node);
  // Bucket slot addresses assume the widest bucket so the map stays level-independent.
  uint32_t stride = zcap_[0];
  for (uint32_t k = 0; k < cap; ++k) {
    MemCommand c;
    c.addr = slot_base_ + (node * stride + k) * cfg_.block_bytes;
    c.size = cfg_.block_bytes;
    c.kind = kind;
    c.row = row_;
    c.phase = phase;
    c.tree_level = static_cast<uint8_t>(level_of(node));
    c.meta = false;
    c.req_id = seq_;
    out.push_back(c);
  }
}

void PathRowEngine::begin_access(RowPlan& plan, Leaf leaf) {
  ++seq_;
  plan.seq = seq_;
  plan.leaf = leaf;
  cur_leaf_ = leaf;
  for (NodeId n : path_nodes(leaf, depth_)) {
    emit_bucket(plan.rp, n, CmdKind::Read, Phase::RP);
    for (auto& b : buckets_[n]) {
      stash_.put(b.addr, b.leaf, std::move(b.data));
    }
    buckets_[n].clear();
  }
  if (stash_.size() > stash_max_) stash_max_ = stash_.size();
}

void PathRowEngine::finish_access(RowPlan& plan) {
  // Greedy write-back, deepest bucket first so blocks land as low as possible.
  auto path = path_nodes(cur_leaf_, depth_);
  plan.ep_nodes = path;
  for (NodeId n : path) {
    uint32_t cap = bucket_cap(n);
    std::vector<uint64_t> chosen;
    for (const auto& e : stash_.entries()) {
      if (chosen.size() >= cap) break;
      if (node_on_path(n, e.leaf, depth_)) chosen.push_back(e.addr);
    }
    auto& bucket = buckets_[n];
    for (uint64_t addr : chosen) {
      Stash::Entry* e = stash_.find(addr);
      bucket.push_back(PSlot{e->addr, e->leaf, std::move(e->data)});
      stash_.erase(addr);
    }
    emit_bucket(plan.ep_writes, n, CmdKind::Write, Phase::EP);
  }
  stash_.check_bound();
  if (stash_.size() > stash_max_) stash_max_ = stash_.size();
}

Block* PathRowEngine::stash_block(uint64_t addr) {
  Stash::Entry* e = stash_.find(addr);
  return e ? &e->data : nullptr;
}

Block& PathRowEngine::ensure_block(uint64_t addr, Leaf leaf, std::size_t bytes) {
  if (Stash::Entry* e = stash_.find(addr)) return e->data;
  Block zero(bytes, std::byte{0});
  Stash::Entry& e = stash_.put(addr, leaf, std::move(zero));
  if (stash_.size() > stash_max_) stash_max_ = stash_.size();
  return e.data;
}

void PathRowEngine::place_initial(uint64_t addr, Leaf leaf, Block&& data) {
  for (NodeId n : path_nodes(leaf, depth_)) {
    if (buckets_[n].size() < bucket_cap(n)) {
      buckets_[n].push_back(PSlot{addr, leaf, std::move(data)});
      return;
    }
  }
  stash_.put(addr, leaf, std::move(data));
  if (stash_.size() > stash_max_) stash_max_ = stash_.size();
}

uint64_t PathRowEngine::state_digest() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  for (NodeId n = 0; n < buckets_.size(); ++n) {
    for (const auto& b : buckets_[n]) {
      mix(n);
      mix(b.addr);
      mix(b.leaf);
      for (std::byte x : b.data) mix(static_cast<uint64_t>(x));
    }
  }
  for (const auto& e : stash_.entries()) {
    mix(e.addr);
    mix(e.leaf);
    for (std::byte x : e.data) mix(static_cast<uint64_t>(x));
  }
  return h;
}

}  // namespace oram
