#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "oram/command.hpp"
#include "oram/config.hpp"
#include "oram/hierarchy.hpp"

namespace oram {

// Functional protocol front: translates one protected-space request into
// the traffic plans the schedulers execute. All state mutation happens here,
// strictly in admission order, so the final tree/stash state is a function
// of (seed, trace) alone no matter how the scheduler overlaps the traffic.
class ProtocolEngine {
 public:
  virtual ~ProtocolEngine() = default;

  // Appends plans for this request to `out` (injected relief traffic comes
  // first). `next_index` supplies dense request indices.
  virtual void access(uint64_t line, bool is_write, const Block* data, uint64_t& next_index,
                      std::vector<AccessPlan>& out) = 0;

  virtual Protocol kind() const = 0;
  virtual uint32_t levels() const = 0;
  virtual uint32_t row_depth(uint32_t row) const = 0;
  virtual uint64_t bucket_bytes(uint32_t row) const = 0;
  virtual std::size_t stash_tags() const = 0;
  virtual std::size_t stash_max_tags() const = 0;
  virtual std::vector<std::size_t> stash_max_rows() const = 0;
  virtual uint64_t state_digest() const = 0;
  virtual uint64_t dummy_count() const { return 0; }
};

std::unique_ptr<ProtocolEngine> make_protocol(Protocol p, const OramConfig& cfg, uint64_t seed);

class RingOramProtocol : public ProtocolEngine {
 public:
  RingOramProtocol(const OramConfig& cfg, uint64_t seed, bool concurrent);
  void access(uint64_t line, bool is_write, const Block* data, uint64_t& next_index,
              std::vector<AccessPlan>& out) override;
  Protocol kind() const override { return concurrent_ ? Protocol::Palermo : Protocol::RingOram; }
  uint32_t levels() const override { return hier_.levels(); }
  uint32_t row_depth(uint32_t row) const override { return hier_.geometry().depths[row]; }
  uint64_t bucket_bytes(uint32_t row) const override { return hier_.bucket_bytes(row); }
  std::size_t stash_tags() const override { return hier_.stash_tags(); }
  std::size_t stash_max_tags() const override { return hier_.stash_max_tags(); }
  std::vector<std::size_t> stash_max_rows() const override { return hier_.stash_max_rows(); }
  uint64_t state_digest() const override { return hier_.state_digest(); }

  RingHierarchy& hierarchy() { return hier_; }

 private:
  bool concurrent_;
  RingHierarchy hier_;
};

class PathOramProtocol : public ProtocolEngine {
 public:
  PathOramProtocol(const OramConfig& cfg, uint64_t seed);
  void access(uint64_t line, bool is_write, const Block* data, uint64_t& next_index,
              std::vector<AccessPlan>& out) override;
  Protocol kind() const override { return Protocol::PathOram; }
  uint32_t levels() const override { return hier_.levels(); }
  uint32_t row_depth(uint32_t row) const override { return hier_.geometry().depths[row]; }
  uint64_t bucket_bytes(uint32_t row) const override { return hier_.bucket_bytes(row); }
  std::size_t stash_tags() const override { return hier_.stash_tags(); }
  std::size_t stash_max_tags() const override { return hier_.stash_max_tags(); }
  std::vector<std::size_t> stash_max_rows() const override { return hier_.stash_max_rows(); }
  uint64_t state_digest() const override { return hier_.state_digest(); }

  PathHierarchy& hierarchy() { return hier_; }

 private:
  PathHierarchy hier_;
};

// PrORAM-style forced-leaf prefetching over the PathORAM base. Consecutive
// lines share one mapped leaf; stash pressure above the threshold injects
// dummy full-path accesses before the next real request.
class PrOramProtocol : public ProtocolEngine {
 public:
  PrOramProtocol(const OramConfig& cfg, uint64_t seed);
  void access(uint64_t line, bool is_write, const Block* data, uint64_t& next_index,
              std::vector<AccessPlan>& out) override;
  Protocol kind() const override { return Protocol::PrOram; }
  uint32_t levels() const override { return hier_.levels(); }
  uint32_t row_depth(uint32_t row) const override { return hier_.geometry().depths[row]; }
  uint64_t bucket_bytes(uint32_t row) const override { return hier_.bucket_bytes(row); }
  std::size_t stash_tags() const override { return hier_.stash_tags(); }
  std::size_t stash_max_tags() const override { return hier_.stash_max_tags(); }
  std::vector<std::size_t> stash_max_rows() const override { return hier_.stash_max_rows(); }
  uint64_t state_digest() const override { return hier_.state_digest(); }
  uint64_t dummy_count() const override { return dummy_count_; }

  PathHierarchy& hierarchy() { return hier_; }

 private:
  PathHierarchy hier_;
  uint64_t dummy_count_ = 0;
};

}  // namespace oram
