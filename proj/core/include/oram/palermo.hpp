#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oram/command.hpp"
#include "oram/config.hpp"
#include "oram/posmap.hpp"
#include "oram/stash.hpp"
#include "oram/tree.hpp"

namespace oram {

// One in-flight protected-space request as seen by the concurrent protocol.
struct OramRequest {
  uint64_t pa = 0;
  bool is_write = false;
  std::optional<Block> payload;
  uint64_t global_id = 0;  // dense per hierarchy level, 1-based
};

// Commit-order bookkeeping of the concurrent protocol.
struct ConcurrencyState {
  uint64_t commit_head = 1;  // next global_id allowed into the tree-lock window
  std::vector<uint64_t> pending;
};

struct PhaseRef {
  uint64_t global_id;
  uint32_t row;
  Phase phase;
  bool operator==(const PhaseRef&) const = default;
};

struct DepEdge {
  PhaseRef from, to;
  bool operator==(const DepEdge&) const = default;
};

// The minimal ordering constraints for a window of concurrent requests:
//   (i)  sibling: request k's LM (and transitively RP) must not begin
//        before k-1 finished its tree-modifying phases at that level --
//        keyed on ER always, on EP when k-1 is eviction-bound;
//   (ii) parent-child: row r's LM waits for row r+1's RP response;
//   (iii) a request's own EP is serialized after its own RP.
// Nothing else is ordered.
std::vector<DepEdge> dependency_edges(const std::vector<OramRequest>& in_flight, uint32_t a,
                                      uint32_t levels);

// ---------------------------------------------------------------------------
// Exhaustive-interleaving model: one sub-ORAM level driven at the
// granularity of individual protocol steps (lock window, per-node reset
// pull/push, per-node path touches, serve, eviction). Every linearization
// permitted by the dependency contract is executed against live state and
// checked for double-selected slots, reads inside a bucket's reset window,
// and flat-memory-correct outputs.
// ---------------------------------------------------------------------------

enum class AtomKind : uint8_t { LockLm, ErPull, ErPush, Touch, Serve, EpPull, EpPush };

struct Atom {
  uint32_t req;  // index into the scenario request list
  AtomKind kind;
  NodeId node = 0;
};

struct ScheduleScenario {
  uint32_t depth = 2;
  uint32_t z = 2, s = 2, a = 3;
  uint64_t seed = 1;
  std::vector<OramRequest> requests;  // the concurrent window, <= 3 for exhaustion
};

struct ScheduleOutcome {
  uint64_t schedules = 0;
  bool exhausted = true;  // false when the cap stopped enumeration
  bool ok = true;
  std::string failure;
  std::vector<Atom> failing_schedule;
};

class ScheduleSpace {
 public:
  explicit ScheduleSpace(const ScheduleScenario& sc);

  // Enumerates every legal schedule (up to `cap`), executing and checking
  // each. Stops at the first violation.
  ScheduleOutcome run(uint64_t cap = 5'000'000);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<std::vector<uint32_t>>& preds() const { return preds_; }

 private:
  struct StaticReq {
    bool fake = false;
    Leaf read_leaf = 0;
    Leaf fresh_leaf = 0;
    std::vector<NodeId> precheck_nodes;
    std::vector<NodeId> touch_nodes;
    bool evict_due = false;
    std::vector<NodeId> ep_nodes;
    int32_t producer = -1;  // request whose pull/serve supplies a pending read
    bool has_real_pull = false;
    NodeId real_pull_node = 0;
    Block expected;  // flat-memory result for reads
  };

  struct Machine;

  void prerun();
  void build_atoms();

  ScheduleScenario sc_;
  std::vector<StaticReq> statics_;
  std::vector<Atom> atoms_;
  std::vector<std::vector<uint32_t>> preds_;
  std::unique_ptr<Machine> initial_;
};

}  // namespace oram
