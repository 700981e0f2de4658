#pragma once

#include <cstdint>
#include <vector>

namespace oram {

// Protocol phases as executed by a PE (and mirrored by the serialized
// schedulers). CP carries no memory traffic; Serve is stash-local.
enum class Phase : uint8_t { CP, LM, ER, RP, EP, Serve };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::CP: return "CP";
    case Phase::LM: return "LM";
    case Phase::ER: return "ER";
    case Phase::RP: return "RP";
    case Phase::EP: return "EP";
    case Phase::Serve: return "Serve";
  }
  return "?";
}

enum class CmdKind : uint8_t { Read, Write };

// One 64B-granularity DRAM transaction plus the protocol tags the
// analysis layer needs. issue/complete cycles are filled by the
// memory model.
struct MemCommand {
  uint64_t addr = 0;
  uint32_t size = 64;
  CmdKind kind = CmdKind::Read;
  uint8_t row = 0;         // hierarchy level: 0 = data tree
  Phase phase = Phase::RP;
  uint8_t tree_level = 0;  // level of the target node, 0 = root (tree-top filter key)
  bool meta = false;       // node-metadata transfer as opposed to a data block
  uint64_t req_id = 0;     // per-row dense issue id of the owning request

  uint64_t issue_cycle = 0;
  uint64_t complete_cycle = 0;
};

// Per-row command bundles for one ORAM access, in protocol order.
// Reads in er/ep precede the writes of the same phase on the bus
// (write-back needs the pulled blocks).
struct RowPlan {
  uint64_t seq = 0;       // dense per-row issue id (1-based)
  uint64_t leaf = 0;      // path that was read
  bool fake_read = false; // pending address: uniform fake path
  bool evict_due = false;
  uint32_t bypassed_nodes = 0;  // nodes reset by the pre-check and skipped in RP

  std::vector<MemCommand> lm;
  std::vector<MemCommand> er_reads, er_writes;
  std::vector<MemCommand> rp;
  std::vector<MemCommand> ep_reads, ep_writes;

  std::vector<uint64_t> er_nodes, ep_nodes;

  std::size_t command_count() const {
    return lm.size() + er_reads.size() + er_writes.size() + rp.size() + ep_reads.size() +
           ep_writes.size();
  }
};

// Everything one front-end request produced, all rows. The payload result
// is computed functionally in commit order; the schedulers only decide
// when the traffic happens.
struct AccessPlan {
  uint64_t request_index = 0;  // dense admission index (1-based)
  bool is_write = false;
  bool is_dummy = false;       // injected traffic (PrORAM relief / rate padding)
  bool stash_hit = false;      // requested block was stash-resident (pending)
  int64_t forward_from = -1;   // request_index whose fetch supplies the data, if any
  uint64_t line_addr = 0;
  std::vector<std::byte> read_result;
  std::vector<RowPlan> rows;   // index = row (0 = data)

  std::size_t command_count() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.command_count();
    return n;
  }
};

}  // namespace oram
