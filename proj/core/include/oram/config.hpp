#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oram {

enum class Protocol { PathOram, RingOram, PrOram, Palermo, PalermoSw };

const char* protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);

// Protocol and tree-geometry parameters shared by all hierarchy levels.
//
// The protected space is `protected_lines` cache lines of `block_bytes`
// each.  Ring-family data trees hold one block of prefetch_len lines per
// slot, so the data tree has ceil(lines / prefetch_len) blocks and depth
// ceil(log2(blocks / z)) unless depth_override pins it.
struct OramConfig {
  uint32_t z = 16;  // real-capable slots per bucket
  uint32_t s = 27;  // dummy slots per bucket
  uint32_t a = 20;  // eviction period in accesses

  uint32_t levels = 3;  // hierarchy rows including the data row
  uint32_t block_bytes = 64;
  uint32_t posmap_entries_per_block = 16;
  uint32_t prefetch_len = 1;
  uint32_t stash_capacity = 256;

  uint64_t protected_mib = 64;
  int32_t depth_override = -1;  // -1: derive from protected space

  // PathORAM / PrORAM
  uint32_t z_path = 4;
  uint32_t proram_stash_threshold = 1024;
  double fat_tree_scale = 1.0;  // >1 widens buckets toward the root (hook only)

  uint32_t crypto_latency_cycles = 0;
  bool warm_init = true;
  bool sequential_evict_order = false;  // default: bit-reversed eviction leaves

  uint64_t protected_lines() const { return protected_mib * (1024ull * 1024ull) / block_bytes; }

  void validate() const;  // throws ConfigError
};

// Shipped (z, s, a) presets known to keep a 256-tag stash bounded.
struct ZsaTriple {
  uint32_t z, s, a;
};
const std::vector<ZsaTriple>& zsa_presets();

// Cycle-approximate DDR4-style memory model parameters.
struct DramConfig {
  uint32_t channels = 4;
  uint32_t banks_per_channel = 16;
  uint32_t row_bytes = 2048;
  double tCL_ns = 13.75;
  double tRCD_ns = 13.75;
  double tRP_ns = 13.75;
  double peak_bw_bytes_per_s = 102.4e9;  // channels * per-channel pin bandwidth
  uint32_t queue_depth = 32;
  uint32_t age_cap_rounds = 64;

  void validate() const;
  double per_channel_bw() const { return peak_bw_bytes_per_s / channels; }
};

// PE-array geometry and on-chip latencies.
struct MeshConfig {
  uint32_t rows = 3;  // must equal OramConfig::levels
  uint32_t cols = 8;
  double clock_hz = 1.6e9;
  int32_t treetop_levels = -1;  // -1: size to treetop_budget_bytes per row
  uint64_t treetop_budget_bytes = 256 * 1024;
  uint32_t onchip_posmap_latency = 2;  // EDRAM PosMap lookup, cycles
  uint32_t onchip_sram_latency = 1;    // stash / tree-top hit, cycles
  uint32_t signal_latency = 1;         // sibling clear and query hop, cycles

  void validate() const;
  double ns_per_cycle() const { return 1e9 / clock_hz; }
};

}  // namespace oram
