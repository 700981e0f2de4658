#include "oram/config.hpp"

#include <cmath>

#include "oram/errors.hpp"

namespace oram {

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::PathOram: return "pathoram";
    case Protocol::RingOram: return "ringoram";
    case Protocol::PrOram: return "proram";
    case Protocol::Palermo: return "palermo";
    case Protocol::PalermoSw: return "palermo-sw";
  }
  return "?";
}

Protocol protocol_from_name(const std::string& name) {
  if (name == "pathoram") return Protocol::PathOram;
  if (name == "ringoram") return Protocol::RingOram;
  if (name == "proram") return Protocol::PrOram;
  if (name == "palermo") return Protocol::Palermo;
  if (name == "palermo-sw") return Protocol::PalermoSw;
  throw UsageError("unknown protocol: " + name);
}

void OramConfig::validate() const {
  if (z < 1) throw ConfigError("z must be >= 1");
  if (s < 1) throw ConfigError("s must be >= 1");
  if (a < 1) throw ConfigError("a must be >= 1");
  if (levels < 1) throw ConfigError("levels must be >= 1");
  if (prefetch_len < 1) throw ConfigError("prefetch_len must be >= 1");
  if (z + s > 64) throw ConfigError("z+s must be <= 64 (slot bitmap width)");
  if (block_bytes < 8 || (block_bytes & (block_bytes - 1)) != 0)
    throw ConfigError("block_bytes must be a power of two >= 8");
  if (posmap_entries_per_block < 1 || posmap_entries_per_block * 4 > block_bytes)
    throw ConfigError("posmap_entries_per_block entries of 4 bytes must fit in a block");
  if (z_path < 1) throw ConfigError("z_path must be >= 1");
  if (stash_capacity < 1) throw ConfigError("stash_capacity must be >= 1");
  if (protected_mib < 1) throw ConfigError("protected_mib must be >= 1");
  if (fat_tree_scale < 1.0) throw ConfigError("fat_tree_scale must be >= 1.0");
}

const std::vector<ZsaTriple>& zsa_presets() {
  static const std::vector<ZsaTriple> presets = {
      {4, 5, 3},
      {8, 12, 8},
      {16, 27, 20},
  };
  return presets;
}

void DramConfig::validate() const {
  if (channels < 1 || (channels & (channels - 1)) != 0)
    throw ConfigError("channels must be a power of two >= 1");
  if (banks_per_channel < 1) throw ConfigError("banks_per_channel must be >= 1");
  if (row_bytes < 64) throw ConfigError("row_bytes must be >= 64");
  if (queue_depth < 1) throw ConfigError("queue_depth must be >= 1");
  if (peak_bw_bytes_per_s <= 0) throw ConfigError("peak_bw must be positive");
}

void MeshConfig::validate() const {
  if (rows < 1) throw ConfigError("mesh rows must be >= 1");
  if (cols < 1) throw ConfigError("mesh cols must be >= 1");
  if (clock_hz <= 0) throw ConfigError("clock_hz must be positive");
}

}  // namespace oram
