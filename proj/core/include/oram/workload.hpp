#pragma once

#include <cstdint>
#include <list>
#include <string>
#include <unordered_map>
#include <vector>

#include "oram/rng.hpp"

namespace oram {

// One LLC-miss candidate. Addresses are byte addresses into the protected
// space; write payloads are synthesized deterministically from the seed.
struct TraceRecord {
  bool is_write = false;
  uint64_t addr = 0;
};

// Front-end pacing. rate == 0 means self-paced (admit whenever the
// controller has capacity). With padding enabled, dummy requests fill
// issue slots the trace cannot.
struct IssuePolicy {
  double rate_per_kilocycle = 0.0;
  bool pad_with_dummies = false;

  bool constant_rate() const { return rate_per_kilocycle > 0.0; }
  uint64_t interval_cycles() const {
    return rate_per_kilocycle > 0 ? static_cast<uint64_t>(1000.0 / rate_per_kilocycle) : 0;
  }
};

// n sequential cache-line reads starting at 0, wrapping at the space size.
std::vector<TraceRecord> gen_stream(uint64_t n, uint64_t space_bytes);

// Uniform block addresses, 50/50 read/write mix.
std::vector<TraceRecord> gen_rand(uint64_t n, uint64_t seed, uint64_t space_bytes);

// Zipf-distributed block addresses (key-value style skew), 50/50 mix.
// skew <= 0 is an argument error.
std::vector<TraceRecord> gen_zipf(uint64_t n, uint64_t seed, double skew, uint64_t space_bytes);

// Parse a trace file: one `R|W 0x<hex>` record per line, `#` comments.
std::vector<TraceRecord> ingest(const std::string& path, uint64_t space_bytes);
std::vector<TraceRecord> ingest_text(const std::string& text, uint64_t space_bytes);

// Zipf sampler over [0, n) with exponent `skew`.
class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double skew);
  uint64_t sample(Rng& rng) const;

 private:
  uint64_t n_;
  double skew_;
  std::vector<double> cdf_;
};

// LRU set of recently fetched prefetch groups; a read whose group is
// resident never becomes an ORAM request (the stand-in for LLC hits).
// Writes always go through so the tree copy stays authoritative.
class PrefetchFilter {
 public:
  PrefetchFilter(uint32_t group_len, std::size_t capacity);

  // True when the record is absorbed (bypass). Non-bypassed accesses
  // refresh their group's residency.
  bool filter(const TraceRecord& rec);

  uint64_t bypasses() const { return bypasses_; }
  uint32_t group_len() const { return group_len_; }

 private:
  void touch_group(uint64_t group);

  uint32_t group_len_;
  std::size_t capacity_;
  uint64_t bypasses_ = 0;
  std::list<uint64_t> lru_;
  std::unordered_map<uint64_t, std::list<uint64_t>::iterator> where_;
};

// Deterministic payload for the i-th write of a run.
void synth_payload(uint64_t seed, uint64_t index, std::vector<std::byte>& out);

}  // namespace oram
