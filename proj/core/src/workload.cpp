#include "oram/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "oram/errors.hpp"

namespace oram {

std::vector<TraceRecord> gen_stream(uint64_t n, uint64_t space_bytes) {
  std::vector<TraceRecord> out;
  out.reserve(n);
  uint64_t lines = space_bytes / 64;
  for (uint64_t i = 0; i < n; ++i) {
    out.push_back(TraceRecord{false, (i % lines) * 64});
  }
  return out;
}

std::vector<TraceRecord> gen_rand(uint64_t n, uint64_t seed, uint64_t space_bytes) {
  std::vector<TraceRecord> out;
  out.reserve(n);
  Rng rng(seed, 0xaaabull);
  uint64_t lines = space_bytes / 64;
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t line = rng.below(lines);
    bool w = (rng.u64() & 1) != 0;
    out.push_back(TraceRecord{w, line * 64});
  }
  return out;
}

ZipfSampler::ZipfSampler(uint64_t n, double skew) : n_(n), skew_(skew) {
  if (skew <= 0) throw std::invalid_argument("zipf skew must be > 0");
  if (n == 0) throw std::invalid_argument("zipf needs a nonempty domain");
  // Exact inverse-CDF table; works for any positive exponent.
  cdf_.resize(n_);
  double acc = 0;
  for (uint64_t i = 0; i < n_; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), skew_);
    cdf_[i] = acc;
  }
  for (auto& v : cdf_) v /= acc;
}

uint64_t ZipfSampler::sample(Rng& rng) const {
  double u = rng.unit();
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) return n_ - 1;
  return static_cast<uint64_t>(it - cdf_.begin());
}

std::vector<TraceRecord> gen_zipf(uint64_t n, uint64_t seed, double skew, uint64_t space_bytes) {
  if (skew <= 0) throw std::invalid_argument("zipf skew must be > 0");
  std::vector<TraceRecord> out;
  out.reserve(n);
  Rng rng(seed, 0xbbbcull);
  uint64_t lines = space_bytes / 64;
  ZipfSampler zipf(lines, skew);
  // scramble rank->address so the hot set is not spatially clustered
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t rank = zipf.sample(rng);
    uint64_t line = Rng::splitmix(rank * 0x9e3779b97f4a7c15ull + 0x1234) % lines;
    bool w = (rng.u64() & 1) != 0;
    out.push_back(TraceRecord{w, line * 64});
  }
  return out;
}

std::vector<TraceRecord> ingest_text(const std::string& text, uint64_t space_bytes) {
  std::vector<TraceRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos) continue;
    if (line[i] == '#') continue;
    char op = line[i];
    if (op != 'R' && op != 'W') throw TraceParseError("expected R or W", lineno);
    std::size_t sp = line.find_first_not_of(" \t", i + 1);
    if (sp == std::string::npos || line.compare(sp, 2, "0x") != 0)
      throw TraceParseError("expected 0x-prefixed address", lineno);
    uint64_t addr = 0;
    std::size_t pos = sp + 2;
    if (pos >= line.size() || !std::isxdigit(static_cast<unsigned char>(line[pos])))
      throw TraceParseError("expected hex digits after 0x", lineno);
    for (; pos < line.size() && std::isxdigit(static_cast<unsigned char>(line[pos])); ++pos) {
      char c = line[pos];
      uint64_t d = (c >= '0' && c <= '9')   ? static_cast<uint64_t>(c - '0')
                   : (c >= 'a' && c <= 'f') ? static_cast<uint64_t>(c - 'a' + 10)
                                            : static_cast<uint64_t>(c - 'A' + 10);
      addr = addr * 16 + d;
    }
    std::size_t rest = line.find_first_not_of(" \t\r", pos);
    if (rest != std::string::npos && line[rest] != '#')
      throw TraceParseError("trailing junk after address", lineno);
    if (addr >= space_bytes)
      throw TraceParseError("address 0x" + line.substr(sp + 2, pos - sp - 2) +
                                " outside protected space",
                            lineno);
    out.push_back(TraceRecord{op == 'W', addr});
  }
  return out;
}

std::vector<TraceRecord> ingest(const std::string& path, uint64_t space_bytes) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open trace file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ingest_text(ss.str(), space_bytes);
}

PrefetchFilter::PrefetchFilter(uint32_t group_len, std::size_t capacity)
    : group_len_(group_len), capacity_(capacity) {}

void PrefetchFilter::touch_group(uint64_t group) {
  auto it = where_.find(group);
  if (it != where_.end()) {
    lru_.erase(it->second);
  } else if (lru_.size() >= capacity_) {
    where_.erase(lru_.back());
    lru_.pop_back();
  }
  lru_.push_front(group);
  where_[group] = lru_.begin();
}

bool PrefetchFilter::filter(const TraceRecord& rec) {
  if (group_len_ <= 1) return false;
  uint64_t group = (rec.addr / 64) / group_len_;
  bool resident = where_.count(group) != 0;
  if (resident && !rec.is_write) {
    ++bypasses_;
    touch_group(group);
    return true;
  }
  touch_group(group);
  return false;
}

void synth_payload(uint64_t seed, uint64_t index, std::vector<std::byte>& out) {
  uint64_t x = Rng::splitmix(seed ^ Rng::splitmix(index + 0x51ull));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 8 == 0) x = Rng::splitmix(x);
    out[i] = static_cast<std::byte>((x >> ((i % 8) * 8)) & 0xff);
  }
}

}  // namespace oram
