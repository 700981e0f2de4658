#include "oram/protocols.hpp"

#include "oram/errors.hpp"

namespace oram {

std::unique_ptr<ProtocolEngine> make_protocol(Protocol p, const OramConfig& cfg, uint64_t seed) {
  switch (p) {
    case Protocol::PathOram:
      return std::make_unique<PathOramProtocol>(cfg, seed);
    case Protocol::RingOram:
      return std::make_unique<RingOramProtocol>(cfg, seed, false);
    case Protocol::PrOram:
      return std::make_unique<PrOramProtocol>(cfg, seed);
    case Protocol::Palermo:
    case Protocol::PalermoSw:
      return std::make_unique<RingOramProtocol>(cfg, seed, true);
  }
  throw UsageError("unknown protocol");
}

RingOramProtocol::RingOramProtocol(const OramConfig& cfg, uint64_t seed, bool concurrent)
    : concurrent_(concurrent), hier_(cfg, seed, concurrent) {}

void RingOramProtocol::access(uint64_t line, bool is_write, const Block* data,
                              uint64_t& next_index, std::vector<AccessPlan>& out) {
  AccessPlan plan;
  plan.request_index = next_index++;
  hier_.access(plan, line, is_write, data);
  out.push_back(std::move(plan));
}

PathOramProtocol::PathOramProtocol(const OramConfig& cfg, uint64_t seed)
    : hier_(
          [&cfg] {
            OramConfig c = cfg;
            c.proram_stash_threshold = 0;  // no background eviction: overflow is fatal
            return c;
          }(),
          seed, 1) {}

void PathOramProtocol::access(uint64_t line, bool is_write, const Block* data,
                              uint64_t& next_index, std::vector<AccessPlan>& out) {
  AccessPlan plan;
  plan.request_index = next_index++;
  hier_.access(plan, line, is_write, data);
  out.push_back(std::move(plan));
}

PrOramProtocol::PrOramProtocol(const OramConfig& cfg, uint64_t seed)
    : hier_(cfg, seed, cfg.prefetch_len) {}

void PrOramProtocol::access(uint64_t line, bool is_write, const Block* data, uint64_t& next_index,
                            std::vector<AccessPlan>& out) {
  uint64_t relief = 0;
  while (hier_.needs_relief()) {
    AccessPlan dummy;
    dummy.request_index = next_index++;
    hier_.dummy_access(dummy);
    out.push_back(std::move(dummy));
    ++dummy_count_;
    if (++relief > 100000)
      throw ProtocolViolation("background eviction cannot relieve stash pressure");
  }
  AccessPlan plan;
  plan.request_index = next_index++;
  hier_.access(plan, line, is_write, data);
  out.push_back(std::move(plan));
}

}  // namespace oram
