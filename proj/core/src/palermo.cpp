#include "oram/palermo.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "oram/errors.hpp"
#include "oram/rng.hpp"

namespace oram {

std::vector<DepEdge> dependency_edges(const std::vector<OramRequest>& in_flight, uint32_t a,
                                      uint32_t levels) {
  std::vector<DepEdge> edges;
  std::vector<OramRequest> reqs = in_flight;
  std::sort(reqs.begin(), reqs.end(),
            [](const OramRequest& x, const OramRequest& y) { return x.global_id < y.global_id; });
  for (uint32_t row = 0; row < levels; ++row) {
    for (std::size_t i = 0; i + 1 < reqs.size(); ++i) {
      bool evicts = (reqs[i].global_id % a) == 0;
      edges.push_back(DepEdge{{reqs[i].global_id, row, evicts ? Phase::EP : Phase::ER},
                              {reqs[i + 1].global_id, row, Phase::LM}});
    }
  }
  for (const auto& r : reqs) {
    for (uint32_t row = 0; row + 1 < levels; ++row) {
      edges.push_back(DepEdge{{r.global_id, row + 1, Phase::RP}, {r.global_id, row, Phase::LM}});
    }
    if (r.global_id % a == 0) {
      for (uint32_t row = 0; row < levels; ++row) {
        edges.push_back(DepEdge{{r.global_id, row, Phase::RP}, {r.global_id, row, Phase::EP}});
      }
    }
  }
  return edges;
}

// ---------------------------------------------------------------------------
// Exhaustive schedule model
// ---------------------------------------------------------------------------

namespace {
struct ScheduleViolation {
  std::string msg;
};
constexpr std::size_t kMachineBlockBytes = 8;
}  // namespace

struct ScheduleSpace::Machine {
  uint32_t depth, z, s, a;
  TreeState tree;
  Stash stash;
  std::vector<Leaf> posmap;
  std::unordered_set<uint64_t> pending;
  std::vector<uint32_t> epoch;      // per node; bumps at every bucket rewrite
  std::vector<int32_t> resetting;   // request owning an open reset window, else -1
  uint64_t evict_counter = 0;
  Rng leaf_rng;
  std::vector<Rng> perm_rng;  // per request so schedules cannot perturb each other

  struct Reservation {
    NodeId node;
    uint32_t offset;
    uint32_t epoch_at_lock;
    bool real;
    Block data;
    bool consumed = false;
  };
  struct ReqRt {
    Leaf read_leaf = 0, fresh = 0;
    bool fake = false;
    std::vector<Reservation> rsv;
    Block result;
    bool served = false;
  };
  std::vector<ReqRt> rt;
  std::set<std::tuple<NodeId, uint32_t, uint32_t>> selected;  // (node, epoch, offset)

  Machine(const ScheduleScenario& sc, std::size_t nreq)
      : depth(sc.depth),
        z(sc.z),
        s(sc.s),
        a(sc.a),
        tree(sc.depth, sc.z, sc.s),
        stash(64, false),
        leaf_rng(sc.seed, 0x70c0ull),
        rt(nreq) {
    uint64_t blocks = uint64_t{z} << depth;
    posmap.resize(blocks);
    Rng init(sc.seed, 0x71c1ull);
    Rng perm(sc.seed, 0x72c2ull);
    for (uint64_t pa = 0; pa < blocks; ++pa) {
      posmap[pa] = init.leaf(depth);
      Block zero(kMachineBlockBytes, std::byte{0});
      bool placed = false;
      for (NodeId n : path_nodes(posmap[pa], depth)) {
        if (tree.try_place_initial(n, pa, posmap[pa], std::move(zero))) {
          placed = true;
          break;
        }
      }
      if (!placed) stash.put(pa, posmap[pa], Block(kMachineBlockBytes, std::byte{0}));
    }
    tree.finalize_initial_offsets(perm);
    epoch.assign(tree.node_count(), 0);
    resetting.assign(tree.node_count(), -1);
    for (std::size_t k = 0; k < nreq; ++k) perm_rng.emplace_back(sc.seed, 0x8000ull + k);
  }

  // Tree-lock window: leaf resolution (fake path when pending), remap,
  // pre-check decisions, and the metadata side of every path touch. The
  // data movement happens later in the Touch atoms.
  void lock(uint32_t k, const OramRequest& rq, StaticReq* record, const StaticReq* expect) {
    auto& r = rt[k];
    r.fake = pending.count(rq.pa) != 0;
    if (record) {
      r.read_leaf = r.fake ? leaf_rng.leaf(depth) : posmap[rq.pa];
      r.fresh = leaf_rng.leaf(depth);
      record->fake = r.fake;
      record->read_leaf = r.read_leaf;
      record->fresh_leaf = r.fresh;
    } else {
      if (r.fake != expect->fake) throw ScheduleViolation{"pending status diverged from commit order"};
      r.read_leaf = r.fake ? expect->read_leaf : posmap[rq.pa];
      if (r.read_leaf != expect->read_leaf)
        throw ScheduleViolation{"mapped leaf diverged from commit order"};
      r.fresh = expect->fresh_leaf;
    }
    posmap[rq.pa] = r.fresh;
    pending.insert(rq.pa);

    auto path = path_nodes(r.read_leaf, depth);
    std::vector<NodeId> precheck;
    for (NodeId n : path) {
      if (tree.accessed(n) == s - 1) precheck.push_back(n);
    }
    if (record) {
      record->precheck_nodes = precheck;
    } else if (precheck != expect->precheck_nodes) {
      throw ScheduleViolation{"pre-check set diverged: a bucket reached exhaustion out of order"};
    }
    uint64_t want = r.fake ? kNoAddr : rq.pa;
    for (NodeId n : path) {
      if (std::find(precheck.begin(), precheck.end(), n) != precheck.end()) continue;
      auto t = tree.touch(n, want);
      Reservation rsv;
      rsv.node = n;
      rsv.offset = t.offset;
      rsv.epoch_at_lock = epoch[n];
      rsv.real = t.real_hit;
      if (t.real_hit) rsv.data = std::move(t.pulled->data);
      r.rsv.push_back(std::move(rsv));
      if (record) record->touch_nodes.push_back(n);
    }
  }

  void reset_pull(uint32_t k, NodeId n) {
    if (resetting[n] != -1) throw ScheduleViolation{"two reset windows open on one bucket"};
    resetting[n] = static_cast<int32_t>(k);
    (void)tree.reset_fetch_offsets(n);  // the padded-to-z oblivious fetch
    for (auto& slot : tree.extract_valid_reals(n)) {
      stash.put(slot.addr, slot.leaf, std::move(slot.data));
    }
  }

  void reset_push(uint32_t k, NodeId n) {
    if (resetting[n] != static_cast<int32_t>(k))
      throw ScheduleViolation{"reset push without matching pull"};
    std::vector<uint64_t> chosen;
    for (const auto& e : stash.entries()) {
      if (chosen.size() >= z) break;
      if (node_on_path(n, e.leaf, depth)) chosen.push_back(e.addr);
    }
    std::vector<RealSlot> blocks;
    for (uint64_t addr : chosen) {
      Stash::Entry* e = stash.find(addr);
      blocks.push_back(RealSlot{0, e->addr, e->leaf, std::move(e->data)});
      stash.erase(addr);
      pending.erase(addr);
    }
    tree.fill_bucket(n, std::move(blocks), perm_rng[k]);
    ++epoch[n];
    resetting[n] = -1;
  }

  void touch_data(uint32_t k, const OramRequest& rq, NodeId n) {
    auto& r = rt[k];
    auto it = std::find_if(r.rsv.begin(), r.rsv.end(),
                           [n](const Reservation& x) { return x.node == n && !x.consumed; });
    if (it == r.rsv.end()) throw ScheduleViolation{"touch without reservation"};
    if (resetting[n] != -1)
      throw ScheduleViolation{"path read overlaps an open reset window"};
    if (epoch[n] != it->epoch_at_lock)
      throw ScheduleViolation{"bucket rewritten between slot selection and data read"};
    if (!selected.insert({n, it->epoch_at_lock, it->offset}).second)
      throw ScheduleViolation{"slot double-selected between resets"};
    it->consumed = true;
    if (it->real) {
      stash.put(rq.pa, r.fresh, std::move(it->data));
    }
  }

  void serve(uint32_t k, const OramRequest& rq) {
    auto& r = rt[k];
    if (rq.is_write) {
      Stash::Entry* e = stash.find(rq.pa);
      if (e == nullptr) {
        e = &stash.put(rq.pa, r.fresh, Block(kMachineBlockBytes, std::byte{0}));
      } else {
        e->leaf = r.fresh;
      }
      if (rq.payload) {
        std::size_t nb = std::min(e->data.size(), rq.payload->size());
        std::copy(rq.payload->begin(), rq.payload->begin() + static_cast<std::ptrdiff_t>(nb),
                  e->data.begin());
      }
    } else {
      r.result.assign(kMachineBlockBytes, std::byte{0});
      if (const Stash::Entry* e = stash.find(rq.pa)) r.result = e->data;
    }
    r.served = true;
  }

  std::vector<NodeId> evict_nodes() {
    Leaf g = bit_reverse(evict_counter % (uint64_t{1} << depth), depth);
    ++evict_counter;
    return path_nodes(g, depth);
  }
};

ScheduleSpace::ScheduleSpace(const ScheduleScenario& sc) : sc_(sc) {
  if (sc_.requests.empty()) throw ConfigError("schedule scenario needs requests");
  uint64_t blocks = uint64_t{sc_.z} << sc_.depth;
  for (auto& r : sc_.requests) {
    if (r.pa >= blocks) throw ConfigError("scenario pa outside protected space");
  }
  initial_ = std::make_unique<Machine>(sc_, sc_.requests.size());
  prerun();
  build_atoms();
}

void ScheduleSpace::prerun() {
  Machine m = *initial_;
  std::map<uint64_t, Block> flat;
  // Last atom that placed each pa into the stash; a later pending read's
  // serve forwards from it.
  std::unordered_map<uint64_t, int32_t> stash_source;

  statics_.resize(sc_.requests.size());
  for (uint32_t k = 0; k < sc_.requests.size(); ++k) {
    const OramRequest& rq = sc_.requests[k];
    StaticReq& st = statics_[k];
    if (m.pending.count(rq.pa)) {
      auto it = stash_source.find(rq.pa);
      st.producer = it == stash_source.end() ? -1 : it->second;
    }
    m.lock(k, rq, &st, nullptr);
    for (NodeId n : st.precheck_nodes) {
      m.reset_pull(k, n);
      m.reset_push(k, n);
    }
    for (NodeId n : st.touch_nodes) m.touch_data(k, rq, n);
    m.serve(k, rq);
    // expected value from a flat reference memory, in issue order
    if (rq.is_write) {
      Block b(kMachineBlockBytes, std::byte{0});
      if (rq.payload) {
        std::size_t nb = std::min(b.size(), rq.payload->size());
        std::copy(rq.payload->begin(), rq.payload->begin() + static_cast<std::ptrdiff_t>(nb),
                  b.begin());
      }
      flat[rq.pa] = b;
    } else {
      auto it = flat.find(rq.pa);
      st.expected = it == flat.end() ? Block(kMachineBlockBytes, std::byte{0}) : it->second;
      if (m.rt[k].result != st.expected)
        throw ProtocolViolation("commit-order execution diverges from flat memory");
    }
    st.evict_due = (rq.global_id % sc_.a) == 0;
    if (st.evict_due) {
      st.ep_nodes = m.evict_nodes();
      for (NodeId n : st.ep_nodes) {
        m.reset_pull(k, n);
        m.reset_push(k, n);
      }
    }
    // Track where a later pending read would forward from.
    for (const auto& rsv : m.rt[k].rsv) {
      if (rsv.real) {
        st.has_real_pull = true;
        st.real_pull_node = rsv.node;
      }
    }
    if (rq.is_write || st.has_real_pull) stash_source[rq.pa] = static_cast<int32_t>(k);
  }
}

void ScheduleSpace::build_atoms() {
  atoms_.clear();
  std::vector<uint32_t> lock_atom(statics_.size());
  std::vector<std::vector<uint32_t>> er_push(statics_.size()), ep_push(statics_.size());
  std::vector<std::vector<std::pair<NodeId, uint32_t>>> touch_atoms(statics_.size());
  std::vector<uint32_t> serve_atom(statics_.size());

  auto add = [this](uint32_t req, AtomKind kind, NodeId node) {
    atoms_.push_back(Atom{req, kind, node});
    return static_cast<uint32_t>(atoms_.size() - 1);
  };

  for (uint32_t k = 0; k < statics_.size(); ++k) {
    const StaticReq& st = statics_[k];
    lock_atom[k] = add(k, AtomKind::LockLm, 0);
    for (NodeId n : st.precheck_nodes) {
      add(k, AtomKind::ErPull, n);
      er_push[k].push_back(add(k, AtomKind::ErPush, n));
    }
    for (NodeId n : st.touch_nodes) touch_atoms[k].push_back({n, add(k, AtomKind::Touch, n)});
    serve_atom[k] = add(k, AtomKind::Serve, 0);
    if (st.evict_due) {
      for (NodeId n : st.ep_nodes) {
        add(k, AtomKind::EpPull, n);
        ep_push[k].push_back(add(k, AtomKind::EpPush, n));
      }
    }
  }

  preds_.assign(atoms_.size(), {});
  auto edge = [this](uint32_t from, uint32_t to) { preds_[to].push_back(from); };

  for (uint32_t i = 0; i < atoms_.size(); ++i) {
    const Atom& at = atoms_[i];
    uint32_t k = at.req;
    switch (at.kind) {
      case AtomKind::LockLm:
        if (k > 0) {
          // Sibling clear: the predecessor's tree-modifying phases must have
          // finished (ER always, EP when it evicts).
          edge(lock_atom[k - 1], i);
          for (uint32_t p : er_push[k - 1]) edge(p, i);
          if (statics_[k - 1].evict_due)
            for (uint32_t p : ep_push[k - 1]) edge(p, i);
        }
        break;
      case AtomKind::ErPull:
        edge(lock_atom[k], i);
        break;
      case AtomKind::ErPush: {
        edge(i - 1, i);  // own pull
        // Bucket rewrites wait for older requests' outstanding reads of the
        // same bucket (per-address ordering in the memory controller).
        for (uint32_t j = 0; j < k; ++j)
          for (auto& [n, t] : touch_atoms[j])
            if (n == at.node) edge(t, i);
        break;
      }
      case AtomKind::Touch:
        edge(lock_atom[k], i);
        for (uint32_t p : er_push[k]) edge(p, i);  // RP starts after own ER
        break;
      case AtomKind::Serve: {
        for (auto& [n, t] : touch_atoms[k]) edge(t, i);
        const StaticReq& st = statics_[k];
        if (st.producer >= 0) edge(serve_atom[static_cast<uint32_t>(st.producer)], i);
        // Same-address serves stay in issue order (store-to-load forwarding).
        for (uint32_t j = 0; j < k; ++j) {
          if (sc_.requests[j].pa == sc_.requests[k].pa) edge(serve_atom[j], i);
        }
        break;
      }
      case AtomKind::EpPull:
        for (auto& [n, t] : touch_atoms[k]) edge(t, i);  // EP serialized after own RP
        edge(serve_atom[k], i);
        break;
      case AtomKind::EpPush:
        edge(i - 1, i);
        for (uint32_t j = 0; j < k; ++j)
          for (auto& [n, t] : touch_atoms[j])
            if (n == at.node) edge(t, i);
        break;
    }
  }

  // The serve's forward source: the producer's real-pull touch atom must land
  // the data before the consumer can read it from the stash.
  for (uint32_t k = 0; k < statics_.size(); ++k) {
    if (statics_[k].producer < 0) continue;
    uint32_t j = static_cast<uint32_t>(statics_[k].producer);
    if (sc_.requests[j].is_write) continue;  // serve_atom edge already added
    for (auto& [n, t] : touch_atoms[j]) {
      if (statics_[j].has_real_pull && n == statics_[j].real_pull_node) edge(t, serve_atom[k]);
    }
  }
}

ScheduleOutcome ScheduleSpace::run(uint64_t cap) {
  ScheduleOutcome out;
  std::size_t n = atoms_.size();
  std::vector<uint32_t> indeg(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (uint32_t p : preds_[i]) {
      (void)p;
      ++indeg[i];
    }
  std::vector<std::vector<uint32_t>> succs(n);
  for (std::size_t i = 0; i < n; ++i)
    for (uint32_t p : preds_[i]) succs[p].push_back(static_cast<uint32_t>(i));

  std::vector<uint32_t> seq;
  seq.reserve(n);
  std::vector<bool> done(n, false);

  auto replay = [&](const std::vector<uint32_t>& order) {
    Machine m = *initial_;
    for (uint32_t idx : order) {
      const Atom& at = atoms_[idx];
      const OramRequest& rq = sc_.requests[at.req];
      switch (at.kind) {
        case AtomKind::LockLm: m.lock(at.req, rq, nullptr, &statics_[at.req]); break;
        case AtomKind::ErPull:
        case AtomKind::EpPull: m.reset_pull(at.req, at.node); break;
        case AtomKind::ErPush:
        case AtomKind::EpPush: m.reset_push(at.req, at.node); break;
        case AtomKind::Touch: m.touch_data(at.req, rq, at.node); break;
        case AtomKind::Serve: m.serve(at.req, rq); break;
      }
    }
    for (uint32_t k = 0; k < statics_.size(); ++k) {
      if (!sc_.requests[k].is_write && m.rt[k].result != statics_[k].expected)
        throw ScheduleViolation{"read result diverged from issue-order flat memory"};
    }
    m.tree.check_touch_conservation();
  };

  // DFS over all linear extensions of the atom DAG.
  std::function<bool()> dfs = [&]() -> bool {
    if (seq.size() == n) {
      ++out.schedules;
      replay(seq);
      if (out.schedules >= cap) {
        out.exhausted = false;
        return false;
      }
      return true;
    }
    for (uint32_t i = 0; i < n; ++i) {
      if (done[i] || indeg[i] != 0) continue;
      done[i] = true;
      seq.push_back(i);
      for (uint32_t s : succs[i]) --indeg[s];
      bool cont = dfs();
      for (uint32_t s : succs[i]) ++indeg[s];
      seq.pop_back();
      done[i] = false;
      if (!cont) return false;
    }
    return true;
  };

  try {
    dfs();
  } catch (const ScheduleViolation& v) {
    out.ok = false;
    out.failure = v.msg;
    for (uint32_t idx : seq) out.failing_schedule.push_back(atoms_[idx]);
  }
  return out;
}

}  // namespace oram
