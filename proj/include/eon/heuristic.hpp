#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eon/physics.hpp"
#include "eon/spectrum.hpp"
#include "eon/topology.hpp"

namespace eon {

/// ST serves a request with one spectrum path only; PT may aggregate
/// fragments over several spectrum paths.
enum class Mode { single_path, parallel };

inline const char* to_string(Mode m) { return m == Mode::single_path ? "st" : "pt"; }

struct Request {
  NodeId source;
  NodeId destination;
  int demand = 1;  // slots
  double arrival = 0.0;
  double holding = 0.0;
};

struct PolicyParams {
  Mode mode = Mode::parallel;
  int k = 30;
  int guard_band = 0;
  Picoseconds max_differential_delay = milliseconds_to_ps(128);

  void validate() const {
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    if (guard_band < 0) throw std::invalid_argument("guard band must be >= 0");
    if (max_differential_delay < 0) throw std::invalid_argument("M must be >= 0");
  }
};

/// A loop-free route; `nodes` has one more entry than `arcs`.
struct FiberPath {
  std::vector<NodeId> nodes;
  std::vector<ArcId> arcs;
  Picoseconds delay_ps = 0;
  double length_km = 0.0;

  friend bool operator==(const FiberPath&, const FiberPath&) = default;
};

struct SpectrumPath {
  AllocationId allocation{};  // zero until the band is allocated
  std::size_t fiber_rank = 0;
  std::vector<ArcId> arcs;
  SlotRange range;
  Picoseconds delay_ps = 0;
  Picoseconds gvd_ps = 0;
};

struct Solution {
  std::vector<SpectrumPath> paths;
  int total_slots = 0;

  Picoseconds delay_spread() const {
    if (paths.empty()) return 0;
    auto [lo, hi] = std::minmax_element(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
      return a.delay_ps < b.delay_ps;
    });
    return hi->delay_ps - lo->delay_ps;
  }

  /// Objective value: slots times arcs, summed over spectrum paths.
  std::int64_t slot_arc_usage() const {
    std::int64_t total = 0;
    for (const auto& p : paths) total += static_cast<std::int64_t>(p.range.len) * p.arcs.size();
    return total;
  }
};

/// Work counters used to check the complexity bounds in tests.
struct OpCounters {
  std::uint64_t node_expansions = 0;
  std::uint64_t slot_inspections = 0;
};

namespace detail {

struct PartialPath {
  NodeId node;
  std::int32_t parent;
  ArcId via;
  Picoseconds delay;
  double length_km;
};

inline void unwind(const std::vector<PartialPath>& pool, std::int32_t idx, std::vector<NodeId>& nodes,
                   std::vector<ArcId>* arcs) {
  nodes.clear();
  if (arcs) arcs->clear();
  for (std::int32_t i = idx; i >= 0; i = pool[i].parent) {
    nodes.push_back(pool[i].node);
    if (arcs && pool[i].parent >= 0) arcs->push_back(pool[i].via);
  }
  std::reverse(nodes.begin(), nodes.end());
  if (arcs) std::reverse(arcs->begin(), arcs->end());
}

}  // namespace detail

/// Up to `k` loop-free paths from `s` to `d` in nondecreasing delay.
///
/// Best-first growth of partial paths from the source: the minimum-delay
/// partial path is popped, emitted if it ends at `d`, and otherwise extended
/// to every neighbour it has not visited. Equal delays are ordered by the
/// node-id sequence, then the arc-id sequence (parallel links).
inline std::vector<FiberPath> compute_fiber_paths(const Network& net, NodeId s, NodeId d, int k,
                                                  OpCounters* counters = nullptr) {
  if (!net.contains(s) || !net.contains(d)) throw TopologyError("unknown endpoint");
  std::vector<FiberPath> result;
  if (k < 1 || s == d) return result;

  std::vector<detail::PartialPath> pool;
  pool.push_back({s, -1, ArcId{}, 0, 0.0});

  std::vector<NodeId> na, nb;
  std::vector<ArcId> aa, ab;
  auto later = [&](std::int32_t a, std::int32_t b) {
    if (pool[a].delay != pool[b].delay) return pool[a].delay > pool[b].delay;
    detail::unwind(pool, a, na, &aa);
    detail::unwind(pool, b, nb, &ab);
    if (na != nb) return nb < na;
    return ab < aa;
  };
  std::priority_queue<std::int32_t, std::vector<std::int32_t>, decltype(later)> frontier(later);
  frontier.push(0);

  while (!frontier.empty() && result.size() < static_cast<std::size_t>(k)) {
    const std::int32_t cur = frontier.top();
    frontier.pop();
    if (counters) ++counters->node_expansions;
    const detail::PartialPath here = pool[cur];
    if (here.node == d) {
      FiberPath fp;
      detail::unwind(pool, cur, fp.nodes, &fp.arcs);
      fp.delay_ps = here.delay;
      fp.length_km = here.length_km;
      result.push_back(std::move(fp));
      continue;
    }
    for (ArcId a : net.outgoing_ids(here.node)) {
      const Link& link = net.arc(a);
      bool visited = false;
      for (std::int32_t i = cur; i >= 0; i = pool[i].parent) {
        if (pool[i].node == link.dst) {
          visited = true;
          break;
        }
      }
      if (visited) continue;
      pool.push_back({link.dst, cur, a, here.delay + link.delay_ps, here.length_km + link.length_km});
      frontier.push(static_cast<std::int32_t>(pool.size() - 1));
    }
  }
  return result;
}

namespace detail {

inline bool share_arc(std::span<const ArcId> a, std::span<const ArcId> b) {
  for (ArcId x : a) {
    for (ArcId y : b) {
      if (x == y) return true;
    }
  }
  return false;
}

/// Largest sub-run of `block` that stays clear (with guard) of the bands
/// already accepted on arcs shared with `arcs`.
inline std::optional<SlotRange> usable_part(SlotRange block, std::span<const ArcId> arcs,
                                            const std::vector<SpectrumPath>& accepted, int gb,
                                            OpCounters* counters) {
  std::vector<char> blocked(static_cast<std::size_t>(block.len), 0);
  for (const auto& band : accepted) {
    if (!share_arc(arcs, band.arcs)) continue;
    const int lo = std::max(block.start, band.range.start - gb);
    const int hi = std::min(block.end(), band.range.end() + gb);
    for (int s = lo; s < hi; ++s) blocked[s - block.start] = 1;
    if (counters) counters->slot_inspections += static_cast<std::uint64_t>(block.len);
  }
  std::optional<SlotRange> best;
  int i = 0;
  while (i < block.len) {
    if (blocked[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < block.len && !blocked[j]) ++j;
    if (!best || j - i > best->len) best = SlotRange{block.start + i, j - i};
    i = j;
  }
  return best;
}

}  // namespace detail

/// Phase 2 of the heuristic. Does not modify `state`.
///
/// Step 1 looks, path by path in delay order, for a single free block of at
/// least `demand` slots and takes the lowest slots of the largest such block.
/// Step 2 (PT only) pools all free blocks of all paths, sorted by path delay,
/// and accepts them in order while their delay is within M of the first
/// candidate, trimming the last band so the total equals the demand.
inline std::optional<Solution> assign_spectrum(const SpectrumState& state,
                                               std::span<const FiberPath> paths, const Request& req,
                                               const PolicyParams& policy,
                                               OpCounters* counters = nullptr) {
  policy.validate();
  if (req.demand < 1) throw std::invalid_argument("demand must be >= 1");
  const std::size_t k = std::min(paths.size(), static_cast<std::size_t>(policy.k));
  const int gb = policy.guard_band;
  std::uint64_t* insp = counters ? &counters->slot_inspections : nullptr;

  auto make_band = [&](std::size_t rank, SlotRange range) {
    SpectrumPath sp;
    sp.fiber_rank = rank;
    sp.arcs = paths[rank].arcs;
    sp.range = range;
    sp.delay_ps = paths[rank].delay_ps;
    return sp;
  };

  struct Candidate {
    Picoseconds delay;
    int start;
    std::size_t rank;
    SlotRange block;
  };
  std::vector<Candidate> pool;

  for (std::size_t r = 0; r < k; ++r) {
    const auto blocks = state.free_blocks(paths[r].arcs, gb, insp);
    std::optional<SlotRange> largest;
    for (const auto& b : blocks) {
      if (!largest || b.len > largest->len) largest = b;
      pool.push_back({paths[r].delay_ps, b.start, r, b});
    }
    if (largest && largest->len >= req.demand) {
      Solution sol;
      sol.paths.push_back(make_band(r, SlotRange{largest->start, req.demand}));
      sol.total_slots = req.demand;
      return sol;
    }
  }
  if (policy.mode == Mode::single_path || pool.empty()) return std::nullopt;

  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    if (a.delay != b.delay) return a.delay < b.delay;
    if (a.start != b.start) return a.start < b.start;
    return a.rank < b.rank;
  });

  const Picoseconds head_delay = pool.front().delay;
  Solution sol;
  int remaining = req.demand;
  for (const auto& c : pool) {
    if (c.delay - head_delay > policy.max_differential_delay) break;
    auto part = detail::usable_part(c.block, paths[c.rank].arcs, sol.paths, gb, counters);
    if (!part) continue;
    const int take = std::min(part->len, remaining);
    sol.paths.push_back(make_band(c.rank, SlotRange{part->start, take}));
    remaining -= take;
    if (remaining == 0) {
      sol.total_slots = req.demand;
      return sol;
    }
  }
  return std::nullopt;
}

/// Allocates every band of `sol` or none of them.
inline void allocate_solution(SpectrumState& state, Solution& sol, int gb) {
  std::vector<AllocationId> done;
  try {
    for (auto& p : sol.paths) {
      p.allocation = state.allocate(p.arcs, p.range, gb);
      done.push_back(p.allocation);
    }
  } catch (...) {
    for (auto id : done) state.release(id);
    for (auto& p : sol.paths) p.allocation = AllocationId{};
    throw;
  }
}

inline void release_solution(SpectrumState& state, const Solution& sol) {
  for (const auto& p : sol.paths) state.release(p.allocation);
}

/// Assigns spectrum over precomputed paths and commits the result.
inline std::optional<Solution> serve_on_paths(SpectrumState& state, std::span<const FiberPath> paths,
                                              const Request& req, const PolicyParams& policy,
                                              const FiberParams& fiber = {},
                                              OpCounters* counters = nullptr) {
  auto sol = assign_spectrum(state, paths, req, policy, counters);
  if (!sol) return std::nullopt;
  for (auto& p : sol->paths) {
    p.gvd_ps = gvd_differential_delay_ps(fiber, p.range.len, paths[p.fiber_rank].length_km);
  }
  allocate_solution(state, *sol, policy.guard_band);
  return sol;
}

inline std::optional<Solution> serve(SpectrumState& state, const Network& net, const Request& req,
                                     const PolicyParams& policy, const FiberParams& fiber = {},
                                     OpCounters* counters = nullptr) {
  if (req.source == req.destination) throw std::invalid_argument("source equals destination");
  const auto paths = compute_fiber_paths(net, req.source, req.destination, policy.k, counters);
  return serve_on_paths(state, paths, req, policy, fiber, counters);
}

}  // namespace eon
