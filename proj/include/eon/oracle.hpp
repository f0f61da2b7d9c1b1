#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "eon/heuristic.hpp"
#include "eon/physics.hpp"
#include "eon/spectrum.hpp"
#include "eon/topology.hpp"

// Exhaustive reference solver for tiny instances. Shares data types with the
// rest of the library but none of the path search, block search or model
// code, so disagreements point at a bug in one of the two encodings.
namespace eon::oracle {

struct OracleLimits {
  std::size_t max_nodes = 8;
  int max_slots = 16;
  std::size_t max_paths = 8;
  std::size_t max_bands = 4;
  std::uint64_t max_combinations = 20'000'000;
};

struct OracleParams {
  int guard_band = 0;
  Picoseconds max_differential_delay = milliseconds_to_ps(128);
  int k = 4;
  FiberParams fiber{};
  bool include_gvd = false;
  OracleLimits limits{};
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LimitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One band on the path with index `path` of the oracle's path list.
struct OracleBand {
  std::size_t path = 0;
  SlotRange range;

  friend auto operator<=>(const OracleBand&, const OracleBand&) = default;
};

struct OracleSolution {
  std::int64_t cost = 0;
  std::vector<OracleBand> bands;  // sorted
  std::vector<FiberPath> paths;   // the enumerated path list the bands refer to
};

/// Every loop-free route from s to d by plain depth-first search, sorted by
/// (delay, node sequence, arc sequence), truncated to k.
inline std::vector<FiberPath> enumerate_paths(const Network& net, NodeId s, NodeId d, std::size_t k) {
  std::vector<FiberPath> all;
  if (s == d) return all;
  std::vector<char> on_stack(net.node_count(), 0);
  FiberPath cur;
  cur.nodes.push_back(s);
  on_stack[s.value] = 1;

  auto dfs = [&](auto&& self, NodeId v) -> void {
    if (v == d) {
      all.push_back(cur);
      return;
    }
    for (const Link& l : net.links()) {
      if (l.src != v || on_stack[l.dst.value]) continue;
      on_stack[l.dst.value] = 1;
      cur.nodes.push_back(l.dst);
      cur.arcs.push_back(l.id);
      cur.delay_ps += l.delay_ps;
      cur.length_km += l.length_km;
      self(self, l.dst);
      cur.length_km -= l.length_km;
      cur.delay_ps -= l.delay_ps;
      cur.arcs.pop_back();
      cur.nodes.pop_back();
      on_stack[l.dst.value] = 0;
    }
  };
  dfs(dfs, s);

  std::sort(all.begin(), all.end(), [](const FiberPath& a, const FiberPath& b) {
    if (a.delay_ps != b.delay_ps) return a.delay_ps < b.delay_ps;
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    return a.arcs < b.arcs;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Intra-band spread of a band of `slots` slots on `path`, summed per arc
/// with integer rounding of the one-slot spread on each arc.
inline Picoseconds band_gvd(const Network& net, const FiberPath& path, int slots, const FiberParams& fiber) {
  Picoseconds per_slot = 0;
  for (ArcId a : path.arcs) per_slot += gvd_differential_delay_ps(fiber, 1, net.arc(a).length_km);
  return per_slot * slots;
}

namespace detail {

inline bool arcs_intersect(const FiberPath& a, const FiberPath& b) {
  for (ArcId x : a.arcs) {
    if (std::find(b.arcs.begin(), b.arcs.end(), x) != b.arcs.end()) return true;
  }
  return false;
}

/// No slot of `range` (widened by gb each side) is occupied on any arc.
inline bool clear_of_state(const SpectrumState& state, const FiberPath& p, SlotRange range, int gb) {
  for (ArcId a : p.arcs) {
    for (int s = range.start - gb; s < range.end() + gb; ++s) {
      if (s < 0 || s >= state.slots()) continue;
      if (state.occupied(a, s)) return false;
    }
  }
  return true;
}

/// Two bands on routes sharing an arc: disjoint with at least gb free slots between.
inline bool separated(SlotRange a, SlotRange b, int gb) {
  const int gap = std::max(a.start, b.start) - std::min(a.end(), b.end());
  return gap >= gb && gap >= 0;
}

}  // namespace detail

/// Guard and delay conditions between two bands.
inline bool compatible(const Network& net, const std::vector<FiberPath>& paths, const OracleBand& a,
                       const OracleBand& b, const OracleParams& params) {
  const auto& pa = paths[a.path];
  const auto& pb = paths[b.path];
  if (detail::arcs_intersect(pa, pb) && !detail::separated(a.range, b.range, params.guard_band)) return false;
  Picoseconds spread = pa.delay_ps > pb.delay_ps ? pa.delay_ps - pb.delay_ps : pb.delay_ps - pa.delay_ps;
  if (params.include_gvd) {
    spread += band_gvd(net, pa, a.range.len, params.fiber) + band_gvd(net, pb, b.range.len, params.fiber);
  }
  return spread <= params.max_differential_delay;
}

/// Direct feasibility of a band set, evaluated from the problem statement:
/// bands in range and clear of existing spectrum by gb, demand met exactly,
/// guard bands between bands whose routes share an arc, and pairwise delay
/// spread (plus both intra-band spreads when GVD is included) within M.
inline bool directly_feasible(const Network& net, const SpectrumState& state, const std::vector<FiberPath>& paths,
                              const std::vector<OracleBand>& bands, int demand, const OracleParams& params) {
  int total = 0;
  for (const auto& b : bands) {
    if (b.path >= paths.size()) return false;
    if (b.range.len < 1 || b.range.start < 0 || b.range.end() > state.slots()) return false;
    if (!detail::clear_of_state(state, paths[b.path], b.range, params.guard_band)) return false;
    total += b.range.len;
  }
  if (total != demand) return false;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    for (std::size_t j = i + 1; j < bands.size(); ++j) {
      if (!compatible(net, paths, bands[i], bands[j], params)) return false;
    }
  }
  return true;
}

inline std::int64_t band_cost(const std::vector<FiberPath>& paths, const std::vector<OracleBand>& bands) {
  std::int64_t c = 0;
  for (const auto& b : bands) c += static_cast<std::int64_t>(b.range.len) * paths[b.path].arcs.size();
  return c;
}

/// Minimum slot-arc usage over all band sets of at most max_bands bands on
/// the k lowest-delay routes. std::nullopt means no feasible set exists.
inline std::optional<OracleSolution> exact_solve(const Network& net, const SpectrumState& state, const Request& req,
                                                 const OracleParams& params) {
  const auto& lim = params.limits;
  if (net.node_count() > lim.max_nodes) throw LimitError("too many nodes for the oracle");
  if (state.slots() > lim.max_slots) throw LimitError("too many slots for the oracle");
  if (params.k < 1 || static_cast<std::size_t>(params.k) > lim.max_paths) throw LimitError("K outside oracle limits");
  if (req.demand < 1) throw LimitError("demand must be >= 1");

  const auto paths = enumerate_paths(net, req.source, req.destination, static_cast<std::size_t>(params.k));

  // every band clear of the current state, in (path, start, len) order
  std::vector<OracleBand> cands;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (int start = 0; start < state.slots(); ++start) {
      for (int len = 1; len <= req.demand && start + len <= state.slots(); ++len) {
        if (detail::clear_of_state(state, paths[p], SlotRange{start, len}, params.guard_band)) {
          cands.push_back({p, SlotRange{start, len}});
        }
      }
    }
  }

  std::optional<OracleSolution> best;
  std::vector<OracleBand> chosen;
  std::uint64_t visited = 0;

  auto consider = [&] {
    if (!directly_feasible(net, state, paths, chosen, req.demand, params)) return;
    const std::int64_t cost = band_cost(paths, chosen);
    // ties: fewer bands, then the lexicographically smallest band list
    const std::size_t n = chosen.size();
    const std::size_t best_n = best ? best->bands.size() : 0;
    if (!best || std::tie(cost, n, chosen) < std::tie(best->cost, best_n, best->bands)) {
      best = OracleSolution{cost, chosen, paths};
    }
  };

  auto search = [&](auto&& self, std::size_t from, int sum) -> void {
    if (++visited > lim.max_combinations) throw BudgetExceeded("oracle enumeration budget exceeded");
    if (sum == req.demand) {
      consider();
      return;
    }
    if (chosen.size() == lim.max_bands) return;
    for (std::size_t i = from; i < cands.size(); ++i) {
      if (sum + cands[i].range.len > req.demand) continue;
      const bool ok = std::all_of(chosen.begin(), chosen.end(), [&](const OracleBand& c) {
        return compatible(net, paths, c, cands[i], params);
      });
      if (!ok) continue;
      chosen.push_back(cands[i]);
      self(self, i + 1, sum + cands[i].range.len);
      chosen.pop_back();
    }
  };
  search(search, 0, 0);
  return best;
}

}  // namespace eon::oracle
