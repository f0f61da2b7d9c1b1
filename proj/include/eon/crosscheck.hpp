#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eon/heuristic.hpp"
#include "eon/ilp.hpp"
#include "eon/oracle.hpp"
#include "eon/sim.hpp"
#include "eon/spectrum.hpp"
#include "eon/topology.hpp"

// Random tiny instances checked three ways: exhaustive search, the heuristic
// and the linear model's checker.
namespace eon::crosscheck {

struct Instance {
  Network net;
  SpectrumState state;
  Request req;
  int guard_band = 0;
  Picoseconds max_differential_delay = 0;
  int k = 4;
};

struct InstanceSpec {
  std::size_t max_nodes = 5;
  int max_slots = 8;
  int max_demand = 4;
  int max_guard_band = 2;
  int allocations_per_node = 2;  // upper bound on background allocation attempts
};

/// Connected graph on 3..max_nodes nodes (a ring plus random chords), a
/// random partly occupied spectrum and one request.
inline Instance random_instance(sim::Rng& rng, const InstanceSpec& spec = {}) {
  const int n = rng.uniform_int(3, static_cast<int>(spec.max_nodes));
  const int slots = rng.uniform_int(4, spec.max_slots);
  Network::Builder b(TopologyConfig{2e5, slots});
  for (int i = 0; i < n; ++i) b.add_node("v" + std::to_string(i));
  auto len = [&] { return static_cast<double>(rng.uniform_int(1, 20) * 100); };
  for (int i = 0; i < n; ++i) b.add_edge("v" + std::to_string(i), "v" + std::to_string((i + 1) % n), len());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if ((i == 0 && j == n - 1) || rng.below(10) >= 4) continue;
      b.add_edge("v" + std::to_string(i), "v" + std::to_string(j), len());
    }
  }
  Network net = std::move(b).build();

  const int gb = rng.uniform_int(0, spec.max_guard_band);
  SpectrumState state(net);
  const int attempts = rng.uniform_int(0, spec.allocations_per_node * n);
  for (int a = 0; a < attempts; ++a) {
    const auto s = NodeId{static_cast<std::uint32_t>(rng.below(n))};
    auto d = NodeId{static_cast<std::uint32_t>(rng.below(n - 1))};
    if (d >= s) ++d.value;
    const auto routes = oracle::enumerate_paths(net, s, d, 3);
    const auto& route = routes[rng.below(routes.size())];
    const int w = rng.uniform_int(1, 3);
    const int start = rng.uniform_int(0, slots - 1);
    const SlotRange r{start, std::min(w, slots - start)};
    if (state.fits(route.arcs, r, gb)) state.allocate(route.arcs, r, gb);
  }

  Request req;
  req.source = NodeId{static_cast<std::uint32_t>(rng.below(n))};
  req.destination = NodeId{static_cast<std::uint32_t>(rng.below(n - 1))};
  if (req.destination >= req.source) ++req.destination.value;
  req.demand = rng.uniform_int(1, std::min(spec.max_demand, slots));

  static constexpr Picoseconds kBounds[] = {0, microseconds_to_ps(250), milliseconds_to_ps(3), milliseconds_to_ps(128)};
  const Picoseconds m = kBounds[rng.below(4)];
  return Instance{std::move(net), std::move(state), req, gb, m, 4};
}

struct Report {
  std::size_t instances = 0;
  std::size_t feasible = 0;
  std::size_t multi_band = 0;
  std::size_t oracle_multi_band = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// Model candidates: each route repeated `copies` times, so that up to
/// `copies` bands may share a route.
inline std::vector<FiberPath> replicated(const std::vector<FiberPath>& routes, std::size_t copies) {
  std::vector<FiberPath> out;
  for (const auto& r : routes) {
    for (std::size_t c = 0; c < copies; ++c) out.push_back(r);
  }
  return out;
}

/// Places bands given as (route index, range) onto model path slots.
inline std::vector<ilp::PlacedBand> to_model_bands(const std::vector<oracle::OracleBand>& bands, std::size_t copies) {
  std::vector<ilp::PlacedBand> out;
  std::vector<std::size_t> used;
  for (const auto& b : bands) {
    if (used.size() <= b.path) used.resize(b.path + 1, 0);
    out.push_back({b.path * copies + used[b.path]++, b.range});
  }
  return out;
}

/// Runs every cross-check on one instance, appending failures to `rep`.
inline void check_instance(const Instance& in, std::size_t index, Report& rep) {
  constexpr std::size_t kCap = 4;
  auto fail = [&](const std::string& what) { rep.failures.push_back("instance " + std::to_string(index) + ": " + what); };
  ++rep.instances;

  const auto routes = oracle::enumerate_paths(in.net, in.req.source, in.req.destination, static_cast<std::size_t>(in.k));
  if (compute_fiber_paths(in.net, in.req.source, in.req.destination, in.k) != routes) {
    fail("k-path search disagrees with exhaustive enumeration");
  }
  const auto cands = replicated(routes, kCap);

  for (const bool gvd : {false, true}) {
    oracle::OracleParams op;
    op.guard_band = in.guard_band;
    op.max_differential_delay = in.max_differential_delay;
    op.k = in.k;
    op.include_gvd = gvd;
    op.limits.max_bands = kCap;
    const auto best = oracle::exact_solve(in.net, in.state, in.req, op);

    ilp::ModelParams mp;
    mp.slots = in.state.slots();
    mp.guard_band = in.guard_band;
    mp.max_differential_delay = in.max_differential_delay;
    mp.include_gvd = gvd;
    const auto model = ilp::build_model(in.net, in.req, cands, mp, &in.state);

    if (best) {
      const auto a = ilp::encode_assignment(in.net, cands, to_model_bands(best->bands, kCap), mp);
      const auto res = ilp::check_assignment(model, a);
      if (!res.feasible()) {
        fail("oracle optimum rejected by the model checker (" + res.violations.front().name + ")");
      } else if (ilp::solution_cost(model, a) != best->cost) {
        fail("model cost differs from oracle cost");
      }
    }
    if (gvd) continue;

    if (best) ++rep.feasible;
    if (best && best->bands.size() > 1) ++rep.oracle_multi_band;
    PolicyParams pol;
    pol.mode = Mode::parallel;
    pol.k = in.k;
    pol.guard_band = in.guard_band;
    pol.max_differential_delay = in.max_differential_delay;
    const auto sol = assign_spectrum(in.state, routes, in.req, pol);
    if (!best && sol) fail("heuristic served a request the oracle proves infeasible");
    if (!sol) continue;
    if (sol->paths.size() > 1) ++rep.multi_band;
    if (best && sol->slot_arc_usage() < best->cost) fail("heuristic beats the oracle optimum");

    std::vector<oracle::OracleBand> hb;
    for (const auto& p : sol->paths) hb.push_back({p.fiber_rank, p.range});
    std::sort(hb.begin(), hb.end());
    if (!oracle::directly_feasible(in.net, in.state, routes, hb, in.req.demand, op)) {
      fail("heuristic solution fails the direct feasibility test");
    }
    const auto a = ilp::encode_assignment(in.net, cands, to_model_bands(hb, kCap), mp);
    if (!ilp::check_assignment(model, a).feasible()) fail("heuristic solution rejected by the model checker");
  }
}

inline Report run(std::uint64_t seed, std::size_t instances, const InstanceSpec& spec = {}) {
  sim::Rng rng(seed, sim::Stream::probe);
  Report rep;
  for (std::size_t i = 0; i < instances; ++i) check_instance(random_instance(rng, spec), i, rep);
  return rep;
}

}  // namespace eon::crosscheck
