// Serves one request on a fragmented two-route network, first on a single
// spectrum path and then in parallel, and prints the program a MILP solver
// would need for the same request.

#include <cstdio>
#include <iostream>

#include "eon/eon.hpp"

using namespace eon;

int main() {
  const auto net = load_topology(
      "node A\nnode B\nnode C\nnode D\n"
      "link A B 400\nlink B D 400\nlink A C 500\nlink C D 500\n",
      TopologyConfig{2e5, 16});

  // Leave only 2- and 3-slot gaps on both routes.
  const int gb = 2;
  SpectrumState state(net);
  const auto upper = compute_fiber_paths(net, net.node("A"), net.node("D"), 2)[0].arcs;
  const auto lower = compute_fiber_paths(net, net.node("A"), net.node("D"), 2)[1].arcs;
  state.allocate(upper, {4, 2}, gb);
  state.allocate(upper, {13, 3}, gb);
  state.allocate(lower, {0, 3}, gb);
  state.allocate(lower, {10, 3}, gb);

  Request req;
  req.source = net.node("A");
  req.destination = net.node("D");
  req.demand = 4;

  const auto paths = compute_fiber_paths(net, req.source, req.destination, 30);
  for (Mode mode : {Mode::single_path, Mode::parallel}) {
    PolicyParams policy;
    policy.mode = mode;
    policy.guard_band = gb;
    const auto sol = assign_spectrum(state, paths, req, policy);
    std::printf("%s: ", to_string(mode));
    if (!sol) {
      std::printf("blocked\n");
      continue;
    }
    for (const auto& sp : sol->paths) {
      std::printf("[route %zu, slots %d-%d] ", sp.fiber_rank, sp.range.start, sp.range.end() - 1);
    }
    std::printf("cost %lld slot-arcs, delay spread %lld ps\n", static_cast<long long>(sol->slot_arc_usage()),
                static_cast<long long>(sol->delay_spread()));
  }

  ilp::ModelParams mp;
  mp.slots = 16;
  mp.guard_band = gb;
  const std::vector<FiberPath> cands{paths[0], paths[0], paths[1], paths[1]};
  const auto model = ilp::build_model(net, req, cands, mp, &state);
  std::printf("program: %zu variables, %zu constraints\n", model.variables().size(), model.constraints().size());
  if (const auto best = oracle::exact_solve(net, state, req, oracle::OracleParams{gb})) {
    std::printf("exhaustive optimum: %lld slot-arcs over %zu bands\n", static_cast<long long>(best->cost),
                best->bands.size());
  }
  return 0;
}
