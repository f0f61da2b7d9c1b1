#pragma once

#include <string>

#include "eon/spectrum.hpp"
#include "eon/topology.hpp"

namespace eon::testing {

inline std::string data_path(const std::string& name) { return std::string(EON_DATA_DIR) + "/" + name; }

/// Two routes A-B-D (shorter) and A-C-D, 16 slots per arc.
inline Network diamond() {
  return load_topology(
      "node A\nnode B\nnode C\nnode D\n"
      "link A B 400\nlink B D 400\nlink A C 500\nlink C D 500\n",
      TopologyConfig{2e5, 16});
}

inline std::vector<ArcId> arcs(const Network& net, std::initializer_list<const char*> hops) {
  std::vector<ArcId> out;
  const char* prev = nullptr;
  for (const char* h : hops) {
    if (prev) {
      for (ArcId a : net.outgoing_ids(net.node(prev))) {
        if (net.arc(a).dst == net.node(h)) {
          out.push_back(a);
          break;
        }
      }
    }
    prev = h;
  }
  return out;
}

/// Six earlier demands fragment both routes under a guard band of 2: the
/// usable blocks are (0,2) and (8,3) on A-B-D and (5,3) and (15,1) on
/// A-C-D, so no route offers more than 3 consecutive slots.
inline SpectrumState fragmented(const Network& net) {
  constexpr int gb = 2;
  SpectrumState s(net);
  const auto upper = arcs(net, {"A", "B", "D"});
  s.allocate(upper, {4, 2}, gb);   // R1
  s.allocate(upper, {13, 3}, gb);  // R2
  s.allocate(arcs(net, {"A", "C"}), {0, 3}, gb);   // R3
  s.allocate(arcs(net, {"C", "D"}), {0, 3}, gb);   // R4
  s.allocate(arcs(net, {"A", "C"}), {10, 3}, gb);  // R5
  s.allocate(arcs(net, {"C", "D"}), {10, 3}, gb);  // R6
  return s;
}

/// Each route keeps exactly one usable 2-slot block under a guard band of
/// 2: (0,2) on A-B-D and (10,2) on A-C-D.
inline SpectrumState two_pockets(const Network& net) {
  constexpr int gb = 2;
  SpectrumState s(net);
  s.allocate(arcs(net, {"A", "B", "D"}), {4, 12}, gb);
  s.allocate(arcs(net, {"A", "C", "D"}), {0, 8}, gb);
  s.allocate(arcs(net, {"A", "C", "D"}), {14, 2}, gb);
  return s;
}

}  // namespace eon::testing
