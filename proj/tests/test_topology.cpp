#include <gtest/gtest.h>

#include <numeric>

#include "eon/topology.hpp"
#include "support/fixtures.hpp"

using namespace eon;
using eon::testing::data_path;

TEST(Topology, UsBackboneCounts) {
  const auto net = load_topology_file(data_path("us_backbone.txt"));
  EXPECT_EQ(net.node_count(), 24u);
  EXPECT_EQ(net.arc_count(), 84u);
}

TEST(Topology, AbileneCounts) {
  const auto net = load_topology_file(data_path("abilene.txt"));
  EXPECT_EQ(net.node_count(), 12u);
  EXPECT_EQ(net.arc_count(), 30u);
}

TEST(Topology, Mesh15IsConnectedAndRegular) {
  const auto net = load_topology_file(data_path("mesh15.txt"));
  EXPECT_EQ(net.node_count(), 15u);
  for (std::uint32_t v = 0; v < 15; ++v) EXPECT_EQ(net.out_degree(NodeId{v}), 4u);
}

TEST(Topology, EmptyNodeSectionIsAnError) {
  EXPECT_THROW(load_topology("# nothing here\n"), TopologyError);
  EXPECT_THROW(load_topology(""), TopologyError);
}

TEST(Topology, ParseErrorsCarryLineNumbers) {
  try {
    load_topology("node A\nnode B\nlink A C 10\n");
    FAIL() << "dangling endpoint accepted";
  } catch (const TopologyError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(load_topology("node A\nnode A\n"), TopologyError);
  EXPECT_THROW(load_topology("node A\nlink A A 5\n"), TopologyError);
  EXPECT_THROW(load_topology("node A\nnode B\nlink A B 0\n"), TopologyError);
  EXPECT_THROW(load_topology("node A\nnode B\nlink A B -3\n"), TopologyError);
  EXPECT_THROW(load_topology("node A\nnode B\nlink A B ten\n"), TopologyError);
  EXPECT_THROW(load_topology("node A\nedge A B 3\n"), TopologyError);
}

TEST(Topology, CommentsAndBlankLines) {
  const auto net = load_topology("  # header\n\nnode A # first\nnode B\n\tlink A B 12.5  # km\n");
  EXPECT_EQ(net.node_count(), 2u);
  ASSERT_EQ(net.arc_count(), 2u);
  EXPECT_DOUBLE_EQ(net.arc(ArcId{0}).length_km, 12.5);
}

TEST(Topology, TriangleOutgoing) {
  const auto net = load_topology("node A\nnode B\nnode C\nlink A B 1\nlink B C 1\nlink A C 1\n");
  EXPECT_EQ(outgoing(net, "A").size(), 2u);
}

TEST(Topology, IsolatedNodeHasNoArcs) {
  const auto net = load_topology("node A\nnode B\nnode Z\nlink A B 1\n");
  EXPECT_TRUE(outgoing(net, "Z").empty());
  EXPECT_THROW(outgoing(net, "Q"), TopologyError);
}

TEST(Topology, OutDegreesSumToArcCount) {
  const auto net = load_topology_file(data_path("us_backbone.txt"));
  std::size_t sum = 0;
  for (const auto& name : net.node_names()) {
    const auto out = outgoing(net, name);
    EXPECT_EQ(out.size(), net.out_degree(net.node(name)));
    sum += out.size();
  }
  EXPECT_EQ(sum, 84u);
}

TEST(Topology, EveryArcHasAnEqualReverse) {
  for (const char* file : {"us_backbone.txt", "abilene.txt", "mesh15.txt"}) {
    const auto net = load_topology_file(data_path(file));
    for (const auto& l : net.links()) {
      const Link& r = net.arc(net.reverse(l.id));
      EXPECT_EQ(r.src, l.dst);
      EXPECT_EQ(r.dst, l.src);
      EXPECT_EQ(r.length_km, l.length_km);
      EXPECT_EQ(r.delay_ps, l.delay_ps);
    }
  }
}

TEST(Topology, DelaysAreIntegerPicoseconds) {
  const auto net = load_topology("node A\nnode B\nlink A B 2000\n");
  EXPECT_EQ(net.arc(ArcId{0}).delay_ps, 10'000'000'000);
}

TEST(Topology, SerializationRoundTrip) {
  for (const char* file : {"us_backbone.txt", "abilene.txt", "mesh15.txt"}) {
    const auto net = load_topology_file(data_path(file));
    EXPECT_EQ(load_topology(to_text(net)), net) << file;
  }
  const auto odd = load_topology("node x\nnode y\nlink x y 0.1\nlink y x 1e-3\n");
  EXPECT_EQ(load_topology(to_text(odd)), odd);
}

TEST(Topology, OutgoingOrderedByDestinationThenArc) {
  const auto net = load_topology("node A\nnode B\nnode C\nlink A C 5\nlink A B 5\nlink A C 2\n");
  const auto out = net.outgoing_ids(net.node("A"));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(net.arc(out[0]).dst, net.node("B"));
  EXPECT_EQ(net.arc(out[1]).dst, net.node("C"));
  EXPECT_LT(out[1], out[2]);
}

TEST(Topology, ConfigIsValidated) {
  EXPECT_THROW(Network::Builder(TopologyConfig{0.0, 16}), TopologyError);
  EXPECT_THROW(Network::Builder(TopologyConfig{2e5, 0}), TopologyError);
  const auto net = load_topology("node A\nnode B\nlink A B 1000\n", TopologyConfig{1e5, 8});
  EXPECT_EQ(net.slots_per_link(), 8);
  EXPECT_EQ(net.arc(ArcId{0}).delay_ps, 10'000'000'000);
}
