#include <gtest/gtest.h>

#include <random>

#include "eon/spectrum.hpp"
#include "support/fixtures.hpp"

using namespace eon;
using Blocks = std::vector<SlotRange>;

namespace {

/// Arc 0 with the given occupancy pattern, one allocation per run of ones.
SpectrumState from_pattern(const std::string& bits) {
  SpectrumState s(1, static_cast<int>(bits.size()));
  const std::vector<ArcId> arc{ArcId{0}};
  for (std::size_t i = 0; i < bits.size();) {
    if (bits[i] != '1') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < bits.size() && bits[j] == '1') ++j;
    s.allocate(arc, {static_cast<int>(i), static_cast<int>(j - i)}, 0);
    i = j;
  }
  return s;
}

/// Reference block search: a slot is usable iff no occupied slot lies within gb of it.
Blocks naive_blocks(const SpectrumState& s, const std::vector<ArcId>& path, int gb) {
  Blocks out;
  int run = -1;
  for (int i = 0; i <= s.slots(); ++i) {
    bool usable = i < s.slots();
    for (int j = i - gb; usable && j <= i + gb; ++j) {
      if (j < 0 || j >= s.slots()) continue;
      for (ArcId a : path) usable = usable && !s.occupied(a, j);
    }
    if (usable && run < 0) run = i;
    if (!usable && run >= 0) {
      out.push_back({run, i - run});
      run = -1;
    }
  }
  return out;
}

const std::vector<ArcId> kArc0{ArcId{0}};

}  // namespace

TEST(Spectrum, FreeBlocksReadOffVector) {
  const auto s = from_pattern("1111000011110000");
  EXPECT_EQ(s.free_blocks(kArc0, 0), (Blocks{{4, 4}, {12, 4}}));
}

TEST(Spectrum, FreeBlocksWithGuardBand) {
  // slots 4-7 and 12-13 are within 2 of an occupied slot
  const auto s = from_pattern("1111000011110000");
  EXPECT_EQ(s.free_blocks(kArc0, 2), (Blocks{{14, 2}}));
  EXPECT_EQ(s.free_blocks(kArc0, 1), (Blocks{{5, 2}, {13, 3}}));
}

TEST(Spectrum, FreeBlocksIntersectAcrossArcs) {
  SpectrumState s(2, 12);
  s.allocate(std::vector<ArcId>{ArcId{0}}, {0, 4}, 0);
  s.allocate(std::vector<ArcId>{ArcId{0}}, {8, 4}, 0);
  s.allocate(std::vector<ArcId>{ArcId{1}}, {0, 6}, 0);
  s.allocate(std::vector<ArcId>{ArcId{1}}, {10, 2}, 0);
  EXPECT_EQ(s.free_blocks(std::vector<ArcId>{ArcId{0}, ArcId{1}}, 0), (Blocks{{6, 2}}));
}

TEST(Spectrum, AllocateFirstBlock) {
  SpectrumState s(1, 16);
  s.allocate(kArc0, {4, 4}, 0);
  EXPECT_EQ(s.free_blocks(kArc0, 0), (Blocks{{0, 4}, {8, 8}}));
}

TEST(Spectrum, GuardBandRejectsAdjacentBand) {
  SpectrumState s(1, 16);
  s.allocate(kArc0, {4, 2}, 1);
  EXPECT_THROW(s.allocate(kArc0, {6, 2}, 1), SpectrumConflict);
  EXPECT_NO_THROW(s.allocate(kArc0, {7, 2}, 1));
}

TEST(Spectrum, ZeroGuardBandAllowsAdjacency) {
  SpectrumState s(1, 8);
  s.allocate(kArc0, {0, 4}, 0);
  EXPECT_NO_THROW(s.allocate(kArc0, {4, 4}, 0));
  EXPECT_EQ(s.occupancy(ArcId{0}), "11111111");
}

TEST(Spectrum, SpectrumEdgesNeedNoGuard) {
  SpectrumState s(1, 8);
  EXPECT_NO_THROW(s.allocate(kArc0, {0, 2}, 3));
  EXPECT_NO_THROW(s.allocate(kArc0, {6, 2}, 3));
}

TEST(Spectrum, AllocateIsAtomic) {
  SpectrumState s(3, 8);
  s.allocate(std::vector<ArcId>{ArcId{2}}, {3, 1}, 0);
  const auto before = s.dump();
  EXPECT_THROW(s.allocate(std::vector<ArcId>{ArcId{0}, ArcId{1}, ArcId{2}}, {2, 3}, 0), SpectrumConflict);
  EXPECT_EQ(s.dump(), before);
  EXPECT_THROW(s.allocate(std::vector<ArcId>{ArcId{0}, ArcId{0}}, {0, 1}, 0), SpectrumConflict);
  EXPECT_THROW(s.allocate(kArc0, {7, 2}, 0), SpectrumConflict);
  EXPECT_THROW(s.allocate(kArc0, {0, 0}, 0), SpectrumConflict);
  EXPECT_EQ(s.dump(), before);
}

TEST(Spectrum, ReleaseRestoresOccupancy) {
  auto s = from_pattern("0110000000011000");
  const auto before = s.dump();
  const auto id = s.allocate(kArc0, {5, 3}, 1);
  EXPECT_NE(s.dump(), before);
  s.release(id);
  EXPECT_EQ(s.dump(), before);
}

TEST(Spectrum, DoubleReleaseFails) {
  SpectrumState s(1, 8);
  const auto id = s.allocate(kArc0, {1, 2}, 0);
  s.release(id);
  EXPECT_THROW(s.release(id), UnknownAllocation);
}

TEST(Spectrum, InterleavedReleaseKeepsOtherOwner) {
  SpectrumState s(1, 8);
  const auto a = s.allocate(kArc0, {0, 2}, 0);
  const auto b = s.allocate(kArc0, {4, 2}, 0);
  s.release(a);
  EXPECT_FALSE(s.occupied(ArcId{0}, 0));
  EXPECT_FALSE(s.owner(ArcId{0}, 1).has_value());
  EXPECT_EQ(s.owner(ArcId{0}, 4), b);
  EXPECT_EQ(s.owner(ArcId{0}, 5), b);
  EXPECT_EQ(s.active_count(), 1u);
}

TEST(Spectrum, FragmentedStateBlocksFourSlotBand) {
  const auto net = eon::testing::diamond();
  auto s = eon::testing::fragmented(net);
  const auto upper = eon::testing::arcs(net, {"A", "B", "D"});
  const auto lower = eon::testing::arcs(net, {"A", "C", "D"});
  EXPECT_EQ(s.free_blocks(upper, 2), (Blocks{{0, 2}, {8, 3}}));
  EXPECT_EQ(s.free_blocks(lower, 2), (Blocks{{5, 3}, {15, 1}}));
  for (int start = 0; start + 4 <= 16; ++start) {
    EXPECT_FALSE(s.fits(upper, {start, 4}, 2));
    EXPECT_FALSE(s.fits(lower, {start, 4}, 2));
  }
  s.allocate(upper, {0, 2}, 2);
  s.allocate(upper, {8, 2}, 2);
  EXPECT_NO_THROW(s.audit(2));
}

TEST(Spectrum, DumpIsOneLinePerArc) {
  SpectrumState s(2, 4);
  s.allocate(std::vector<ArcId>{ArcId{1}}, {1, 2}, 0);
  EXPECT_EQ(s.dump(), "0000\n0110\n");
}

TEST(Spectrum, WideSpectrumCrossesWordBoundaries) {
  SpectrumState s(1, 130);
  s.allocate(kArc0, {60, 10}, 0);
  s.allocate(kArc0, {127, 3}, 0);
  EXPECT_EQ(s.free_blocks(kArc0, 0), (Blocks{{0, 60}, {70, 57}}));
  EXPECT_EQ(s.free_blocks(kArc0, 2), (Blocks{{0, 58}, {72, 53}}));
}

TEST(Spectrum, RandomisedAgainstNaiveScan) {
  std::mt19937 rng(11);
  for (int round = 0; round < 300; ++round) {
    const int slots = 1 + static_cast<int>(rng() % 140);
    const int gb = static_cast<int>(rng() % 4);
    SpectrumState s(3, slots);
    std::vector<AllocationId> live;
    for (int op = 0; op < 40; ++op) {
      const std::vector<ArcId> path{ArcId{static_cast<std::uint32_t>(rng() % 3)}};
      if (!live.empty() && rng() % 4 == 0) {
        const auto i = rng() % live.size();
        s.release(live[i]);
        live.erase(live.begin() + static_cast<long>(i));
        continue;
      }
      const int start = static_cast<int>(rng() % slots);
      const int len = 1 + static_cast<int>(rng() % 6);
      const SlotRange r{start, std::min(len, slots - start)};
      if (s.fits(path, r, gb)) live.push_back(s.allocate(path, r, gb));
      s.audit(gb);
    }
    const std::vector<ArcId> all{ArcId{0}, ArcId{1}, ArcId{2}};
    for (int g = 0; g <= 3; ++g) {
      const auto blocks = s.free_blocks(all, g);
      ASSERT_EQ(blocks, naive_blocks(s, all, g));
      for (const auto& b : blocks) {
        // every returned block can be allocated while the state is unchanged
        EXPECT_TRUE(s.fits(all, b, g));
      }
    }
  }
}

TEST(Spectrum, AuditChecksGuardBands) {
  const auto net = eon::testing::diamond();
  EXPECT_NO_THROW(eon::testing::fragmented(net).audit(2));
  SpectrumState s(1, 8);
  s.allocate(kArc0, {0, 2}, 2);
  s.allocate(kArc0, {4, 2}, 2);
  EXPECT_NO_THROW(s.audit(2));
  EXPECT_THROW(s.audit(3), std::logic_error);
}

TEST(Spectrum, InspectionCounter) {
  SpectrumState s(4, 16);
  std::uint64_t n = 0;
  s.free_blocks(std::vector<ArcId>{ArcId{0}, ArcId{3}}, 1, &n);
  EXPECT_EQ(n, 32u);
}
