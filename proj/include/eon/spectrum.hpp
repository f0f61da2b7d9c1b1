#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eon/topology.hpp"

namespace eon {

/// A run of consecutive frequency slots [start, start + len).
struct SlotRange {
  int start = 0;
  int len = 0;

  int end() const { return start + len; }
  friend auto operator<=>(const SlotRange&, const SlotRange&) = default;
};

struct AllocationId {
  std::uint64_t value = 0;
  friend auto operator<=>(const AllocationId&, const AllocationId&) = default;
};

struct Allocation {
  AllocationId id;
  std::vector<ArcId> arcs;
  SlotRange range;
};

class SpectrumConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownAllocation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-arc slot occupancy with ownership, plus the registry of active
/// allocations. Single writer.
///
/// Guard-band rule: two distinct allocations sharing an arc must leave at
/// least `gb` free slots between them. The band edges (slot 0 and the last
/// slot) need no guard.
class SpectrumState {
 public:
  SpectrumState(std::size_t arc_count, int slots)
      : slots_(slots),
        words_((static_cast<std::size_t>(slots) + 63) / 64),
        arc_count_(arc_count) {
    if (slots < 1) throw std::invalid_argument("spectrum needs at least one slot");
    bits_.assign(arc_count_ * words_, 0);
    owners_.assign(arc_count_ * static_cast<std::size_t>(slots_), 0);
  }

  explicit SpectrumState(const Network& net) : SpectrumState(net.arc_count(), net.slots_per_link()) {}

  int slots() const { return slots_; }
  std::size_t arc_count() const { return arc_count_; }
  std::size_t active_count() const { return active_.size(); }

  bool occupied(ArcId arc, int slot) const {
    check_arc(arc);
    check_slot(slot);
    return (row(arc)[slot / 64] >> (slot % 64)) & 1u;
  }

  std::optional<AllocationId> owner(ArcId arc, int slot) const {
    check_arc(arc);
    check_slot(slot);
    const auto v = owners_[arc.value * static_cast<std::size_t>(slots_) + slot];
    if (v == 0) return std::nullopt;
    return AllocationId{v};
  }

  /// Maximal slot ranges that are free on every arc of `path` and keep `gb`
  /// slots of distance from every occupied slot. Sorted by start.
  std::vector<SlotRange> free_blocks(std::span<const ArcId> path, int gb,
                                     std::uint64_t* inspections = nullptr) const {
    if (path.empty()) throw std::invalid_argument("free_blocks on an empty path");
    if (gb < 0) throw std::invalid_argument("guard band must be non-negative");
    std::vector<std::uint64_t> merged(words_, 0);
    for (ArcId a : path) {
      check_arc(a);
      const auto* r = row(a);
      for (std::size_t w = 0; w < words_; ++w) merged[w] |= r[w];
    }
    if (inspections) *inspections += path.size() * static_cast<std::uint64_t>(slots_);

    // prefix[i] = occupied slots in [0, i)
    std::vector<int> prefix(static_cast<std::size_t>(slots_) + 1, 0);
    for (int i = 0; i < slots_; ++i) {
      prefix[i + 1] = prefix[i] + static_cast<int>((merged[i / 64] >> (i % 64)) & 1u);
    }
    auto blocked = [&](int i) {
      const int lo = std::max(0, i - gb);
      const int hi = std::min(slots_, i + gb + 1);
      return prefix[hi] - prefix[lo] > 0;
    };
    std::vector<SlotRange> out;
    int i = 0;
    while (i < slots_) {
      if (blocked(i)) {
        ++i;
        continue;
      }
      int j = i;
      while (j < slots_ && !blocked(j)) ++j;
      out.push_back(SlotRange{i, j - i});
      i = j;
    }
    return out;
  }

  /// True iff `range` lies inside one of free_blocks(path, gb).
  bool fits(std::span<const ArcId> path, SlotRange range, int gb) const {
    if (path.empty() || gb < 0) return false;
    if (range.len < 1 || range.start < 0 || range.end() > slots_) return false;
    const int lo = std::max(0, range.start - gb);
    const int hi = std::min(slots_, range.end() + gb);
    for (ArcId a : path) {
      check_arc(a);
      const auto* r = row(a);
      for (int s = lo; s < hi; ++s) {
        if ((r[s / 64] >> (s % 64)) & 1u) return false;
      }
    }
    return true;
  }

  /// Marks `range` on every arc of `path`. All-or-nothing.
  AllocationId allocate(std::span<const ArcId> path, SlotRange range, int gb) {
    if (path.empty()) throw SpectrumConflict("allocation on an empty path");
    if (range.len < 1 || range.start < 0 || range.end() > slots_) {
      throw SpectrumConflict("slot range outside the spectrum");
    }
    for (std::size_t i = 0; i < path.size(); ++i) {
      for (std::size_t j = i + 1; j < path.size(); ++j) {
        if (path[i] == path[j]) throw SpectrumConflict("path repeats an arc");
      }
    }
    if (!fits(path, range, gb)) {
      throw SpectrumConflict("slots [" + std::to_string(range.start) + ", " +
                             std::to_string(range.end()) + ") occupied or inside a guard band");
    }
    const AllocationId id{next_id_++};
    for (ArcId a : path) {
      auto* r = row(a);
      for (int s = range.start; s < range.end(); ++s) {
        r[s / 64] |= std::uint64_t{1} << (s % 64);
        owners_[a.value * static_cast<std::size_t>(slots_) + s] = id.value;
      }
    }
    active_.emplace(id.value, Allocation{id, std::vector<ArcId>(path.begin(), path.end()), range});
    return id;
  }

  void release(AllocationId id) {
    auto it = active_.find(id.value);
    if (it == active_.end()) {
      throw UnknownAllocation("allocation " + std::to_string(id.value) + " is not active");
    }
    const Allocation& alloc = it->second;
    for (ArcId a : alloc.arcs) {
      auto* r = row(a);
      for (int s = alloc.range.start; s < alloc.range.end(); ++s) {
        r[s / 64] &= ~(std::uint64_t{1} << (s % 64));
        owners_[a.value * static_cast<std::size_t>(slots_) + s] = 0;
      }
    }
    active_.erase(it);
  }

  const Allocation* find(AllocationId id) const {
    auto it = active_.find(id.value);
    return it == active_.end() ? nullptr : &it->second;
  }

  bool all_free() const {
    return std::all_of(bits_.begin(), bits_.end(), [](std::uint64_t w) { return w == 0; });
  }

  std::string occupancy(ArcId arc) const {
    check_arc(arc);
    std::string s(static_cast<std::size_t>(slots_), '0');
    for (int i = 0; i < slots_; ++i) {
      if ((row(arc)[i / 64] >> (i % 64)) & 1u) s[i] = '1';
    }
    return s;
  }

  /// Debug dump: one 0/1 line per arc, in arc-id order.
  std::string dump() const {
    std::string out;
    out.reserve(arc_count_ * (static_cast<std::size_t>(slots_) + 1));
    for (std::uint32_t a = 0; a < arc_count_; ++a) {
      out += occupancy(ArcId{a});
      out += '\n';
    }
    return out;
  }

  /// Full consistency check: ownership matches the registry, each owner
  /// holds one contiguous range per arc, and neighbouring owners on an arc
  /// are at least `gb` free slots apart. Throws std::logic_error.
  void audit(int gb) const {
    std::vector<std::uint64_t> expected(owners_.size(), 0);
    for (const auto& [key, alloc] : active_) {
      for (ArcId a : alloc.arcs) {
        for (int s = alloc.range.start; s < alloc.range.end(); ++s) {
          auto& cell = expected[a.value * static_cast<std::size_t>(slots_) + s];
          if (cell != 0) throw std::logic_error("slot owned by two allocations");
          cell = key;
        }
      }
    }
    if (expected != owners_) throw std::logic_error("owner table disagrees with registry");
    for (std::uint32_t a = 0; a < arc_count_; ++a) {
      std::uint64_t prev_owner = 0;
      int prev_end = -1;
      for (int s = 0; s < slots_; ++s) {
        const auto o = owners_[a * static_cast<std::size_t>(slots_) + s];
        const bool bit = (row(ArcId{a})[s / 64] >> (s % 64)) & 1u;
        if (bit != (o != 0)) throw std::logic_error("occupancy bit disagrees with owner");
        if (o == 0) continue;
        if (o != prev_owner) {
          if (prev_owner != 0 && s - prev_end < gb) {
            throw std::logic_error("guard band violated on arc " + std::to_string(a));
          }
          prev_owner = o;
        }
        prev_end = s + 1;
      }
    }
  }

 private:
  void check_arc(ArcId a) const {
    if (a.value >= arc_count_) throw std::out_of_range("arc id out of range");
  }
  void check_slot(int s) const {
    if (s < 0 || s >= slots_) throw std::out_of_range("slot index out of range");
  }
  const std::uint64_t* row(ArcId a) const { return bits_.data() + a.value * words_; }
  std::uint64_t* row(ArcId a) { return bits_.data() + a.value * words_; }

  int slots_;
  std::size_t words_;
  std::size_t arc_count_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint64_t> owners_;
  std::map<std::uint64_t, Allocation> active_;
  std::uint64_t next_id_ = 1;
};

}  // namespace eon
