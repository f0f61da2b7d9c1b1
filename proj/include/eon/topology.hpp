#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eon/physics.hpp"

namespace eon {

struct NodeId {
  std::uint32_t value = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct ArcId {
  std::uint32_t value = 0;
  friend auto operator<=>(const ArcId&, const ArcId&) = default;
};

/// One directed fiber arc.
struct Link {
  ArcId id;
  NodeId src;
  NodeId dst;
  double length_km = 0.0;
  Picoseconds delay_ps = 0;

  friend bool operator==(const Link&, const Link&) = default;
};

class TopologyError : public std::runtime_error {
 public:
  TopologyError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct TopologyConfig {
  double propagation_speed_km_s = 2e5;
  int slots_per_link = 128;
};

/// Directed multigraph of nodes and fiber arcs. Immutable once built.
///
/// Undirected input edges are stored as two arcs with consecutive ids
/// (2k, 2k+1), so the reverse of arc `a` is `a ^ 1`.
class Network {
 public:
  Network() = default;

  std::size_t node_count() const { return names_.size(); }
  std::size_t arc_count() const { return links_.size(); }
  int slots_per_link() const { return slots_per_link_; }
  double propagation_speed_km_s() const { return speed_km_s_; }

  std::span<const Link> links() const { return links_; }
  const Link& arc(ArcId id) const { return links_.at(id.value); }
  ArcId reverse(ArcId id) const { return ArcId{id.value ^ 1u}; }

  const std::string& name(NodeId n) const { return names_.at(n.value); }
  std::span<const std::string> node_names() const { return names_; }

  std::optional<NodeId> find_node(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return NodeId{it->second};
  }

  NodeId node(std::string_view name) const {
    auto n = find_node(name);
    if (!n) throw TopologyError("unknown node '" + std::string(name) + "'");
    return *n;
  }

  bool contains(NodeId n) const { return n.value < names_.size(); }

  /// Arc ids leaving `n`, ordered by destination then arc id.
  std::span<const ArcId> outgoing_ids(NodeId n) const {
    if (!contains(n)) throw TopologyError("unknown node id " + std::to_string(n.value));
    const auto begin = out_offsets_[n.value];
    const auto end = out_offsets_[n.value + 1];
    return std::span<const ArcId>(out_arcs_).subspan(begin, end - begin);
  }

  std::size_t out_degree(NodeId n) const { return outgoing_ids(n).size(); }

  std::size_t max_out_degree() const {
    std::size_t best = 0;
    for (std::uint32_t v = 0; v < node_count(); ++v) best = std::max(best, out_degree(NodeId{v}));
    return best;
  }

  friend bool operator==(const Network& a, const Network& b) {
    return a.names_ == b.names_ && a.links_ == b.links_ && a.slots_per_link_ == b.slots_per_link_ &&
           a.speed_km_s_ == b.speed_km_s_;
  }

  class Builder;

 private:
  void index_arcs() {
    std::vector<ArcId> sorted;
    sorted.reserve(links_.size());
    for (const auto& l : links_) sorted.push_back(l.id);
    std::stable_sort(sorted.begin(), sorted.end(), [this](ArcId a, ArcId b) {
      const Link& la = links_[a.value];
      const Link& lb = links_[b.value];
      if (la.src != lb.src) return la.src < lb.src;
      if (la.dst != lb.dst) return la.dst < lb.dst;
      return a < b;
    });
    out_offsets_.assign(names_.size() + 1, 0);
    for (const auto& l : links_) ++out_offsets_[l.src.value + 1];
    for (std::size_t i = 1; i < out_offsets_.size(); ++i) out_offsets_[i] += out_offsets_[i - 1];
    out_arcs_ = std::move(sorted);
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<Link> links_;
  std::vector<ArcId> out_arcs_;
  std::vector<std::size_t> out_offsets_{0};
  int slots_per_link_ = 0;
  double speed_km_s_ = 2e5;
};

/// Incremental construction; every edge added becomes two arcs.
class Network::Builder {
 public:
  explicit Builder(TopologyConfig config = {}) : config_(config) {
    if (config.slots_per_link < 1) throw TopologyError("slots_per_link must be >= 1");
    if (!(config.propagation_speed_km_s > 0.0)) {
      throw TopologyError("propagation speed must be positive");
    }
  }

  NodeId add_node(std::string name, int line = 0) {
    if (name.empty()) throw TopologyError("empty node id", line);
    if (net_.index_.count(name)) throw TopologyError("duplicate node id '" + name + "'", line);
    const auto id = static_cast<std::uint32_t>(net_.names_.size());
    net_.index_.emplace(name, id);
    net_.names_.push_back(std::move(name));
    return NodeId{id};
  }

  void add_edge(std::string_view a, std::string_view b, double length_km, int line = 0) {
    auto src = net_.find_node(a);
    auto dst = net_.find_node(b);
    if (!src) throw TopologyError("dangling endpoint '" + std::string(a) + "'", line);
    if (!dst) throw TopologyError("dangling endpoint '" + std::string(b) + "'", line);
    if (*src == *dst) throw TopologyError("self-loop at '" + std::string(a) + "'", line);
    if (!(length_km > 0.0) || !std::isfinite(length_km)) {
      throw TopologyError("link length must be positive", line);
    }
    const Picoseconds delay = propagation_delay_ps(length_km, config_.propagation_speed_km_s);
    const auto base = static_cast<std::uint32_t>(net_.links_.size());
    net_.links_.push_back(Link{ArcId{base}, *src, *dst, length_km, delay});
    net_.links_.push_back(Link{ArcId{base + 1}, *dst, *src, length_km, delay});
  }

  Network build() && {
    if (net_.names_.empty()) throw TopologyError("topology declares no nodes");
    net_.slots_per_link_ = config_.slots_per_link;
    net_.speed_km_s_ = config_.propagation_speed_km_s;
    net_.index_arcs();
    return std::move(net_);
  }

 private:
  TopologyConfig config_;
  Network net_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses the line-oriented topology format:
///
///     # comment
///     node <id>
///     link <src> <dst> <length_km>
inline Network load_topology(std::string_view text, const TopologyConfig& config = {}) {
  Network::Builder builder(config);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "node") {
      if (tok.size() != 2) throw TopologyError("expected 'node <id>'", line_no);
      builder.add_node(std::string(tok[1]), line_no);
    } else if (tok[0] == "link") {
      if (tok.size() != 4) throw TopologyError("expected 'link <src> <dst> <length_km>'", line_no);
      auto len = detail::parse_double(tok[3]);
      if (!len) throw TopologyError("bad length '" + std::string(tok[3]) + "'", line_no);
      builder.add_edge(tok[1], tok[2], *len, line_no);
    } else {
      throw TopologyError("unknown directive '" + std::string(tok[0]) + "'", line_no);
    }
  }
  return std::move(builder).build();
}

inline Network load_topology_file(const std::string& path, const TopologyConfig& config = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TopologyError("cannot read topology file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_topology(ss.str(), config);
}

/// Arcs leaving `v`, ordered by destination then arc id.
inline std::vector<Link> outgoing(const Network& net, NodeId v) {
  std::vector<Link> out;
  for (ArcId a : net.outgoing_ids(v)) out.push_back(net.arc(a));
  return out;
}

inline std::vector<Link> outgoing(const Network& net, std::string_view v) {
  return outgoing(net, net.node(v));
}

/// Serializes back into the text format. Lengths use the shortest
/// representation that round-trips exactly.
inline std::string to_text(const Network& net) {
  std::string out;
  for (const auto& n : net.node_names()) out += "node " + n + "\n";
  const auto links = net.links();
  for (std::size_t i = 0; i < links.size(); i += 2) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, links[i].length_km);
    out += "link " + net.name(links[i].src) + " " + net.name(links[i].dst) + " " +
           std::string(buf, end) + "\n";
  }
  return out;
}

}  // namespace eon
