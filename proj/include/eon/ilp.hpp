#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eon/heuristic.hpp"
#include "eon/physics.hpp"
#include "eon/spectrum.hpp"
#include "eon/topology.hpp"

namespace eon::ilp {

/// Constraint families. The order fixes the LP name prefixes below.
enum class Family : std::uint8_t {
  routing,
  continuity,
  consecutive,
  non_overlap,
  linearization_gamma,
  guard_band,
  bandwidth,
  gvd,
  linearization_z,
  delay,
  diff_delay,
};

inline constexpr std::size_t kFamilyCount = 11;

inline constexpr std::array<std::string_view, kFamilyCount> kFamilyPrefix = {
    "rt", "ct", "cs", "no", "lg", "gb", "bw", "gvd", "lz", "dl", "dd"};

inline constexpr std::array<std::string_view, kFamilyCount> kFamilyName = {
    "routing",  "continuity", "consecutive",     "non-overlap", "linearization-gamma", "guard-band",
    "bandwidth", "gvd",       "linearization-z", "delay",       "diff-delay"};

inline std::string_view family_name(Family f) { return kFamilyName[static_cast<std::size_t>(f)]; }
inline std::string_view family_prefix(Family f) { return kFamilyPrefix[static_cast<std::size_t>(f)]; }

enum class VarType { binary, integer };

/// Which symbol of the model a variable instantiates.
enum class VarKind {
  path_used,      // x_p
  path_arc,       // x_{p,e}
  path_slot,      // y_{p,i}
  path_arc_slot,  // x_{p,e,i}
  overlap,        // o_{p,p'}
  gamma,          // gamma_{p,p',e}
  delay,          // pd_p
  slots,          // T_p
  gvd,            // GVD_p
  z,              // z_{p,e}
};

/// Family under which a bound violation of this kind of variable is reported.
inline Family bound_family(VarKind k) {
  switch (k) {
    case VarKind::path_used:
    case VarKind::path_arc:
      return Family::routing;
    case VarKind::path_slot:
    case VarKind::path_arc_slot:
      return Family::continuity;
    case VarKind::overlap:
    case VarKind::gamma:
      return Family::linearization_gamma;
    case VarKind::delay:
      return Family::delay;
    case VarKind::slots:
      return Family::consecutive;
    case VarKind::gvd:
      return Family::gvd;
    case VarKind::z:
      return Family::linearization_z;
  }
  return Family::routing;
}

struct Variable {
  std::string name;
  VarType type = VarType::binary;
  VarKind kind = VarKind::path_used;
  std::int64_t lower = 0;
  std::int64_t upper = 1;

  friend bool operator==(const Variable&, const Variable&) = default;
};

enum class Relation { less_equal, equal, greater_equal };

struct Term {
  std::size_t var = 0;
  std::int64_t coeff = 0;

  friend bool operator==(const Term&, const Term&) = default;
};

struct Constraint {
  Family family = Family::routing;
  std::uint32_t ordinal = 0;  // position within its family
  std::vector<Term> terms;
  Relation rel = Relation::less_equal;
  std::int64_t rhs = 0;

  std::string name() const {
    return std::string(family_prefix(family)) + "_" + std::to_string(ordinal);
  }

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear integer program: typed bounded variables, tagged linear
/// constraints and a minimization objective.
class ConstraintSystem {
 public:
  std::size_t add_variable(std::string name, VarType type, VarKind kind, std::int64_t lower,
                           std::int64_t upper) {
    if (index_.count(name)) throw ModelError("duplicate variable '" + name + "'");
    if (lower > upper) throw ModelError("empty domain for '" + name + "'");
    const std::size_t id = vars_.size();
    index_.emplace(name, id);
    vars_.push_back(Variable{std::move(name), type, kind, lower, upper});
    return id;
  }

  const Constraint& add_constraint(Family family, std::vector<Term> terms, Relation rel,
                                   std::int64_t rhs) {
    auto& counter = family_count_[static_cast<std::size_t>(family)];
    return add_constraint(Constraint{family, counter, std::move(terms), rel, rhs});
  }

  const Constraint& add_constraint(Constraint c) {
    if (c.terms.empty()) throw ModelError("constraint without terms");
    for (const auto& t : c.terms) {
      if (t.var >= vars_.size()) throw ModelError("constraint references an undeclared variable");
    }
    auto& counter = family_count_[static_cast<std::size_t>(c.family)];
    counter = std::max(counter, c.ordinal + 1);
    cons_.push_back(std::move(c));
    return cons_.back();
  }

  void set_objective(std::vector<Term> terms) { objective_ = std::move(terms); }

  std::span<const Variable> variables() const { return vars_; }
  std::span<const Constraint> constraints() const { return cons_; }
  std::span<const Term> objective() const { return objective_; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index(std::string_view name) const {
    auto i = find(name);
    if (!i) throw ModelError("unknown variable '" + std::string(name) + "'");
    return *i;
  }

  std::size_t count(VarKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(vars_.begin(), vars_.end(), [kind](const Variable& v) { return v.kind == kind; }));
  }

  std::size_t count(Family family) const {
    return family_count_[static_cast<std::size_t>(family)];
  }

  /// Exact evaluation; 128-bit accumulation keeps big-M rows exact.
  static bool satisfied(const Constraint& c, std::span<const std::int64_t> values) {
    __extension__ using Wide = __int128;
    Wide lhs = 0;
    for (const auto& t : c.terms) lhs += static_cast<Wide>(t.coeff) * values[t.var];
    switch (c.rel) {
      case Relation::less_equal:
        return lhs <= c.rhs;
      case Relation::equal:
        return lhs == c.rhs;
      case Relation::greater_equal:
        return lhs >= c.rhs;
    }
    return false;
  }

  friend bool operator==(const ConstraintSystem& a, const ConstraintSystem& b) {
    return a.vars_ == b.vars_ && a.cons_ == b.cons_ && a.objective_ == b.objective_;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::vector<Term> objective_;
  std::unordered_map<std::string, std::size_t> index_;
  std::array<std::uint32_t, kFamilyCount> family_count_{};
};

// ---------------------------------------------------------------------------
// Variable naming

namespace names {
inline std::string p(std::size_t i) { return "p" + std::to_string(i); }
inline std::string x(std::size_t pi) { return "x_" + p(pi); }
inline std::string xe(std::size_t pi, ArcId e) { return "x_" + p(pi) + "_e" + std::to_string(e.value); }
inline std::string y(std::size_t pi, int i) { return "y_" + p(pi) + "_f" + std::to_string(i); }
inline std::string xei(std::size_t pi, ArcId e, int i) {
  return xe(pi, e) + "_f" + std::to_string(i);
}
inline std::string o(std::size_t a, std::size_t b) { return "o_" + p(a) + "_" + p(b); }
inline std::string gamma(std::size_t a, std::size_t b, ArcId e) {
  return "gam_" + p(a) + "_" + p(b) + "_e" + std::to_string(e.value);
}
inline std::string pd(std::size_t pi) { return "pd_" + p(pi); }
inline std::string T(std::size_t pi) { return "T_" + p(pi); }
inline std::string gvd(std::size_t pi) { return "GVD_" + p(pi); }
inline std::string z(std::size_t pi, ArcId e) { return "z_" + p(pi) + "_e" + std::to_string(e.value); }

inline std::optional<VarKind> kind_of(std::string_view n) {
  auto starts = [&](std::string_view pre) { return n.substr(0, pre.size()) == pre; };
  if (starts("gam_")) return VarKind::gamma;
  if (starts("o_")) return VarKind::overlap;
  if (starts("pd_")) return VarKind::delay;
  if (starts("T_")) return VarKind::slots;
  if (starts("GVD_")) return VarKind::gvd;
  if (starts("z_")) return VarKind::z;
  if (starts("y_")) return VarKind::path_slot;
  if (starts("x_")) {
    switch (std::count(n.begin(), n.end(), '_')) {
      case 1:
        return VarKind::path_used;
      case 2:
        return VarKind::path_arc;
      case 3:
        return VarKind::path_arc_slot;
      default:
        return std::nullopt;
    }
  }
  return std::nullopt;
}
}  // namespace names

// ---------------------------------------------------------------------------
// Model construction

struct ModelParams {
  int slots = 16;
  int guard_band = 0;
  Picoseconds max_differential_delay = milliseconds_to_ps(128);
  FiberParams fiber{};
  bool include_gvd = true;
};

namespace detail {

/// Geometry shared by build_model and encode_assignment.
struct Shape {
  std::vector<ArcId> arcs;                  // E_used, ascending
  std::vector<std::vector<char>> on_route;  // [p][arc position]
  std::vector<Picoseconds> gvd_per_slot;    // per arc position
  std::size_t paths = 0;
  int slots = 0;

  std::size_t pos(ArcId a) const {
    return static_cast<std::size_t>(std::lower_bound(arcs.begin(), arcs.end(), a) - arcs.begin());
  }
  bool shared(std::size_t a, std::size_t b, std::size_t e) const { return on_route[a][e] && on_route[b][e]; }
};

inline Shape make_shape(const Network& net, std::span<const FiberPath> candidates, const ModelParams& params) {
  Shape s;
  s.paths = candidates.size();
  s.slots = params.slots;
  std::set<ArcId> used;
  for (const auto& c : candidates) used.insert(c.arcs.begin(), c.arcs.end());
  s.arcs.assign(used.begin(), used.end());
  s.on_route.assign(s.paths, std::vector<char>(s.arcs.size(), 0));
  for (std::size_t p = 0; p < s.paths; ++p) {
    for (ArcId a : candidates[p].arcs) s.on_route[p][s.pos(a)] = 1;
  }
  s.gvd_per_slot.resize(s.arcs.size(), 0);
  if (params.include_gvd) {
    for (std::size_t e = 0; e < s.arcs.size(); ++e) {
      s.gvd_per_slot[e] = gvd_differential_delay_ps(params.fiber, 1, net.arc(s.arcs[e]).length_km);
    }
  }
  return s;
}

inline Picoseconds route_delay(const Network& net, const FiberPath& fp) {
  Picoseconds d = 0;
  for (ArcId a : fp.arcs) d += net.arc(a).delay_ps;
  return d;
}

}  // namespace detail

/// Builds the per-request program over a fixed set of candidate routes.
///
/// Path slot p is bound to candidates[p]; the same route may appear more
/// than once so that several bands can share it. Routing collapses to
/// x_{p,e} = x_p on route arcs, with off-route incidences fixed to zero by
/// bounds. Slot coefficients use 1-based slot numbers. Spectrum already in
/// use in `state` is excluded with its guard band.
inline ConstraintSystem build_model(const Network& net, const Request& req,
                                    std::span<const FiberPath> candidates, const ModelParams& params,
                                    const SpectrumState* state = nullptr) {
  if (candidates.empty()) throw ModelError("candidate path set is empty");
  if (params.slots <= 0) throw ModelError("|F| must be positive");
  if (params.guard_band < 0) throw ModelError("guard band must be non-negative");
  if (req.demand < 0) throw ModelError("demand must be non-negative");
  if (state && state->slots() != params.slots) throw ModelError("state slot count differs from |F|");
  for (const auto& c : candidates) {
    if (c.nodes.empty() || c.arcs.empty() || c.nodes.front() != req.source ||
        c.nodes.back() != req.destination) {
      throw ModelError("candidate path does not connect the request endpoints");
    }
  }

  const auto shape = detail::make_shape(net, candidates, params);
  const std::size_t P = shape.paths;
  const std::size_t E = shape.arcs.size();
  const int F = params.slots;
  const int gb = params.guard_band;

  ConstraintSystem m;
  using VT = VarType;
  using VK = VarKind;

  std::vector<std::size_t> v_x(P), v_pd(P), v_T(P), v_gvd(P);
  std::vector<std::vector<std::size_t>> v_xe(P, std::vector<std::size_t>(E));
  std::vector<std::vector<std::size_t>> v_z(P, std::vector<std::size_t>(E));
  std::vector<std::vector<std::size_t>> v_y(P, std::vector<std::size_t>(F));
  std::vector<std::vector<std::vector<std::size_t>>> v_xei(
      P, std::vector<std::vector<std::size_t>>(E, std::vector<std::size_t>(F)));
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> v_o;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> v_gam;

  std::vector<Picoseconds> pd_max(P, 0), gvd_max(P, 0);
  for (std::size_t p = 0; p < P; ++p) {
    pd_max[p] = detail::route_delay(net, candidates[p]);
    for (std::size_t e = 0; e < E; ++e) {
      if (shape.on_route[p][e]) gvd_max[p] += shape.gvd_per_slot[e] * F;
    }
  }

  for (std::size_t p = 0; p < P; ++p) v_x[p] = m.add_variable(names::x(p), VT::binary, VK::path_used, 0, 1);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t e = 0; e < E; ++e) {
      v_xe[p][e] = m.add_variable(names::xe(p, shape.arcs[e]), VT::binary, VK::path_arc, 0,
                                  shape.on_route[p][e] ? 1 : 0);
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (int i = 0; i < F; ++i) v_y[p][i] = m.add_variable(names::y(p, i), VT::binary, VK::path_slot, 0, 1);
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t e = 0; e < E; ++e) {
      for (int i = 0; i < F; ++i) {
        v_xei[p][e][i] = m.add_variable(names::xei(p, shape.arcs[e], i), VT::binary, VK::path_arc_slot, 0,
                                        shape.on_route[p][e] ? 1 : 0);
      }
    }
  }
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = a + 1; b < P; ++b) v_o[{a, b}] = m.add_variable(names::o(a, b), VT::binary, VK::overlap, 0, 1);
  }
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = a + 1; b < P; ++b) {
      auto& row = v_gam[{a, b}];
      for (std::size_t e = 0; e < E; ++e) {
        row.push_back(m.add_variable(names::gamma(a, b, shape.arcs[e]), VT::binary, VK::gamma, 0, 1));
      }
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    v_T[p] = m.add_variable(names::T(p), VT::integer, VK::slots, 0, F);
    v_pd[p] = m.add_variable(names::pd(p), VT::integer, VK::delay, 0, pd_max[p]);
    v_gvd[p] = m.add_variable(names::gvd(p), VT::integer, VK::gvd, 0, gvd_max[p]);
    for (std::size_t e = 0; e < E; ++e) {
      v_z[p][e] = m.add_variable(names::z(p, shape.arcs[e]), VT::integer, VK::z, 0, F);
    }
  }

  // Minimize total slot-arc usage.
  {
    std::vector<Term> obj;
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t e = 0; e < E; ++e) {
        for (int i = 0; i < F; ++i) obj.push_back({v_xei[p][e][i], 1});
      }
    }
    m.set_objective(std::move(obj));
  }

  // Slots a path may not take on arc e: occupied or within gb of occupied.
  std::vector<std::vector<char>> excluded(E, std::vector<char>(F, 0));
  if (state) {
    for (std::size_t e = 0; e < E; ++e) {
      for (int i = 0; i < F; ++i) {
        if (!state->occupied(shape.arcs[e], i)) continue;
        for (int j = std::max(0, i - gb); j <= std::min(F - 1, i + gb); ++j) excluded[e][j] = 1;
      }
    }
  }
  auto can_be_one = [&](std::size_t p, std::size_t e, int i) { return shape.on_route[p][e] && !excluded[e][i]; };

  std::vector<std::size_t> source_arcs;
  for (std::size_t e = 0; e < E; ++e) {
    if (net.arc(shape.arcs[e]).src == req.source) source_arcs.push_back(e);
  }

  // routing: a fixed route is used entirely or not at all
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t e = 0; e < E; ++e) {
      if (!shape.on_route[p][e]) continue;
      m.add_constraint(Family::routing, {{v_xe[p][e], 1}, {v_x[p], -1}}, Relation::equal, 0);
    }
  }

  // continuity
  std::set<NodeId> inner;
  for (ArcId a : shape.arcs) {
    for (NodeId v : {net.arc(a).src, net.arc(a).dst}) {
      if (v != req.source && v != req.destination) inner.insert(v);
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (int i = 0; i < F; ++i) {
      std::vector<Term> t{{v_y[p][i], 1}};
      for (std::size_t e : source_arcs) t.push_back({v_xei[p][e][i], -1});
      m.add_constraint(Family::continuity, std::move(t), Relation::equal, 0);
    }
    for (NodeId v : inner) {
      for (int i = 0; i < F; ++i) {
        std::vector<Term> t;
        for (std::size_t e = 0; e < E; ++e) {
          const Link& l = net.arc(shape.arcs[e]);
          if (l.dst == v) t.push_back({v_xei[p][e][i], 1});
          if (l.src == v) t.push_back({v_xei[p][e][i], -1});
        }
        if (!t.empty()) m.add_constraint(Family::continuity, std::move(t), Relation::equal, 0);
      }
    }
    for (std::size_t e = 0; e < E; ++e) {
      if (!shape.on_route[p][e]) continue;
      for (int i = 0; i < F; ++i) {
        m.add_constraint(Family::continuity, {{v_xei[p][e][i], 1}, {v_xe[p][e], -1}}, Relation::less_equal, 0);
      }
    }
  }

  // consecutive: T_p counts the band; any two used slots lie within T_p
  for (std::size_t p = 0; p < P; ++p) {
    std::vector<Term> t{{v_T[p], 1}};
    for (std::size_t e : source_arcs) {
      for (int i = 0; i < F; ++i) t.push_back({v_xei[p][e][i], -1});
    }
    m.add_constraint(Family::consecutive, std::move(t), Relation::equal, 0);
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t e = 0; e < E; ++e) {
      for (int i = 0; i < F; ++i) {
        if (!can_be_one(p, e, i)) continue;
        for (int j = i + 1; j < F; ++j) {
          if (!can_be_one(p, e, j)) continue;
          // f_j x_j - f_i x_i + 1 <= T_p + (2 - x_i - x_j) |F|
          m.add_constraint(Family::consecutive,
                           {{v_xei[p][e][j], (j + 1) + F}, {v_xei[p][e][i], F - (i + 1)}, {v_T[p], -1}},
                           Relation::less_equal, 2 * static_cast<std::int64_t>(F) - 1);
        }
      }
    }
  }

  // non-overlap
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = a + 1; b < P; ++b) {
      const auto o = v_o[{a, b}];
      for (std::size_t e = 0; e < E; ++e) {
        if (!shape.shared(a, b, e)) continue;
        m.add_constraint(Family::non_overlap, {{v_xe[a][e], 1}, {v_xe[b][e], 1}, {o, -1}}, Relation::less_equal, 1);
      }
      for (int i = 0; i < F; ++i) {
        m.add_constraint(Family::non_overlap, {{v_y[a][i], 1}, {v_y[b][i], 1}, {o, 1}}, Relation::less_equal, 2);
      }
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (int i = 0; i < F; ++i) {
      m.add_constraint(Family::non_overlap, {{v_x[p], 1}, {v_y[p][i], -1}}, Relation::greater_equal, 0);
    }
  }

  // linearization of o <= sum_e x_{p,e} x_{p',e}
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = a + 1; b < P; ++b) {
      const auto& g = v_gam[{a, b}];
      std::vector<Term> t{{v_o[{a, b}], 1}};
      for (std::size_t e = 0; e < E; ++e) t.push_back({g[e], -1});
      m.add_constraint(Family::linearization_gamma, std::move(t), Relation::less_equal, 0);
      for (std::size_t e = 0; e < E; ++e) {
        m.add_constraint(Family::linearization_gamma, {{g[e], 1}, {v_xe[a][e], -1}}, Relation::less_equal, 0);
        m.add_constraint(Family::linearization_gamma, {{g[e], 1}, {v_xe[b][e], -1}}, Relation::less_equal, 0);
        m.add_constraint(Family::linearization_gamma, {{v_xe[a][e], 1}, {v_xe[b][e], 1}, {g[e], -1}},
                         Relation::less_equal, 1);
      }
    }
  }

  // guard band against existing spectrum
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t e = 0; e < E; ++e) {
      if (!shape.on_route[p][e]) continue;
      for (int i = 0; i < F; ++i) {
        if (excluded[e][i]) m.add_constraint(Family::guard_band, {{v_xei[p][e][i], 1}}, Relation::equal, 0);
      }
    }
  }
  // guard band between paths sharing an arc: slots closer than gb + 1 are exclusive
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = a + 1; b < P; ++b) {
      const auto o = v_o[{a, b}];
      for (std::size_t e = 0; e < E; ++e) {
        if (!shape.shared(a, b, e)) continue;
        for (int i = 0; i < F; ++i) {
          if (!can_be_one(a, e, i)) continue;
          for (int j = std::max(0, i - gb); j <= std::min(F - 1, i + gb); ++j) {
            if (!can_be_one(b, e, j)) continue;
            m.add_constraint(Family::guard_band, {{v_xei[a][e][i], 1}, {v_xei[b][e][j], 1}, {o, 1}},
                             Relation::less_equal, 2);
          }
        }
      }
    }
  }

  // bandwidth
  {
    std::vector<Term> t;
    for (std::size_t p = 0; p < P; ++p) {
      for (int i = 0; i < F; ++i) t.push_back({v_y[p][i], 1});
    }
    m.add_constraint(Family::bandwidth, std::move(t), Relation::equal, req.demand);
  }

  // GVD_p = sum_e c_e z_{p,e}, with c_e the one-slot spread over arc e
  for (std::size_t p = 0; p < P; ++p) {
    std::vector<Term> t{{v_gvd[p], 1}};
    for (std::size_t e = 0; e < E; ++e) {
      if (shape.on_route[p][e] && shape.gvd_per_slot[e] != 0) t.push_back({v_z[p][e], -shape.gvd_per_slot[e]});
    }
    m.add_constraint(Family::gvd, std::move(t), Relation::equal, 0);
  }

  // z_{p,e} = T_p x_{p,e}
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t e = 0; e < E; ++e) {
      m.add_constraint(Family::linearization_z, {{v_z[p][e], 1}, {v_xe[p][e], -F}}, Relation::less_equal, 0);
      m.add_constraint(Family::linearization_z, {{v_z[p][e], 1}, {v_T[p], -1}}, Relation::less_equal, 0);
      m.add_constraint(Family::linearization_z, {{v_z[p][e], 1}, {v_T[p], -1}, {v_xe[p][e], -F}},
                       Relation::greater_equal, -static_cast<std::int64_t>(F));
    }
  }

  // path delay
  for (std::size_t p = 0; p < P; ++p) {
    std::vector<Term> t{{v_pd[p], 1}};
    for (std::size_t e = 0; e < E; ++e) {
      if (shape.on_route[p][e]) t.push_back({v_xe[p][e], -net.arc(shape.arcs[e]).delay_ps});
    }
    m.add_constraint(Family::delay, std::move(t), Relation::equal, 0);
  }

  // differential delay, relaxed by big-M when either path is unused
  {
    const Picoseconds big = *std::max_element(pd_max.begin(), pd_max.end()) +
                            2 * *std::max_element(gvd_max.begin(), gvd_max.end()) + 1;
    const std::int64_t M = params.max_differential_delay;
    for (std::size_t a = 0; a < P; ++a) {
      for (std::size_t b = a + 1; b < P; ++b) {
        for (int sign : {1, -1}) {
          m.add_constraint(Family::diff_delay,
                           {{v_pd[a], sign},
                            {v_pd[b], -sign},
                            {v_gvd[a], 1},
                            {v_gvd[b], 1},
                            {v_x[a], big},
                            {v_x[b], big}},
                           Relation::less_equal, M + 2 * big);
        }
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Assignments and checking

/// Variable values by name.
class Assignment {
 public:
  void set(std::string name, std::int64_t v) { values_[std::move(name)] = v; }
  std::optional<std::int64_t> get(std::string_view name) const {
    auto it = values_.find(std::string(name));
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t size() const { return values_.size(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::unordered_map<std::string, std::int64_t> values_;
};

struct Violation {
  Family family;
  std::optional<std::size_t> constraint;  // index into constraints(); empty for bound violations
  std::string name;                       // constraint or variable name
};

struct CheckResult {
  std::vector<Violation> violations;

  bool feasible() const { return violations.empty(); }
  bool violates(Family f) const {
    return std::any_of(violations.begin(), violations.end(), [f](const Violation& v) { return v.family == f; });
  }
};

inline std::vector<std::int64_t> resolve(const ConstraintSystem& model, const Assignment& a) {
  std::vector<std::int64_t> values;
  values.reserve(model.variables().size());
  for (const auto& v : model.variables()) {
    auto val = a.get(v.name);
    if (!val) throw MissingValue("no value for variable '" + v.name + "'");
    values.push_back(*val);
  }
  return values;
}

/// Evaluates every bound and constraint exactly.
inline CheckResult check_assignment(const ConstraintSystem& model, const Assignment& a) {
  const auto values = resolve(model, a);
  CheckResult r;
  const auto vars = model.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& v = vars[i];
    if (values[i] < v.lower || values[i] > v.upper) r.violations.push_back({bound_family(v.kind), std::nullopt, v.name});
  }
  const auto cons = model.constraints();
  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (!ConstraintSystem::satisfied(cons[i], values)) r.violations.push_back({cons[i].family, i, cons[i].name()});
  }
  return r;
}

class InfeasibleAssignment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objective value: the number of slot-arc incidences in use.
inline std::int64_t solution_cost(const ConstraintSystem& model, const Assignment& a) {
  const auto res = check_assignment(model, a);
  if (!res.feasible()) {
    throw InfeasibleAssignment("assignment violates " + res.violations.front().name);
  }
  const auto values = resolve(model, a);
  std::int64_t total = 0;
  for (const auto& t : model.objective()) total += t.coeff * values[t.var];
  return total;
}

/// A band placed on path slot `path` of the model.
struct PlacedBand {
  std::size_t path = 0;
  SlotRange range;
};

/// Derives every model variable from a set of bands, one band per path slot.
inline Assignment encode_assignment(const Network& net, std::span<const FiberPath> candidates,
                                    std::span<const PlacedBand> bands, const ModelParams& params) {
  const auto shape = detail::make_shape(net, candidates, params);
  const std::size_t P = shape.paths;
  const std::size_t E = shape.arcs.size();
  const int F = params.slots;

  std::vector<std::optional<SlotRange>> band_of(P);
  for (const auto& b : bands) {
    if (b.path >= P) throw ModelError("band refers to a path slot outside the model");
    if (band_of[b.path]) throw ModelError("two bands on one path slot");
    if (b.range.start < 0 || b.range.len < 1 || b.range.end() > F) throw ModelError("band outside the spectrum");
    band_of[b.path] = b.range;
  }
  auto used = [&](std::size_t p) { return band_of[p].has_value(); };
  auto in_band = [&](std::size_t p, int i) { return used(p) && i >= band_of[p]->start && i < band_of[p]->end(); };

  Assignment a;
  for (std::size_t p = 0; p < P; ++p) {
    const std::int64_t xp = used(p) ? 1 : 0;
    const std::int64_t T = used(p) ? band_of[p]->len : 0;
    a.set(names::x(p), xp);
    Picoseconds pd = 0;
    Picoseconds gvd = 0;
    for (std::size_t e = 0; e < E; ++e) {
      const std::int64_t xpe = shape.on_route[p][e] ? xp : 0;
      a.set(names::xe(p, shape.arcs[e]), xpe);
      a.set(names::z(p, shape.arcs[e]), T * xpe);
      for (int i = 0; i < F; ++i) a.set(names::xei(p, shape.arcs[e], i), xpe && in_band(p, i) ? 1 : 0);
      if (xpe) {
        pd += net.arc(shape.arcs[e]).delay_ps;
        gvd += shape.gvd_per_slot[e] * T;
      }
    }
    for (int i = 0; i < F; ++i) a.set(names::y(p, i), in_band(p, i) ? 1 : 0);
    a.set(names::T(p), T);
    a.set(names::pd(p), pd);
    a.set(names::gvd(p), gvd);
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t q = p + 1; q < P; ++q) {
      std::int64_t any = 0;
      for (std::size_t e = 0; e < E; ++e) {
        const std::int64_t g = (used(p) && used(q) && shape.shared(p, q, e)) ? 1 : 0;
        a.set(names::gamma(p, q, shape.arcs[e]), g);
        any |= g;
      }
      a.set(names::o(p, q), any);
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// LP text format (CPLEX dialect)

namespace detail {

inline void append_terms(std::string& out, std::span<const Term> terms, const ConstraintSystem& m,
                         std::size_t& col) {
  bool first = true;
  for (const auto& t : terms) {
    std::string piece;
    if (t.coeff < 0) {
      piece = "- ";
    } else if (!first) {
      piece = "+ ";
    }
    const std::int64_t mag = t.coeff < 0 ? -t.coeff : t.coeff;
    if (mag != 1) piece += std::to_string(mag) + " ";
    piece += m.variables()[t.var].name;
    if (col + piece.size() + 1 > 200) {
      out += "\n  ";
      col = 2;
    } else if (!first || col > 0) {
      out += ' ';
      ++col;
    }
    out += piece;
    col += piece.size();
    first = false;
  }
}

}  // namespace detail

/// CPLEX LP text. Every variable is listed in the Bounds section in
/// declaration order, which makes the text a faithful serialization.
inline std::string export_lp(const ConstraintSystem& m) {
  std::string out;
  out += "\\ routing and spectrum assignment, one request\n";
  out += "Minimize\n obj:";
  std::size_t col = 5;
  detail::append_terms(out, m.objective(), m, col);
  out += "\nSubject To\n";
  for (const auto& c : m.constraints()) {
    out += " " + c.name() + ":";
    col = out.size() - out.rfind('\n') - 1;
    detail::append_terms(out, c.terms, m, col);
    switch (c.rel) {
      case Relation::less_equal:
        out += " <= ";
        break;
      case Relation::equal:
        out += " = ";
        break;
      case Relation::greater_equal:
        out += " >= ";
        break;
    }
    out += std::to_string(c.rhs) + "\n";
  }
  out += "Bounds\n";
  for (const auto& v : m.variables()) {
    if (v.lower == v.upper) {
      out += " " + v.name + " = " + std::to_string(v.lower) + "\n";
    } else {
      out += " " + std::to_string(v.lower) + " <= " + v.name + " <= " + std::to_string(v.upper) + "\n";
    }
  }
  auto section = [&](const char* title, VarType type) {
    out += title;
    out += "\n";
    std::size_t width = 0;
    for (const auto& v : m.variables()) {
      if (v.type != type) continue;
      if (width + v.name.size() + 1 > 200) {
        out += "\n";
        width = 0;
      }
      out += " " + v.name;
      width += v.name.size() + 1;
    }
    out += "\n";
  };
  section("General", VarType::integer);
  section("Binary", VarType::binary);
  out += "End\n";
  return out;
}

class LpParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw LpParseError("bad integer '" + std::string(s) + "'");
  return v;
}

inline bool is_number(std::string_view s) {
  return !s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) ||
                        ((s[0] == '-' || s[0] == '+') && s.size() > 1));
}

}  // namespace detail

/// Reads text produced by export_lp back into a ConstraintSystem.
inline ConstraintSystem parse_lp(std::string_view text) {
  enum class Sec { none, objective, rows, bounds, general, binary, end };
  std::map<Sec, std::vector<std::string>> tokens;
  std::vector<std::string> bound_lines;
  Sec sec = Sec::none;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (auto bs = line.find('\\'); bs != std::string_view::npos) line = line.substr(0, bs);
    const auto tok = eon::detail::split_ws(line);
    if (tok.empty()) continue;
    std::string head;
    for (auto t : tok) head += std::string(t) + " ";
    head.pop_back();
    std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
    if (head == "minimize") { sec = Sec::objective; continue; }
    if (head == "subject to") { sec = Sec::rows; continue; }
    if (head == "bounds") { sec = Sec::bounds; continue; }
    if (head == "general" || head == "generals") { sec = Sec::general; continue; }
    if (head == "binary" || head == "binaries") { sec = Sec::binary; continue; }
    if (head == "end") { sec = Sec::end; continue; }
    if (sec == Sec::none || sec == Sec::end) throw LpParseError("content outside a section");
    if (sec == Sec::bounds) {
      bound_lines.emplace_back(line);
      continue;
    }
    for (auto t : tok) tokens[sec].emplace_back(t);
  }

  ConstraintSystem m;
  std::map<std::string, VarType> types;
  for (const auto& n : tokens[Sec::general]) types[n] = VarType::integer;
  for (const auto& n : tokens[Sec::binary]) types[n] = VarType::binary;

  for (const auto& line : bound_lines) {
    const auto tok = eon::detail::split_ws(line);
    std::string name;
    std::int64_t lo = 0, hi = 0;
    if (tok.size() == 3 && tok[1] == "=") {
      name = tok[0];
      lo = hi = detail::parse_int(tok[2]);
    } else if (tok.size() == 5 && tok[1] == "<=" && tok[3] == "<=") {
      name = tok[2];
      lo = detail::parse_int(tok[0]);
      hi = detail::parse_int(tok[4]);
    } else {
      throw LpParseError("unsupported bound line '" + line + "'");
    }
    const auto kind = names::kind_of(name);
    if (!kind) throw LpParseError("unrecognised variable '" + name + "'");
    auto t = types.find(name);
    if (t == types.end()) throw LpParseError("variable '" + name + "' has no type section entry");
    m.add_variable(name, t->second, *kind, lo, hi);
  }

  auto read_terms = [&](const std::vector<std::string>& tk, std::size_t& i, bool stop_at_relation) {
    std::vector<Term> terms;
    std::int64_t sign = 1;
    std::int64_t coeff = 1;
    while (i < tk.size()) {
      const std::string& s = tk[i];
      if (stop_at_relation && (s == "<=" || s == ">=" || s == "=" || s == "=<" || s == "=>")) break;
      if (!stop_at_relation && s.back() == ':') break;
      ++i;
      if (s == "+") {
        sign = 1;
      } else if (s == "-") {
        sign = -1;
      } else if (detail::is_number(s)) {
        coeff = detail::parse_int(s);
      } else {
        terms.push_back({m.index(s), sign * coeff});
        sign = 1;
        coeff = 1;
      }
    }
    return terms;
  };

  {
    const auto& tk = tokens[Sec::objective];
    std::size_t i = 0;
    if (!tk.empty() && tk[0].back() == ':') ++i;
    m.set_objective(read_terms(tk, i, false));
  }
  {
    const auto& tk = tokens[Sec::rows];
    std::size_t i = 0;
    while (i < tk.size()) {
      const std::string label = tk[i++];
      if (label.back() != ':') throw LpParseError("constraint without a name near '" + label + "'");
      const std::string name = label.substr(0, label.size() - 1);
      const auto us = name.rfind('_');
      if (us == std::string::npos) throw LpParseError("constraint name without family prefix: " + name);
      const auto prefix = std::string_view(name).substr(0, us);
      auto fam = std::find(kFamilyPrefix.begin(), kFamilyPrefix.end(), prefix);
      if (fam == kFamilyPrefix.end()) throw LpParseError("unknown constraint family in " + name);
      Constraint c;
      c.family = static_cast<Family>(fam - kFamilyPrefix.begin());
      c.ordinal = static_cast<std::uint32_t>(detail::parse_int(std::string_view(name).substr(us + 1)));
      c.terms = read_terms(tk, i, true);
      if (i + 1 >= tk.size()) throw LpParseError("truncated constraint " + name);
      const std::string& rel = tk[i++];
      c.rel = rel == "=" ? Relation::equal
              : (rel == "<=" || rel == "=<") ? Relation::less_equal
                                             : Relation::greater_equal;
      c.rhs = detail::parse_int(tk[i++]);
      m.add_constraint(std::move(c));
    }
  }
  return m;
}

}  // namespace eon::ilp
