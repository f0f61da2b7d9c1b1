#pragma once

// Declarative experiment grids: a flat `key = value` file, expansion into
// cells, concurrent execution and CSV output.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "eon/heuristic.hpp"
#include "eon/physics.hpp"
#include "eon/sim.hpp"
#include "eon/topology.hpp"

namespace eon::scenario {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return std::string(s);
}

inline double to_double(std::string_view s, const std::string& what) {
  s = trim(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw ScenarioError("bad number '" + std::string(s) + "' for " + what);
  }
  return v;
}

inline std::int64_t to_int(std::string_view s, const std::string& what) {
  s = trim(s);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ScenarioError("bad integer '" + std::string(s) + "' for " + what);
  return v;
}

/// Fixed-point text without locale influence.
inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Value syntax

/// Durations carry a unit: ps, ns, us (or µs), ms or s. A bare 0 is allowed.
inline Picoseconds parse_duration(std::string_view text) {
  const auto s = detail::trim(text);
  static constexpr std::pair<std::string_view, double> kUnits[] = {
      {"ps", 1.0}, {"ns", 1e3}, {"us", 1e6}, {"\xC2\xB5s", 1e6}, {"ms", 1e9}, {"s", 1e12}};
  for (const auto& [suffix, scale] : kUnits) {
    if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
      const double v = detail::to_double(s.substr(0, s.size() - suffix.size()), "duration");
      if (v < 0.0) throw ScenarioError("negative duration '" + std::string(s) + "'");
      return round_half_up(v * scale);
    }
  }
  if (s == "0") return 0;
  throw ScenarioError("duration needs a unit (ps, ns, us, ms, s): '" + std::string(s) + "'");
}

/// Shortest exact rendering in the largest unit that divides the value.
inline std::string format_duration(Picoseconds ps) {
  if (ps == 0) return "0";
  static constexpr std::pair<Picoseconds, const char*> kUnits[] = {
      {1'000'000'000'000, "s"}, {1'000'000'000, "ms"}, {1'000'000, "us"}, {1'000, "ns"}, {1, "ps"}};
  for (const auto& [scale, unit] : kUnits) {
    if (ps % scale == 0) return std::to_string(ps / scale) + unit;
  }
  return std::to_string(ps) + "ps";
}

/// "10" is a fixed demand, "1-4" uniform over the integer range.
inline sim::DemandDistribution parse_demand(std::string_view text) {
  const auto s = detail::trim(text);
  const auto dash = s.find('-');
  sim::DemandDistribution d;
  if (dash == std::string_view::npos) {
    d.lo = d.hi = static_cast<int>(detail::to_int(s, "demand"));
  } else {
    d.lo = static_cast<int>(detail::to_int(s.substr(0, dash), "demand"));
    d.hi = static_cast<int>(detail::to_int(s.substr(dash + 1), "demand"));
  }
  if (d.lo < 1 || d.hi < d.lo) throw ScenarioError("bad demand '" + std::string(s) + "'");
  return d;
}

inline std::string format_demand(const sim::DemandDistribution& d) {
  return d.deterministic() ? std::to_string(d.lo) : std::to_string(d.lo) + "-" + std::to_string(d.hi);
}

/// A named admission policy: mode plus differential delay bound.
struct PolicySpec {
  std::string label;
  Mode mode = Mode::parallel;
  Picoseconds max_differential_delay = milliseconds_to_ps(128);

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

/// Presets st, pt (alias pt-1), pt-1 (M = 128 ms), pt-2 (M = 250 us), or pt@<duration>.
inline PolicySpec parse_policy(std::string_view text) {
  const std::string s = detail::unquote(text);
  if (s == "st") return {"st", Mode::single_path, milliseconds_to_ps(128)};
  if (s == "pt" || s == "pt-1") return {s, Mode::parallel, milliseconds_to_ps(128)};
  if (s == "pt-2") return {s, Mode::parallel, microseconds_to_ps(250)};
  if (s.rfind("pt@", 0) == 0) {
    const auto m = parse_duration(std::string_view(s).substr(3));
    return {"pt@" + format_duration(m), Mode::parallel, m};
  }
  throw ScenarioError("unknown policy '" + s + "' (st, pt, pt-1, pt-2, pt@<duration>)");
}

// ---------------------------------------------------------------------------
// Scenario

struct Scenario {
  std::string topology;  // resolved path
  TopologyConfig topo{};
  FiberParams fiber{};

  std::vector<PolicySpec> policies{parse_policy("pt-1")};
  std::vector<int> ks{30};
  std::vector<int> gbs{0};
  std::vector<double> loads;
  std::vector<sim::DemandDistribution> demands{sim::DemandDistribution::fixed(10)};
  std::uint64_t seed = 1;   // first seed
  std::size_t seeds = 1;    // seeds seed .. seed + seeds - 1
  std::size_t requests = 20'000;
  double warmup = 0.1;

  // probe mode
  PolicySpec background = parse_policy("pt-1");
  int background_k = 30;
  sim::DemandDistribution probe_demand{4, 6};
  std::size_t probes = 50;
  std::size_t interval = 20;

  std::string output;  // empty: caller decides

  void set_speed(double km_s) {
    topo.propagation_speed_km_s = km_s;
    fiber.propagation_speed_km_s = km_s;
  }

  /// Rejects any grid that cannot run, before anything is executed.
  void validate() const {
    if (topology.empty()) throw ScenarioError("no topology given");
    if (topo.slots_per_link < 1) throw ScenarioError("slots must be >= 1");
    fiber.validate();
    if (policies.empty() || ks.empty() || gbs.empty() || loads.empty() || demands.empty()) {
      throw ScenarioError("every grid axis needs at least one value (policies, k, gb, load, tr)");
    }
    if (seeds < 1) throw ScenarioError("seeds must be >= 1");
    for (int k : ks) {
      if (k < 1) throw ScenarioError("k must be >= 1");
    }
    for (int gb : gbs) {
      if (gb < 0) throw ScenarioError("gb must be >= 0");
    }
    for (double l : loads) {
      if (!(l > 0.0)) throw ScenarioError("load must be positive");
    }
    for (const auto& d : demands) {
      if (d.hi > topo.slots_per_link) {
        throw ScenarioError("tr " + format_demand(d) + " exceeds " + std::to_string(topo.slots_per_link) + " slots");
      }
    }
    if (probe_demand.hi > topo.slots_per_link) throw ScenarioError("probe_tr exceeds the slot count");
    if (requests < 1) throw ScenarioError("requests must be >= 1");
    if (warmup < 0.0 || warmup >= 1.0) throw ScenarioError("warmup must be in [0, 1)");
    if (background_k < 1) throw ScenarioError("background_k must be >= 1");
    if (probes < 1 || interval < 1) throw ScenarioError("probes and interval must be >= 1");
  }

  std::vector<std::uint64_t> seed_list() const {
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < seeds; ++i) out.push_back(seed + i);
    return out;
  }

  int max_demand() const {
    int m = 1;
    for (const auto& d : demands) m = std::max(m, d.hi);
    return m;
  }
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view value) {
  value = trim(value);
  std::vector<std::string> out;
  if (value.empty()) return out;
  if (value.front() == '[') {
    if (value.back() != ']') throw ScenarioError("unterminated list");
    value = value.substr(1, value.size() - 2);
    std::size_t i = 0;
    while (i <= value.size()) {
      auto comma = value.find(',', i);
      if (comma == std::string_view::npos) comma = value.size();
      auto item = trim(value.substr(i, comma - i));
      if (!item.empty()) out.push_back(unquote(item));
      i = comma + 1;
    }
    return out;
  }
  out.push_back(unquote(value));
  return out;
}

template <class T, class F>
std::vector<T> map_list(const std::vector<std::string>& items, F&& f) {
  std::vector<T> out;
  for (const auto& s : items) out.push_back(f(s));
  return out;
}

}  // namespace detail

/// Applies one `key = value` setting. Relative topology paths resolve against `base`.
inline void apply_setting(Scenario& sc, const std::string& key, std::string_view value,
                          const std::filesystem::path& base = {}) {
  const auto items = detail::split_list(value);
  if (items.empty()) throw ScenarioError("empty value for '" + key + "'");
  auto scalar = [&]() -> const std::string& {
    if (items.size() != 1) throw ScenarioError("'" + key + "' takes a single value");
    return items.front();
  };
  auto as_int = [&](const std::string& s) { return static_cast<int>(detail::to_int(s, key)); };

  if (key == "topology") {
    std::filesystem::path p = scalar();
    if (p.is_relative() && !base.empty()) p = base / p;
    sc.topology = p.lexically_normal().string();
  } else if (key == "slots") {
    sc.topo.slots_per_link = as_int(scalar());
  } else if (key == "speed_km_s") {
    sc.set_speed(detail::to_double(scalar(), key));
  } else if (key == "dispersion_ps_nm_km") {
    sc.fiber.dispersion_ps_per_nm_km = detail::to_double(scalar(), key);
  } else if (key == "center_thz") {
    sc.fiber.central_frequency_thz = detail::to_double(scalar(), key);
  } else if (key == "slot_ghz") {
    sc.fiber.slot_width_ghz = detail::to_double(scalar(), key);
  } else if (key == "slot_nm") {
    sc.fiber.slot_width_nm_override = detail::to_double(scalar(), key);
  } else if (key == "policies") {
    sc.policies = detail::map_list<PolicySpec>(items, [](const std::string& s) { return parse_policy(s); });
  } else if (key == "k") {
    sc.ks = detail::map_list<int>(items, as_int);
  } else if (key == "gb") {
    sc.gbs = detail::map_list<int>(items, as_int);
  } else if (key == "load") {
    sc.loads = detail::map_list<double>(items, [&](const std::string& s) { return detail::to_double(s, key); });
  } else if (key == "tr") {
    sc.demands = detail::map_list<sim::DemandDistribution>(items, [](const std::string& s) { return parse_demand(s); });
  } else if (key == "seed") {
    sc.seed = static_cast<std::uint64_t>(detail::to_int(scalar(), key));
  } else if (key == "seeds") {
    sc.seeds = static_cast<std::size_t>(detail::to_int(scalar(), key));
  } else if (key == "requests") {
    sc.requests = static_cast<std::size_t>(detail::to_int(scalar(), key));
  } else if (key == "warmup") {
    sc.warmup = detail::to_double(scalar(), key);
  } else if (key == "background") {
    sc.background = parse_policy(scalar());
  } else if (key == "background_k") {
    sc.background_k = as_int(scalar());
  } else if (key == "probe_tr") {
    sc.probe_demand = parse_demand(scalar());
  } else if (key == "probes") {
    sc.probes = static_cast<std::size_t>(detail::to_int(scalar(), key));
  } else if (key == "interval") {
    sc.interval = static_cast<std::size_t>(detail::to_int(scalar(), key));
  } else if (key == "output") {
    std::filesystem::path p = scalar();
    if (p.is_relative() && !base.empty()) p = base / p;
    sc.output = p.lexically_normal().string();
  } else {
    throw ScenarioError("unknown key '" + key + "'");
  }
}

/// Parses scenario text. Errors name the offending line.
inline Scenario parse_scenario(std::string_view text, const std::filesystem::path& base = {}) {
  Scenario sc;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ScenarioError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    try {
      apply_setting(sc, key, line.substr(eq + 1), base);
    } catch (const ScenarioError& e) {
      throw ScenarioError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const PhysicsError& e) {
      throw ScenarioError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return sc;
}

inline Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), path.parent_path());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Grid execution

/// One simulation cell.
struct Cell {
  double load = 0.0;
  PolicySpec policy;
  int k = 0;
  int gb = 0;
  sim::DemandDistribution demand;
  std::uint64_t seed = 0;

  PolicyParams params() const {
    PolicyParams p;
    p.mode = policy.mode;
    p.k = k;
    p.guard_band = gb;
    p.max_differential_delay = policy.max_differential_delay;
    return p;
  }
};

/// Cells in the order loads x policies x k x gb x tr x seeds.
inline std::vector<Cell> simulate_cells(const Scenario& sc) {
  std::vector<Cell> cells;
  for (double load : sc.loads) {
    for (const auto& pol : sc.policies) {
      for (int k : sc.ks) {
        for (int gb : sc.gbs) {
          for (const auto& d : sc.demands) {
            for (auto seed : sc.seed_list()) cells.push_back({load, pol, k, gb, d, seed});
          }
        }
      }
    }
  }
  return cells;
}

inline sim::TrafficConfig traffic_for(const Scenario& sc, double load, const sim::DemandDistribution& d,
                                      std::uint64_t seed) {
  sim::TrafficConfig t;
  t.arrival_rate = 1.0;
  t.mean_holding = load;
  t.demand = d;
  t.requests = sc.requests;
  t.seed = seed;
  t.warmup_fraction = sc.warmup;
  return t;
}

/// Writes `content` to `path` via a temporary file and rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ScenarioError("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw ScenarioError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

/// Runs f(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure by index.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct CellResult {
  Cell cell;
  sim::Metrics metrics;
};

inline std::string metrics_header(int hist_columns) {
  std::string h = "load,policy,mode,k,gb,m_ps,tr,seed,offered,blocked,served,blocking_prob,agg_ratio";
  for (int i = 1; i <= hist_columns; ++i) h += ",hist_" + std::to_string(i);
  return h + "\n";
}

inline std::string metrics_row(const CellResult& r, int hist_columns) {
  const auto& c = r.cell;
  const auto& m = r.metrics;
  std::string row = detail::number(c.load) + "," + c.policy.label + "," + to_string(c.policy.mode) + "," +
                    std::to_string(c.k) + "," + std::to_string(c.gb) + "," +
                    std::to_string(c.policy.max_differential_delay) + "," + format_demand(c.demand) + "," +
                    std::to_string(c.seed) + "," + std::to_string(m.offered) + "," + std::to_string(m.blocked) + "," +
                    std::to_string(m.served) + "," + detail::fixed(m.blocking_probability(), 6) + "," +
                    detail::fixed(m.aggregation_ratio(), 6);
  for (int i = 0; i < hist_columns; ++i) {
    row += "," + std::to_string(static_cast<std::size_t>(i) < m.histogram.size() ? m.histogram[i] : 0);
  }
  return row + "\n";
}

inline std::string path_dist_rows(const CellResult& r) {
  const auto& c = r.cell;
  std::string out;
  for (std::size_t i = 0; i < r.metrics.histogram.size(); ++i) {
    const auto count = r.metrics.histogram[i];
    const double frac = r.metrics.served == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(r.metrics.served);
    out += detail::number(c.load) + "," + c.policy.label + "," + std::to_string(c.k) + "," + std::to_string(c.gb) + "," +
           std::to_string(c.policy.max_differential_delay) + "," + format_demand(c.demand) + "," +
           std::to_string(c.seed) + "," + std::to_string(i + 1) + "," + std::to_string(count) + "," +
           detail::fixed(frac, 6) + "\n";
  }
  return out;
}

inline constexpr std::string_view kPathDistHeader = "load,policy,k,gb,m_ps,tr,seed,paths,count,fraction\n";

/// Runs every simulate cell, writes cells/cell_<i>.csv as each finishes, then
/// metrics.csv and path_dist.csv in grid order.
inline std::vector<CellResult> run_simulate(const Scenario& sc, const Network& net, const std::filesystem::path& out_dir,
                                            std::size_t jobs, const sim::RunOptions& options = {}) {
  sc.validate();
  const auto cells = simulate_cells(sc);
  const int hist = sc.max_demand();
  std::filesystem::create_directories(out_dir / "cells");
  std::vector<CellResult> results(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const auto& c = cells[i];
    results[i] = {c, sim::run(net, traffic_for(sc, c.load, c.demand, c.seed), c.params(), options)};
    write_atomic(out_dir / "cells" / ("cell_" + std::to_string(i) + ".csv"),
                 metrics_header(hist) + metrics_row(results[i], hist));
  });
  std::string metrics = metrics_header(hist);
  std::string dist(kPathDistHeader);
  for (const auto& r : results) {
    metrics += metrics_row(r, hist);
    dist += path_dist_rows(r);
  }
  write_atomic(out_dir / "metrics.csv", metrics);
  write_atomic(out_dir / "path_dist.csv", dist);
  return results;
}

/// One probe row: a probe policy evaluated against one background run.
struct ProbeRow {
  double load = 0.0;
  PolicySpec policy;
  int k = 0;
  int gb = 0;
  std::uint64_t seed = 0;
  std::size_t probes = 0;
  std::uint64_t blocked = 0;
  sim::Metrics background;

  double blocking() const { return probes == 0 ? 0.0 : static_cast<double>(blocked) / static_cast<double>(probes); }
};

inline constexpr std::string_view kProbeHeader =
    "load,background,bg_k,policy,k,gb,m_ps,seed,probes,blocked,blocking_prob,bg_offered,bg_blocked\n";

/// Probe grid: one background run per (load, gb, seed); every policy x k
/// combination is evaluated on the same snapshots. Writes probe.csv.
inline std::vector<ProbeRow> run_probe(const Scenario& sc, const Network& net, const std::filesystem::path& out_dir,
                                       std::size_t jobs, const sim::RunOptions& options = {}) {
  sc.validate();
  struct Run {
    double load;
    int gb;
    std::uint64_t seed;
  };
  std::vector<Run> runs;
  for (double load : sc.loads) {
    for (int gb : sc.gbs) {
      for (auto seed : sc.seed_list()) runs.push_back({load, gb, seed});
    }
  }
  std::vector<std::pair<PolicySpec, int>> probes;
  for (const auto& p : sc.policies) {
    for (int k : sc.ks) probes.emplace_back(p, k);
  }

  std::filesystem::create_directories(out_dir / "cells");
  std::vector<std::vector<ProbeRow>> rows(runs.size());
  auto render = [&](const ProbeRow& r) {
    return detail::number(r.load) + "," + sc.background.label + "," + std::to_string(sc.background_k) + "," +
           r.policy.label + "," + std::to_string(r.k) + "," + std::to_string(r.gb) + "," +
           std::to_string(r.policy.max_differential_delay) + "," + std::to_string(r.seed) + "," +
           std::to_string(r.probes) + "," + std::to_string(r.blocked) + "," + detail::fixed(r.blocking(), 6) + "," +
           std::to_string(r.background.offered) + "," + std::to_string(r.background.blocked) + "\n";
  };
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    const auto& run = runs[i];
    sim::ProbeConfig cfg;
    cfg.traffic = traffic_for(sc, run.load, sc.demands.front(), run.seed);
    cfg.background.mode = sc.background.mode;
    cfg.background.k = sc.background_k;
    cfg.background.guard_band = run.gb;
    cfg.background.max_differential_delay = sc.background.max_differential_delay;
    for (const auto& [pol, k] : probes) {
      PolicyParams p;
      p.mode = pol.mode;
      p.k = k;
      p.guard_band = run.gb;
      p.max_differential_delay = pol.max_differential_delay;
      cfg.policies.push_back(p);
    }
    cfg.probe_demand = sc.probe_demand;
    cfg.probes = sc.probes;
    cfg.interval = sc.interval;
    const auto res = sim::probe(net, cfg, options);
    std::string text(kProbeHeader);
    for (std::size_t j = 0; j < probes.size(); ++j) {
      rows[i].push_back({run.load, probes[j].first, probes[j].second, run.gb, run.seed, res.probes, res.blocked[j],
                         res.background});
      text += render(rows[i].back());
    }
    write_atomic(out_dir / "cells" / ("probe_" + std::to_string(i) + ".csv"), text);
  });
  std::string text(kProbeHeader);
  std::vector<ProbeRow> flat;
  for (const auto& group : rows) {
    for (const auto& r : group) {
      text += render(r);
      flat.push_back(r);
    }
  }
  write_atomic(out_dir / "probe.csv", text);
  return flat;
}

}  // namespace eon::scenario
