// eonsim: experiment driver for the elastic optical network library.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eon/eon.hpp"

namespace fs = std::filesystem;
using namespace eon;

namespace {

/// Flags that override scenario values. Unset options leave the file value alone.
struct Overrides {
  std::string topology;
  std::optional<int> slots;
  std::vector<std::string> policies;
  std::string mode;
  std::vector<double> max_dd_us;
  std::vector<std::string> max_dd;
  std::vector<int> ks;
  std::vector<int> gbs;
  std::vector<double> loads;
  std::vector<std::string> trs;
  std::optional<std::size_t> seeds;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> requests;
  std::optional<double> warmup;
  std::string out;
  std::size_t jobs = 1;
  bool audit = false;

  // probe only
  std::string background;
  std::optional<int> background_k;
  std::string probe_tr;
  std::optional<std::size_t> probes;
  std::optional<std::size_t> interval;
};

void add_grid_options(CLI::App* cmd, Overrides& o, std::string& scenario_path) {
  cmd->add_option("scenario", scenario_path, "Scenario file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--topology", o.topology, "Topology file");
  cmd->add_option("--slots", o.slots, "Frequency slots per link");
  cmd->add_option("--policy", o.policies, "Policies: st, pt, pt-1, pt-2, pt@<duration>")->delimiter(',');
  cmd->add_option("--mode", o.mode, "Admission mode")->check(CLI::IsMember({"st", "pt"}));
  cmd->add_option("--max-dd-us", o.max_dd_us, "Differential delay bound M in microseconds")->delimiter(',');
  cmd->add_option("--max-dd", o.max_dd, "Differential delay bound M with unit, e.g. 250us or 128ms")->delimiter(',');
  cmd->add_option("--k", o.ks, "Fiber paths per request")->delimiter(',');
  cmd->add_option("--gb", o.gbs, "Guard band in slots")->delimiter(',');
  cmd->add_option("--load", o.loads, "Offered load in Erlang")->delimiter(',');
  cmd->add_option("--tr", o.trs, "Demand in slots: N or LO-HI")->delimiter(',');
  cmd->add_option("--seeds", o.seeds, "Number of seeds");
  cmd->add_option("--seed", o.seed, "First seed");
  cmd->add_option("--requests", o.requests, "Requests per run");
  cmd->add_option("--warmup", o.warmup, "Fraction of requests discarded as warm-up");
  cmd->add_option("--out", o.out, "Output directory (default: $EONSIM_OUT or ./eonsim-out)");
  cmd->add_option("--jobs", o.jobs, "Cells run concurrently")->check(CLI::PositiveNumber);
  cmd->add_flag("--audit", o.audit, "Audit spectrum state at every event (slow)");
}

std::string join(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s + "]";
}

template <class T>
std::string join_numbers(const std::vector<T>& v) {
  std::vector<std::string> s;
  for (const auto& x : v) {
    std::ostringstream os;
    os << x;
    s.push_back(os.str());
  }
  return join(s);
}

scenario::Scenario build_scenario(const std::string& scenario_path, const Overrides& o) {
  scenario::Scenario sc = scenario_path.empty() ? scenario::Scenario{} : scenario::load_scenario_file(scenario_path);
  auto set = [&](const char* key, const std::string& value) { scenario::apply_setting(sc, key, value); };
  if (!o.topology.empty()) set("topology", o.topology);
  if (o.slots) set("slots", std::to_string(*o.slots));
  if (!o.policies.empty()) set("policies", join(o.policies));

  std::vector<Picoseconds> bounds;
  for (double us : o.max_dd_us) {
    if (us < 0.0) throw scenario::ScenarioError("--max-dd-us must be >= 0");
    bounds.push_back(microseconds_to_ps(us));
  }
  for (const auto& d : o.max_dd) bounds.push_back(scenario::parse_duration(d));
  if (!o.mode.empty()) {
    if (!o.policies.empty()) throw scenario::ScenarioError("--mode and --policy are mutually exclusive");
    sc.policies.clear();
    if (o.mode == "st") {
      sc.policies.push_back(scenario::parse_policy("st"));
    } else {
      if (bounds.empty()) bounds.push_back(milliseconds_to_ps(128));
      for (auto m : bounds) sc.policies.push_back(scenario::parse_policy("pt@" + scenario::format_duration(m)));
    }
  } else if (!bounds.empty()) {
    // apply the bounds to every parallel policy
    std::vector<scenario::PolicySpec> out;
    for (const auto& p : sc.policies) {
      if (p.mode == Mode::single_path) {
        out.push_back(p);
        continue;
      }
      for (auto m : bounds) out.push_back(scenario::parse_policy("pt@" + scenario::format_duration(m)));
    }
    sc.policies = out;
  }
  if (!o.ks.empty()) set("k", join_numbers(o.ks));
  if (!o.gbs.empty()) set("gb", join_numbers(o.gbs));
  if (!o.loads.empty()) set("load", join_numbers(o.loads));
  if (!o.trs.empty()) set("tr", join(o.trs));
  if (o.seeds) set("seeds", std::to_string(*o.seeds));
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.requests) set("requests", std::to_string(*o.requests));
  if (o.warmup) sc.warmup = *o.warmup;
  if (!o.background.empty()) set("background", o.background);
  if (o.background_k) set("background_k", std::to_string(*o.background_k));
  if (!o.probe_tr.empty()) set("probe_tr", o.probe_tr);
  if (o.probes) set("probes", std::to_string(*o.probes));
  if (o.interval) set("interval", std::to_string(*o.interval));
  if (!o.out.empty()) sc.output = o.out;
  if (sc.output.empty()) {
    const char* env = std::getenv("EONSIM_OUT");
    sc.output = env && *env ? env : "eonsim-out";
  }
  sc.validate();
  return sc;
}

Network load_network(const scenario::Scenario& sc) {
  if (!fs::exists(sc.topology)) throw scenario::ScenarioError("cannot read topology " + sc.topology);
  return load_topology_file(sc.topology, sc.topo);
}

/// Mean blocking per grid point over seeds, with a 95% interval when there are >= 2 seeds.
void print_simulate_summary(const std::vector<scenario::CellResult>& results) {
  struct Key {
    double load;
    std::string policy;
    int k;
    int gb;
    std::string tr;
    auto operator<=>(const Key&) const = default;
  };
  std::vector<Key> order;
  std::map<Key, std::vector<const sim::Metrics*>> groups;
  for (const auto& r : results) {
    Key key{r.cell.load, r.cell.policy.label, r.cell.k, r.cell.gb, scenario::format_demand(r.cell.demand)};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r.metrics);
  }
  std::printf("%8s  %-10s %4s %3s %6s %5s  %-19s %9s\n", "load", "policy", "k", "gb", "tr", "seeds", "blocking", "agg");
  for (const auto& key : order) {
    const auto& ms = groups[key];
    std::vector<double> b, a;
    for (const auto* m : ms) {
      b.push_back(m->blocking_probability());
      a.push_back(m->aggregation_ratio());
    }
    std::string blocking;
    double agg = 0.0;
    for (double x : a) agg += x / static_cast<double>(a.size());
    if (b.size() >= 2) {
      const auto ci = sim::confidence_interval(b);
      blocking = scenario::detail::fixed(ci.mean, 5) + " +/- " + scenario::detail::fixed(ci.half_width, 5);
    } else {
      blocking = scenario::detail::fixed(b.front(), 5);
    }
    std::printf("%8s  %-10s %4d %3d %6s %5zu  %-19s %9s\n", scenario::detail::number(key.load).c_str(),
                key.policy.c_str(), key.k, key.gb, key.tr.c_str(), ms.size(), blocking.c_str(),
                scenario::detail::fixed(agg, 4).c_str());
  }
}

void print_probe_summary(const std::vector<scenario::ProbeRow>& rows) {
  struct Key {
    double load;
    std::string policy;
    int k;
    int gb;
    auto operator<=>(const Key&) const = default;
  };
  std::vector<Key> order;
  std::map<Key, std::pair<std::uint64_t, std::uint64_t>> sums;
  for (const auto& r : rows) {
    Key key{r.load, r.policy.label, r.k, r.gb};
    if (!sums.count(key)) order.push_back(key);
    sums[key].first += r.blocked;
    sums[key].second += r.probes;
  }
  std::printf("%8s  %-10s %4s %3s %8s %9s\n", "load", "policy", "k", "gb", "probes", "blocking");
  for (const auto& key : order) {
    const auto [blocked, probes] = sums[key];
    std::printf("%8s  %-10s %4d %3d %8llu %9s\n", scenario::detail::number(key.load).c_str(), key.policy.c_str(), key.k,
                key.gb, static_cast<unsigned long long>(probes),
                scenario::detail::fixed(probes ? static_cast<double>(blocked) / static_cast<double>(probes) : 0.0, 5)
                    .c_str());
  }
}

int cmd_simulate(const std::string& path, const Overrides& o) {
  const auto sc = build_scenario(path, o);
  const auto net = load_network(sc);
  sim::RunOptions opt;
  opt.fiber = sc.fiber;
  opt.audit = o.audit;
  const auto results = scenario::run_simulate(sc, net, sc.output, o.jobs, opt);
  print_simulate_summary(results);
  std::printf("wrote %s\n", (fs::path(sc.output) / "metrics.csv").string().c_str());
  return 0;
}

int cmd_probe(const std::string& path, const Overrides& o) {
  const auto sc = build_scenario(path, o);
  const auto net = load_network(sc);
  sim::RunOptions opt;
  opt.fiber = sc.fiber;
  opt.audit = o.audit;
  const auto rows = scenario::run_probe(sc, net, sc.output, o.jobs, opt);
  print_probe_summary(rows);
  std::printf("wrote %s\n", (fs::path(sc.output) / "probe.csv").string().c_str());
  return 0;
}

struct ExportOptions {
  std::string topology;
  int slots = 16;
  int paths = 4;
  int demand = 4;
  int gb = 0;
  std::string max_dd = "128ms";
  bool gvd = false;
  std::string source;
  std::string dest;
  std::string out;
};

int cmd_export_ilp(const ExportOptions& o) {
  const auto net = load_topology_file(o.topology, TopologyConfig{2e5, o.slots});
  if (o.paths < 1) throw scenario::ScenarioError("--paths must be >= 1");
  if (o.demand < 1 || o.demand > o.slots) throw scenario::ScenarioError("--tr must be in [1, slots]");
  ilp::ModelParams mp;
  mp.slots = o.slots;
  mp.guard_band = o.gb;
  mp.max_differential_delay = scenario::parse_duration(o.max_dd);
  mp.include_gvd = o.gvd;

  auto model_for = [&](NodeId s, NodeId d) -> std::optional<ilp::ConstraintSystem> {
    Request r;
    r.source = s;
    r.destination = d;
    r.demand = o.demand;
    const auto cands = compute_fiber_paths(net, s, d, o.paths);
    if (cands.empty()) return std::nullopt;
    return ilp::build_model(net, r, cands, mp);
  };

  std::optional<ilp::ConstraintSystem> chosen;
  if (!o.source.empty() || !o.dest.empty()) {
    if (o.source.empty() || o.dest.empty()) throw scenario::ScenarioError("--source and --dest go together");
    chosen = model_for(net.node(o.source), net.node(o.dest));
    if (!chosen) throw scenario::ScenarioError("no path between " + o.source + " and " + o.dest);
  }

  std::size_t pairs = 0;
  std::size_t y_total = 0;
  std::size_t y_first = 0;
  for (std::uint32_t s = 0; s < net.node_count(); ++s) {
    for (std::uint32_t d = 0; d < net.node_count(); ++d) {
      if (s == d) continue;
      auto m = model_for(NodeId{s}, NodeId{d});
      if (!m) continue;
      const auto y = m->count(ilp::VarKind::path_slot);
      if (pairs == 0) {
        y_first = y;
        if (!chosen) chosen = std::move(m);
      }
      y_total += y;
      ++pairs;
    }
  }
  if (!chosen) throw scenario::ScenarioError("no connected node pair");

  std::printf("y variables per request: %zu\n", y_first);
  std::printf("node pairs: %zu\n", pairs);
  std::printf("y variables over all pairs: %zu\n", y_total);
  std::printf("selected request: %zu variables, %zu constraints\n", chosen->variables().size(),
              chosen->constraints().size());
  for (std::size_t f = 0; f < ilp::kFamilyCount; ++f) {
    std::printf("  %-22s %zu\n", std::string(ilp::kFamilyName[f]).c_str(),
                chosen->count(static_cast<ilp::Family>(f)));
  }
  if (!o.out.empty()) {
    scenario::write_atomic(o.out, ilp::export_lp(*chosen));
    std::printf("wrote %s\n", o.out.c_str());
  }
  return 0;
}

/// Cross-validates oracle, model checker and heuristic on random instances.
/// With an export directory, also writes each instance's program and the
/// oracle optimum so that an external MILP solver can confirm it.
int cmd_oracle_check(std::uint64_t seed, std::size_t instances, const std::string& export_dir) {
  sim::Rng rng(seed, sim::Stream::probe);
  crosscheck::Report rep;
  std::string expected = "instance,cost\n";
  if (!export_dir.empty()) fs::create_directories(export_dir);
  for (std::size_t i = 0; i < instances; ++i) {
    const auto in = crosscheck::random_instance(rng);
    crosscheck::check_instance(in, i, rep);
    if (export_dir.empty()) continue;

    oracle::OracleParams op;
    op.guard_band = in.guard_band;
    op.max_differential_delay = in.max_differential_delay;
    op.k = in.k;
    const auto best = oracle::exact_solve(in.net, in.state, in.req, op);
    const auto routes = oracle::enumerate_paths(in.net, in.req.source, in.req.destination, static_cast<std::size_t>(in.k));
    // a band set never needs more bands on one route than the demand has slots
    const auto cands = crosscheck::replicated(routes, static_cast<std::size_t>(in.req.demand));
    ilp::ModelParams mp;
    mp.slots = in.state.slots();
    mp.guard_band = in.guard_band;
    mp.max_differential_delay = in.max_differential_delay;
    mp.include_gvd = false;
    const auto model = ilp::build_model(in.net, in.req, cands, mp, &in.state);
    scenario::write_atomic(fs::path(export_dir) / ("instance_" + std::to_string(i) + ".lp"), ilp::export_lp(model));
    expected += std::to_string(i) + "," + (best ? std::to_string(best->cost) : "infeasible") + "\n";
  }
  if (!export_dir.empty()) scenario::write_atomic(fs::path(export_dir) / "expected.csv", expected);
  std::printf("instances: %zu  oracle-feasible: %zu  multi-band heuristic solutions: %zu\n", rep.instances,
              rep.feasible, rep.multi_band);
  for (const auto& f : rep.failures) std::fprintf(stderr, "FAIL %s\n", f.c_str());
  std::printf("%s\n", rep.ok() ? "all cross-checks passed" : "cross-check failures");
  return rep.ok() ? 0 : 1;
}

int cmd_topo_info(const std::string& path, int slots, bool list) {
  const auto net = load_topology_file(path, TopologyConfig{2e5, slots});
  std::size_t dmin = SIZE_MAX, dmax = 0;
  for (std::uint32_t v = 0; v < net.node_count(); ++v) {
    dmin = std::min(dmin, net.out_degree(NodeId{v}));
    dmax = std::max(dmax, net.out_degree(NodeId{v}));
  }
  // arcs 2i and 2i + 1 are the two directions of link i
  std::vector<const Link*> links;
  for (const auto& l : net.links()) {
    if (l.id.value % 2 == 0) links.push_back(&l);
  }
  double lmin = 1e300, lmax = 0.0, ltot = 0.0;
  for (const auto* l : links) {
    lmin = std::min(lmin, l->length_km);
    lmax = std::max(lmax, l->length_km);
    ltot += l->length_km;
  }
  std::printf("nodes: %zu\nlinks: %zu\narcs: %zu\n", static_cast<std::size_t>(net.node_count()), links.size(),
              static_cast<std::size_t>(net.arc_count()));
  if (net.node_count() > 0) {
    std::printf("degree: min %zu, max %zu, mean %.3f\n", dmin, dmax,
                static_cast<double>(net.arc_count()) / static_cast<double>(net.node_count()));
  }
  if (!links.empty()) {
    std::printf("link length km: min %.1f, max %.1f, mean %.1f, total %.1f\n", lmin, lmax,
                ltot / static_cast<double>(links.size()), ltot);
  }
  std::printf("slots per link: %d\n", net.slots_per_link());
  if (list) {
    const auto& names = net.node_names();
    for (const auto* l : links) {
      std::printf("  %s - %s  %.1f km  %s\n", names[l->src.value].c_str(), names[l->dst.value].c_str(), l->length_km,
                  scenario::format_duration(l->delay_ps).c_str());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic optical network simulator: parallel transmission, RSA heuristic, ILP export"};
  app.require_subcommand(1);

  Overrides sim_o, probe_o;
  std::string sim_path, probe_path;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation grid and write metrics.csv and path_dist.csv");
  add_grid_options(simulate, sim_o, sim_path);

  auto* probe = app.add_subcommand("probe", "Probe admissibility on loaded networks and write probe.csv");
  add_grid_options(probe, probe_o, probe_path);
  probe->add_option("--background", probe_o.background, "Policy serving background traffic");
  probe->add_option("--background-k", probe_o.background_k, "K for the background policy");
  probe->add_option("--probe-tr", probe_o.probe_tr, "Probe demand: N or LO-HI");
  probe->add_option("--probes", probe_o.probes, "Probes per run");
  probe->add_option("--interval", probe_o.interval, "Background arrivals between probes");

  ExportOptions ex;
  auto* export_ilp = app.add_subcommand("export-ilp", "Build the per-request program, report sizes, export LP text");
  export_ilp->add_option("--topology", ex.topology, "Topology file")->required()->check(CLI::ExistingFile);
  export_ilp->add_option("--slots", ex.slots, "Frequency slots |F|");
  export_ilp->add_option("--paths", ex.paths, "Candidate paths |P|");
  export_ilp->add_option("--tr", ex.demand, "Demand in slots");
  export_ilp->add_option("--gb", ex.gb, "Guard band in slots");
  export_ilp->add_option("--max-dd", ex.max_dd, "Differential delay bound with unit");
  export_ilp->add_flag("--gvd", ex.gvd, "Include dispersion terms in the delay bound");
  export_ilp->add_option("--source", ex.source, "Source node name");
  export_ilp->add_option("--dest", ex.dest, "Destination node name");
  export_ilp->add_option("--out", ex.out, "Write the selected request's program in LP format");

  std::uint64_t oc_seed = 7;
  std::size_t oc_instances = 20;
  std::string oc_export;
  auto* oracle_check = app.add_subcommand("oracle-check", "Cross-validate oracle, checker and heuristic");
  oracle_check->group("");  // hidden: CI use
  oracle_check->add_option("--seed", oc_seed, "Instance generator seed");
  oracle_check->add_option("--instances", oc_instances, "Number of random instances");
  oracle_check->add_option("--export-dir", oc_export, "Write instance programs and oracle optima here");

  std::string ti_path;
  int ti_slots = 128;
  bool ti_list = false;
  auto* topo_info = app.add_subcommand("topo-info", "Summarize a topology file");
  topo_info->add_option("topology", ti_path, "Topology file")->required()->check(CLI::ExistingFile);
  topo_info->add_option("--slots", ti_slots, "Frequency slots per link");
  topo_info->add_flag("--links", ti_list, "List every link");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(sim_path, sim_o);
    if (*probe) return cmd_probe(probe_path, probe_o);
    if (*export_ilp) return cmd_export_ilp(ex);
    if (*oracle_check) return cmd_oracle_check(oc_seed, oc_instances, oc_export);
    if (*topo_info) return cmd_topo_info(ti_path, ti_slots, ti_list);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
