#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eon/heuristic.hpp"
#include "eon/physics.hpp"
#include "eon/spectrum.hpp"
#include "eon/topology.hpp"

namespace eon::sim {

// ---------------------------------------------------------------------------
// Random numbers
//
// Each random purpose draws from its own std::mt19937_64, seeded with
// splitmix64(seed + stream * 0x9E3779B97F4A7C15). Variates are produced by
// hand from raw 64-bit outputs so results do not depend on the standard
// library's distribution implementations:
//   uniform01     = (next() >> 11) * 2^-53
//   exponential   = -mean * log(1 - uniform01)
//   uniform_int   = lo + rejection-sampled next() mod (hi - lo + 1)

enum class Stream : std::uint64_t { arrivals = 1, holding = 2, pairs = 3, demand = 4, probe = 5 };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(seed + static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ull)) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  /// Uniform on [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Configuration and metrics

/// Demand in slots, uniform on [lo, hi].
struct DemandDistribution {
  int lo = 1;
  int hi = 1;

  static DemandDistribution fixed(int n) { return {n, n}; }
  static DemandDistribution uniform(int lo, int hi) { return {lo, hi}; }
  bool deterministic() const { return lo == hi; }
};

struct TrafficConfig {
  double arrival_rate = 1.0;  // u, requests per time unit
  double mean_holding = 1.0;  // h, time units
  DemandDistribution demand{};
  std::size_t requests = 20'000;
  std::uint64_t seed = 1;
  double warmup_fraction = 0.1;
  // Empty: ordered distinct pairs drawn uniformly. Otherwise drawn uniformly from this list.
  std::vector<std::pair<NodeId, NodeId>> pairs;

  double load() const { return arrival_rate * mean_holding; }

  void validate() const {
    if (!(arrival_rate > 0.0)) throw std::invalid_argument("arrival rate must be positive");
    if (!(mean_holding > 0.0)) throw std::invalid_argument("mean holding time must be positive");
    if (demand.lo < 1 || demand.hi < demand.lo) throw std::invalid_argument("bad demand range");
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) throw std::invalid_argument("warm-up fraction must be in [0, 1)");
    for (const auto& [s, d] : pairs) {
      if (s == d) throw std::invalid_argument("pair with equal endpoints");
    }
  }
};

struct Metrics {
  std::uint64_t offered = 0;
  std::uint64_t blocked = 0;
  std::uint64_t served = 0;
  std::vector<std::uint64_t> histogram;  // histogram[n - 1]: served with n spectrum paths

  double blocking_probability() const {
    return offered == 0 ? 0.0 : static_cast<double>(blocked) / static_cast<double>(offered);
  }

  double aggregation_ratio() const {
    if (served == 0) return 0.0;
    const std::uint64_t single = histogram.empty() ? 0 : histogram[0];
    return 1.0 - static_cast<double>(single) / static_cast<double>(served);
  }

  void record_served(std::size_t paths) {
    if (histogram.size() < paths) histogram.resize(paths, 0);
    ++histogram[paths - 1];
    ++served;
  }

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct RunOptions {
  FiberParams fiber{};
  bool audit = false;  // full state audit at every event
};

namespace detail {

/// k-path cache per ordered pair; paths depend only on the topology.
class PathCache {
 public:
  PathCache(const Network& net, int k) : net_(net), k_(k) {}

  const std::vector<FiberPath>& get(NodeId s, NodeId d) {
    const std::uint64_t key = static_cast<std::uint64_t>(s.value) * net_.node_count() + d.value;
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, compute_fiber_paths(net_, s, d, k_)).first;
    return it->second;
  }

 private:
  const Network& net_;
  int k_;
  std::unordered_map<std::uint64_t, std::vector<FiberPath>> cache_;
};

struct Departure {
  double time;
  std::uint64_t seq;
  std::size_t conn;
  bool operator>(const Departure& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

/// Arrival process shared by run() and probe().
class Traffic {
 public:
  Traffic(const Network& net, const TrafficConfig& cfg)
      : net_(net),
        cfg_(cfg),
        arrivals_(cfg.seed, Stream::arrivals),
        holding_(cfg.seed, Stream::holding),
        pairs_(cfg.seed, Stream::pairs),
        demand_(cfg.seed, Stream::demand) {
    if (cfg.pairs.empty() && net.node_count() < 2) throw std::invalid_argument("need at least two nodes");
  }

  Request next() {
    Request r;
    clock_ += arrivals_.exponential(1.0 / cfg_.arrival_rate);
    r.arrival = clock_;
    r.holding = holding_.exponential(cfg_.mean_holding);
    std::tie(r.source, r.destination) = draw_pair(pairs_);
    r.demand = demand_.uniform_int(cfg_.demand.lo, cfg_.demand.hi);
    return r;
  }

  std::pair<NodeId, NodeId> draw_pair(Rng& rng) const {
    if (!cfg_.pairs.empty()) return cfg_.pairs[rng.below(cfg_.pairs.size())];
    const auto n = net_.node_count();
    const auto idx = rng.below(n * (n - 1));
    const auto s = static_cast<std::uint32_t>(idx / (n - 1));
    auto d = static_cast<std::uint32_t>(idx % (n - 1));
    if (d >= s) ++d;
    return {NodeId{s}, NodeId{d}};
  }

 private:
  const Network& net_;
  const TrafficConfig& cfg_;
  Rng arrivals_, holding_, pairs_, demand_;
  double clock_ = 0.0;
};

/// Active connections and their departures.
class Connections {
 public:
  void admit(Solution sol, double until) {
    const std::size_t id = sols_.size();
    sols_.push_back(std::move(sol));
    queue_.push({until, seq_++, id});
  }

  /// Releases every connection departing at or before `t`.
  template <class OnRelease>
  void release_until(double t, SpectrumState& state, OnRelease&& after) {
    while (!queue_.empty() && queue_.top().time <= t) {
      const auto dep = queue_.top();
      queue_.pop();
      release_solution(state, sols_[dep.conn]);
      sols_[dep.conn] = Solution{};
      after();
    }
  }

  template <class OnRelease>
  void drain(SpectrumState& state, OnRelease&& after) {
    release_until(std::numeric_limits<double>::infinity(), state, after);
  }

 private:
  std::vector<Solution> sols_;
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
};

inline void check_admission(const Solution& sol, const Request& req, const PolicyParams& policy) {
  int total = 0;
  for (const auto& p : sol.paths) total += p.range.len;
  if (total != req.demand) throw std::logic_error("served bandwidth differs from demand");
  if (sol.delay_spread() > policy.max_differential_delay) throw std::logic_error("admitted delay spread exceeds M");
  if (policy.mode == Mode::single_path && sol.paths.size() != 1) throw std::logic_error("ST used several paths");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Runs

/// One simulation: Poisson arrivals, exponential holding, heuristic
/// admission. Requests before the warm-up cut are served but not counted.
inline Metrics run(const Network& net, const TrafficConfig& traffic, const PolicyParams& policy,
                   const RunOptions& options = {}) {
  traffic.validate();
  policy.validate();
  if (traffic.demand.hi > net.slots_per_link()) throw std::invalid_argument("demand exceeds slots per link");

  SpectrumState state(net);
  detail::PathCache cache(net, policy.k);
  detail::Traffic gen(net, traffic);
  detail::Connections conns;
  const auto warmup = static_cast<std::size_t>(std::floor(traffic.warmup_fraction * static_cast<double>(traffic.requests)));
  auto audit = [&] {
    if (options.audit) state.audit(policy.guard_band);
  };

  Metrics m;
  for (std::size_t i = 0; i < traffic.requests; ++i) {
    const Request req = gen.next();
    conns.release_until(req.arrival, state, audit);
    const auto& paths = cache.get(req.source, req.destination);
    auto sol = serve_on_paths(state, paths, req, policy, options.fiber);
    audit();
    const bool counted = i >= warmup;
    if (counted) ++m.offered;
    if (!sol) {
      if (counted) ++m.blocked;
      continue;
    }
    if (options.audit) detail::check_admission(*sol, req, policy);
    if (counted) m.record_served(sol->paths.size());
    conns.admit(std::move(*sol), req.arrival + req.holding);
  }
  conns.drain(state, audit);
  if (!state.all_free() || state.active_count() != 0) throw std::logic_error("spectrum not free after the last departure");
  return m;
}

// ---------------------------------------------------------------------------
// Probe measurements
//
// Background traffic is served by `background` and holds spectrum. Once the
// warm-up has passed, a probe request is drawn every `interval` arrivals and
// offered to each probe policy on the same snapshot. Probes are evaluated
// only; they never take spectrum.

struct ProbeConfig {
  TrafficConfig traffic{};  // background; `requests` is ignored
  PolicyParams background{};
  std::vector<PolicyParams> policies;
  DemandDistribution probe_demand{4, 6};
  std::size_t probes = 50;
  std::size_t interval = 20;
};

struct ProbeResult {
  std::size_t probes = 0;
  std::vector<std::uint64_t> blocked;  // per probe policy
  Metrics background;

  double blocking(std::size_t policy) const {
    return probes == 0 ? 0.0 : static_cast<double>(blocked.at(policy)) / static_cast<double>(probes);
  }
};

inline ProbeResult probe(const Network& net, const ProbeConfig& cfg, const RunOptions& options = {}) {
  if (cfg.policies.empty()) throw std::invalid_argument("no probe policies");
  if (cfg.interval < 1) throw std::invalid_argument("probe interval must be >= 1");
  if (cfg.probe_demand.lo < 1 || cfg.probe_demand.hi < cfg.probe_demand.lo) throw std::invalid_argument("bad probe demand");
  cfg.background.validate();
  for (const auto& p : cfg.policies) p.validate();

  TrafficConfig traffic = cfg.traffic;
  const double frac = traffic.warmup_fraction;
  const std::size_t body = cfg.probes * cfg.interval;
  const auto warmup = static_cast<std::size_t>(std::ceil(frac / (1.0 - frac) * static_cast<double>(body)));
  traffic.requests = warmup + body;
  traffic.validate();

  SpectrumState state(net);
  detail::PathCache bg_cache(net, cfg.background.k);
  std::vector<detail::PathCache> caches;
  for (const auto& p : cfg.policies) caches.emplace_back(net, p.k);
  detail::Traffic gen(net, traffic);
  detail::Connections conns;
  Rng probe_rng(traffic.seed, Stream::probe);
  auto audit = [&] {
    if (options.audit) state.audit(cfg.background.guard_band);
  };

  ProbeResult r;
  r.blocked.assign(cfg.policies.size(), 0);
  for (std::size_t i = 0; i < traffic.requests; ++i) {
    const Request req = gen.next();
    conns.release_until(req.arrival, state, audit);
    auto sol = serve_on_paths(state, bg_cache.get(req.source, req.destination), req, cfg.background, options.fiber);
    const bool counted = i >= warmup;
    if (counted) ++r.background.offered;
    if (sol) {
      if (counted) r.background.record_served(sol->paths.size());
      conns.admit(std::move(*sol), req.arrival + req.holding);
    } else if (counted) {
      ++r.background.blocked;
    }
    if (!counted || (i - warmup + 1) % cfg.interval != 0) continue;

    Request pr;
    std::tie(pr.source, pr.destination) = gen.draw_pair(probe_rng);
    pr.demand = probe_rng.uniform_int(cfg.probe_demand.lo, cfg.probe_demand.hi);
    pr.arrival = req.arrival;
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
      const auto& paths = caches[p].get(pr.source, pr.destination);
      if (!assign_spectrum(state, paths, pr, cfg.policies[p])) ++r.blocked[p];
    }
    ++r.probes;
  }
  conns.drain(state, audit);
  return r;
}

// ---------------------------------------------------------------------------
// Replications

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;

  double lo() const { return mean - half_width; }
  double hi() const { return mean + half_width; }
  bool contains(double v) const { return v >= lo() && v <= hi(); }
};

/// Student-t confidence interval for the mean of `xs`.
inline Interval confidence_interval(std::span<const double> xs, double level = 0.95) {
  if (xs.size() < 2) throw std::invalid_argument("confidence interval needs at least two samples");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
  return {mean, t * sd / std::sqrt(n)};
}

struct Replication {
  std::vector<Metrics> runs;
  Interval blocking;
  Interval aggregation;
};

/// Runs `n` independent replications with seeds traffic.seed + 0 .. n - 1,
/// up to `jobs` at a time. The result does not depend on `jobs`.
inline Replication replicate(const Network& net, const TrafficConfig& traffic, const PolicyParams& policy, std::size_t n,
                             const RunOptions& options = {}, std::size_t jobs = 1) {
  if (n < 2) throw std::invalid_argument("replicate needs n >= 2");
  Replication rep;
  rep.runs.resize(n);
  std::vector<std::exception_ptr> errors(n);
  auto one = [&](std::size_t i) {
    try {
      TrafficConfig t = traffic;
      t.seed = traffic.seed + i;
      rep.runs[i] = run(net, t, policy, options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  for (std::size_t base = 0; base < n; base += jobs) {
    std::vector<std::thread> pool;
    for (std::size_t i = base; i < std::min(n, base + jobs); ++i) {
      if (jobs == 1) {
        one(i);
      } else {
        pool.emplace_back(one, i);
      }
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<double> b, a;
  for (const auto& m : rep.runs) {
    b.push_back(m.blocking_probability());
    a.push_back(m.aggregation_ratio());
  }
  rep.blocking = confidence_interval(b);
  rep.aggregation = confidence_interval(a);
  return rep;
}

}  // namespace eon::sim
