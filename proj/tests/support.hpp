#pragma once

// Shared fixtures and brute-force oracles. Nothing here calls into the
// analysis or scheduler code it is used to check.

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "dagsched/model.hpp"

namespace dagsched::testing {

// s(1) -> {a(3), b(2)} -> t(1); ids s=1 a=2 b=3 t=4
inline DagSpec diamond(Tick period = 8, DagId id = 1) {
  return DagSpec::make(id, period, {{1, 1}, {2, 3}, {3, 2}, {4, 1}}, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
}

// A(2) -> B(2); ids A=1 B=2
inline DagSpec chain_ab(Tick period = 10, DagId id = 1) {
  return DagSpec::make(id, period, {{1, 2}, {2, 2}}, {{1, 2}});
}

inline DagSpec single(Tick wcet, Tick period, DagId id = 1) { return DagSpec::make(id, period, {{1, wcet}}, {}); }

inline TaskSet one(DagSpec d) {
  std::vector<DagSpec> v;
  v.push_back(std::move(d));
  return TaskSet::make(std::move(v));
}

// Random DAG over ids 1..n with forward edges; independent of the bench
// generator so the oracles never share code with the code they check.
inline DagSpec random_dag(std::mt19937_64& rng, std::size_t max_nodes, double p, Tick period, DagId id = 1,
                          Tick max_wcet = 9) {
  std::uniform_int_distribution<std::size_t> nd(1, max_nodes);
  std::uniform_int_distribution<Tick> wd(1, max_wcet);
  std::bernoulli_distribution ed(p);
  const auto n = nd(rng);
  std::vector<DagSpec::NodeDesc> nodes;
  std::vector<NodeId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i + 1);
  std::shuffle(ids.begin(), ids.end(), rng);  // node order in the vector != id order
  for (std::size_t i = 0; i < n; ++i) nodes.push_back({ids[i], wd(rng)});
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (ed(rng)) edges.emplace_back(ids[i], ids[j]);
  return DagSpec::make(id, period, nodes, edges);
}

// Every directed path (length >= 1 node), as node-index sequences.
inline std::vector<std::vector<std::size_t>> all_paths(const DagSpec& d) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> walk = [&](std::size_t v) {
    cur.push_back(v);
    out.push_back(cur);
    for (auto c : d.node(v).children) walk(c);
    cur.pop_back();
  };
  for (std::size_t v = 0; v < d.size(); ++v) walk(v);
  return out;
}

inline Tick path_weight(const DagSpec& d, const std::vector<std::size_t>& p) {
  Tick w = 0;
  for (auto v : p) w += d.node(v).wcet;
  return w;
}

struct PathOracle {
  std::vector<Tick> est, lft;
  std::vector<NodeId> cp_ids;
  Tick cp = 0;
};

inline PathOracle path_oracle(const DagSpec& d) {
  PathOracle o;
  o.est.assign(d.size(), 0);
  o.lft.assign(d.size(), d.deadline());
  std::vector<Tick> best_end(d.size(), 0), best_start(d.size(), 0);
  bool have_cp = false;
  for (const auto& p : all_paths(d)) {
    const Tick w = path_weight(d, p);
    best_end[p.back()] = std::max(best_end[p.back()], w);
    best_start[p.front()] = std::max(best_start[p.front()], w);
    std::vector<NodeId> ids;
    for (auto v : p) ids.push_back(d.node(v).node_id);
    if (!have_cp || w > o.cp || (w == o.cp && ids < o.cp_ids)) {
      o.cp = w;
      o.cp_ids = ids;
      have_cp = true;
    }
  }
  for (std::size_t v = 0; v < d.size(); ++v) {
    o.est[v] = best_end[v] - d.node(v).wcet;
    o.lft[v] = d.deadline() - (best_start[v] - d.node(v).wcet);
  }
  return o;
}

// wcet(v) plus the wcets of every node that can reach v.
inline std::vector<Tick> prior_plus_oracle(const DagSpec& d) {
  std::vector<Tick> out(d.size());
  for (std::size_t v = 0; v < d.size(); ++v) {
    std::set<std::size_t> seen;
    std::vector<std::size_t> stack{v};
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto p : d.node(u).parents)
        if (seen.insert(p).second) stack.push_back(p);
    }
    Tick sum = d.node(v).wcet;
    for (auto u : seen) sum += d.node(u).wcet;
    out[v] = sum;
  }
  return out;
}

inline Tick lcm_oracle(const std::vector<Tick>& periods) {
  const Tick top = *std::max_element(periods.begin(), periods.end());
  for (Tick k = top;; k += top)
    if (std::all_of(periods.begin(), periods.end(), [k](Tick p) { return k % p == 0; })) return k;
}

// Random task set of up to `max_dags` DAGs with periods from `menu`; DAGs
// whose critical path exceeds the period are redrawn.
inline TaskSet random_taskset(std::mt19937_64& rng, std::size_t max_dags, std::size_t max_nodes, double p,
                              const std::vector<Tick>& menu) {
  std::uniform_int_distribution<std::size_t> dd(1, max_dags);
  std::uniform_int_distribution<std::size_t> pd(0, menu.size() - 1);
  const auto n = dd(rng);
  std::vector<DagSpec> dags;
  for (std::size_t i = 0; i < n; ++i) {
    for (;;) {
      auto d = random_dag(rng, max_nodes, p, menu[pd(rng)], static_cast<DagId>(i + 1));
      if (d.cp_length() <= d.period()) {
        dags.push_back(std::move(d));
        break;
      }
    }
  }
  return TaskSet::make(std::move(dags));
}

inline const ScheduleEntry* find_entry(const ScheduleMap& mp, DagId dag, NodeId node, std::size_t job = 0) {
  for (const auto& lane : mp.cores)
    for (const auto& e : lane)
      if (e.dag_id == dag && e.node_id == node && e.job == job) return &e;
  return nullptr;
}

}  // namespace dagsched::testing
