#pragma once

// Per-DAG graph analysis: prior+ loads, priority ranking, EST/LFT windows,
// critical path, clustering and the starting core estimate.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "dagsched/model.hpp"

namespace dagsched {

// Exact nonnegative fraction; only ever compared or rounded up.
struct Rational {
  Tick num = 0;
  Tick den = 1;

  Tick ceil() const { return (num + den - 1) / den; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.num * b.den == b.num * a.den; }
};

struct Cluster {
  std::vector<std::size_t> members;  // node indices, ascending
  bool is_cp = false;
  Tick work = 0;
  Tick est_min = 0;
  Tick lft_max = 0;
  Rational density;
};

struct NodeAnalysis {
  Tick prior_plus = 0;
  Tick est = 0;
  Tick lft = 0;
  std::size_t rank_pos = 0;
};

struct CriticalPath {
  std::vector<std::size_t> nodes;  // indices, entry to exit
  Tick length = 0;
};

// prior+(v) = wcet(v) + sum of wcets over the transitive ancestors of v.
inline std::vector<Tick> prior_plus(const DagSpec& dag) {
  const std::size_t n = dag.size();
  std::vector<std::vector<bool>> anc(n, std::vector<bool>(n, false));
  for (auto v : dag.topo_order()) {
    for (auto p : dag.node(v).parents) {
      anc[v][p] = true;
      for (std::size_t u = 0; u < n; ++u)
        if (anc[p][u]) anc[v][u] = true;
    }
  }
  std::vector<Tick> out(n);
  for (std::size_t v = 0; v < n; ++v) {
    Tick sum = dag.node(v).wcet;
    for (std::size_t u = 0; u < n; ++u)
      if (anc[v][u]) sum += dag.node(u).wcet;
    out[v] = sum;
  }
  return out;
}

// Priority order, highest first: larger prior+, then smaller wcet, then
// smaller node id.
inline std::vector<std::size_t> rank(const DagSpec& dag, const std::vector<Tick>& pp) {
  std::vector<std::size_t> order(dag.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& na = dag.node(a);
    const auto& nb = dag.node(b);
    if (pp[a] != pp[b]) return pp[a] > pp[b];
    if (na.wcet != nb.wcet) return na.wcet < nb.wcet;
    return na.node_id < nb.node_id;
  });
  return order;
}

struct Windows {
  std::vector<Tick> est;
  std::vector<Tick> lft;
};

inline Windows est_lft(const DagSpec& dag) {
  const std::size_t n = dag.size();
  Windows w{std::vector<Tick>(n, 0), std::vector<Tick>(n, dag.deadline())};
  const auto& topo = dag.topo_order();
  for (auto v : topo)
    for (auto p : dag.node(v).parents) w.est[v] = std::max(w.est[v], w.est[p] + dag.node(p).wcet);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const auto v = *it;
    for (auto c : dag.node(v).children) w.lft[v] = std::min(w.lft[v], w.lft[c] - dag.node(c).wcet);
  }
  return w;
}

// Heaviest directed path; among equally heavy paths, the one whose node-id
// sequence is lexicographically smallest.
inline CriticalPath critical_path(const DagSpec& dag) {
  CriticalPath cp;
  if (dag.empty()) return cp;
  const std::size_t n = dag.size();
  std::vector<Tick> suffix(n, 0);
  const auto& topo = dag.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Tick best = 0;
    for (auto c : dag.node(*it).children) best = std::max(best, suffix[c]);
    suffix[*it] = dag.node(*it).wcet + best;
  }
  auto smallest_id = [&](const std::vector<std::size_t>& cands, Tick want) {
    std::optional<std::size_t> pick;
    for (auto v : cands)
      if (suffix[v] == want && (!pick || dag.node(v).node_id < dag.node(*pick).node_id)) pick = v;
    return pick;
  };
  std::vector<std::size_t> entries;
  for (std::size_t v = 0; v < n; ++v)
    if (dag.node(v).is_entry()) entries.push_back(v);
  cp.length = 0;
  for (auto v : entries) cp.length = std::max(cp.length, suffix[v]);

  std::optional<std::size_t> cur = smallest_id(entries, cp.length);
  Tick remaining = cp.length;
  while (cur) {
    cp.nodes.push_back(*cur);
    remaining -= dag.node(*cur).wcet;
    if (remaining == 0) break;
    cur = smallest_id(dag.node(*cur).children, remaining);
  }
  return cp;
}

// Critical-path nodes form one cluster; every other node is grouped with the
// nodes sharing its EST. Density is work over (max LFT - min EST).
inline std::vector<Cluster> clusters(const DagSpec& dag, const Windows& w, const CriticalPath& cp) {
  std::vector<Cluster> out;
  if (dag.empty()) return out;
  auto finish_cluster = [&](Cluster c) {
    std::sort(c.members.begin(), c.members.end());
    c.est_min = w.est[c.members.front()];
    c.lft_max = w.lft[c.members.front()];
    for (auto v : c.members) {
      c.work += dag.node(v).wcet;
      c.est_min = std::min(c.est_min, w.est[v]);
      c.lft_max = std::max(c.lft_max, w.lft[v]);
    }
    // The window only collapses for DAGs whose critical path overruns D.
    c.density = Rational{c.work, std::max<Tick>(1, c.lft_max - c.est_min)};
    out.push_back(std::move(c));
  };

  Cluster cpc;
  cpc.is_cp = true;
  cpc.members = cp.nodes;
  std::vector<bool> on_cp(dag.size(), false);
  for (auto v : cp.nodes) on_cp[v] = true;
  finish_cluster(std::move(cpc));

  std::map<Tick, std::vector<std::size_t>> by_est;
  for (std::size_t v = 0; v < dag.size(); ++v)
    if (!on_cp[v]) by_est[w.est[v]].push_back(v);
  for (auto& [est, members] : by_est) {
    Cluster c;
    c.members = std::move(members);
    finish_cluster(std::move(c));
  }
  return out;
}

// Sum of per-cluster ceilings, at least 1. Only a starting allocation.
inline std::size_t estimate_min_cores(const std::vector<Cluster>& cs) {
  Tick total = 0;
  for (const auto& c : cs) total += c.density.ceil();
  return static_cast<std::size_t>(std::max<Tick>(1, total));
}

// Everything the scheduler needs about one DAG, computed once.
struct DagAnalysis {
  std::vector<Tick> prior_plus;
  std::vector<std::size_t> order;  // rank order, highest priority first
  Windows windows;
  CriticalPath cp;
  std::vector<Cluster> clusters;
  std::size_t min_cores = 1;

  NodeAnalysis node(std::size_t v) const {
    return {prior_plus.at(v), windows.est.at(v), windows.lft.at(v), rank_pos.at(v)};
  }

  std::vector<std::size_t> rank_pos;  // inverse of `order`
};

inline DagAnalysis analyze(const DagSpec& dag) {
  DagAnalysis a;
  a.prior_plus = prior_plus(dag);
  a.order = rank(dag, a.prior_plus);
  a.rank_pos.resize(dag.size());
  for (std::size_t i = 0; i < a.order.size(); ++i) a.rank_pos[a.order[i]] = i;
  a.windows = est_lft(dag);
  a.cp = critical_path(dag);
  a.clusters = clusters(dag, a.windows, a.cp);
  a.min_cores = estimate_min_cores(a.clusters);
  return a;
}

inline std::size_t estimate_min_cores(const DagSpec& dag) { return analyze(dag).min_cores; }

}  // namespace dagsched
