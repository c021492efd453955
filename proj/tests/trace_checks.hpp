#pragma once

// Global-EDF trace properties checked from the trace alone.

#include <algorithm>
#include <map>
#include <tuple>
#include <vector>

#include "dagsched/model.hpp"

namespace dagsched::testing {

struct TracedInstance {
  const ScheduleEntry* entry;
  Tick eligible;
  Tick deadline;
};

inline std::vector<TracedInstance> traced_instances(const ScheduleMap& trace, const TaskSet& ts) {
  std::map<std::tuple<DagId, std::size_t, NodeId>, const ScheduleEntry*> by_key;
  for (const auto& lane : trace.cores)
    for (const auto& e : lane) by_key[{e.dag_id, e.job, e.node_id}] = &e;
  std::vector<TracedInstance> out;
  for (const auto& [key, e] : by_key) {
    const auto& d = ts.dag(e->dag_id);
    const auto& node = d.node(d.index_of(e->node_id).value());
    Tick elig = static_cast<Tick>(e->job) * d.period();
    for (auto p : node.parents) elig = std::max(elig, by_key.at({e->dag_id, e->job, d.node(p).node_id})->finish);
    out.push_back({e, elig, (static_cast<Tick>(e->job) + 1) * d.period()});
  }
  return out;
}

// Instants at which some instance waited while fewer than m cores were busy.
inline std::size_t work_conservation_violations(const ScheduleMap& trace, const TaskSet& ts, std::size_t m) {
  const auto inst = traced_instances(trace, ts);
  std::vector<Tick> instants, starts, finishes;
  for (const auto& i : inst) {
    instants.push_back(i.eligible);
    instants.push_back(i.entry->finish);
    starts.push_back(i.entry->start);
    finishes.push_back(i.entry->finish);
  }
  std::sort(instants.begin(), instants.end());
  instants.erase(std::unique(instants.begin(), instants.end()), instants.end());
  std::sort(starts.begin(), starts.end());
  std::sort(finishes.begin(), finishes.end());
  auto busy_at = [&](Tick t) {
    const auto s = std::upper_bound(starts.begin(), starts.end(), t) - starts.begin();
    const auto f = std::upper_bound(finishes.begin(), finishes.end(), t) - finishes.begin();
    return static_cast<std::size_t>(s - f);
  };
  std::size_t bad = 0;
  for (const auto& x : inst) {
    for (auto it = std::lower_bound(instants.begin(), instants.end(), x.eligible);
         it != instants.end() && *it < x.entry->start; ++it)
      if (busy_at(*it) < m) ++bad;
  }
  return bad;
}

// Pairs where an instance was dispatched while an eligible, later-started
// instance had a strictly earlier deadline.
inline std::size_t edf_order_violations(const ScheduleMap& trace, const TaskSet& ts) {
  const auto inst = traced_instances(trace, ts);
  std::size_t bad = 0;
  for (const auto& x : inst)
    for (const auto& y : inst)
      if (y.eligible <= x.entry->start && x.entry->start < y.entry->start && y.deadline < x.deadline) ++bad;
  return bad;
}

}  // namespace dagsched::testing
