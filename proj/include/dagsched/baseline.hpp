#pragma once

// Non-preemptive global EDF over DAG jobs, simulated event by event over one
// hyperperiod. A node instance becomes eligible when its job is released and
// all of its parents have finished; a free core always takes the eligible
// instance with the earliest absolute deadline of its job.

#include <optional>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

#include "dagsched/model.hpp"

namespace dagsched {

struct SimEvent {
  enum class Kind { job_release = 0, node_finish = 1 };

  Tick time = 0;
  Kind kind = Kind::job_release;
  std::size_t dag_pos = 0;
  NodeId node_id = 0;  // node_finish only
  std::size_t node = 0;
  std::size_t job = 0;
  std::size_t core = 0;

  auto order_key() const { return std::make_tuple(time, kind, dag_pos, node_id, job); }
  friend bool operator>(const SimEvent& a, const SimEvent& b) { return a.order_key() > b.order_key(); }
};

struct DeadlineMiss {
  DagId dag_id = 0;
  NodeId node_id = 0;
  std::size_t job = 0;
  Tick deadline = 0;
  Tick finish = 0;
};

struct SimResult {
  bool success = false;
  ScheduleMap trace;
  std::optional<DeadlineMiss> first_miss;
};

inline SimResult gedf_np_simulate(const TaskSet& ts, std::size_t m) {
  if (m < 1) throw std::invalid_argument("gedf_np_simulate: m must be >= 1");
  SimResult res;
  res.trace.cores.resize(m);

  // Per (dag, job): unfinished-parent counts of every node.
  std::vector<std::vector<std::vector<std::size_t>>> waiting(ts.dags.size());
  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> events;
  for (std::size_t i = 0; i < ts.dags.size(); ++i) {
    const auto& d = ts.dags[i];
    const auto jobs = ts.jobs_of(d);
    waiting[i].resize(jobs);
    for (std::size_t k = 0; k < jobs; ++k) {
      waiting[i][k].resize(d.size());
      for (std::size_t v = 0; v < d.size(); ++v) waiting[i][k][v] = d.node(v).parents.size();
      SimEvent ev;
      ev.time = static_cast<Tick>(k) * d.period();
      ev.dag_pos = i;
      ev.job = k;
      events.push(ev);
    }
  }

  // (absolute deadline, dag position, node id, job, node index)
  using Ready = std::tuple<Tick, std::size_t, NodeId, std::size_t, std::size_t>;
  std::set<Ready> eligible;
  std::set<std::size_t> idle;
  for (std::size_t c = 0; c < m; ++c) idle.insert(c);

  auto make_ready = [&](std::size_t i, std::size_t k, std::size_t v) {
    const auto& d = ts.dags[i];
    eligible.emplace((static_cast<Tick>(k) + 1) * d.period(), i, d.node(v).node_id, k, v);
  };

  while (!events.empty()) {
    const Tick now = events.top().time;
    while (!events.empty() && events.top().time == now) {
      const SimEvent ev = events.top();
      events.pop();
      const auto& d = ts.dags[ev.dag_pos];
      if (ev.kind == SimEvent::Kind::job_release) {
        for (std::size_t v = 0; v < d.size(); ++v)
          if (d.node(v).is_entry()) make_ready(ev.dag_pos, ev.job, v);
      } else {
        idle.insert(ev.core);
        for (auto c : d.node(ev.node).children)
          if (--waiting[ev.dag_pos][ev.job][c] == 0) make_ready(ev.dag_pos, ev.job, c);
      }
    }

    while (!idle.empty() && !eligible.empty()) {
      const auto [deadline, i, node_id, k, v] = *eligible.begin();
      eligible.erase(eligible.begin());
      const std::size_t core = *idle.begin();
      idle.erase(idle.begin());
      const auto& d = ts.dags[i];
      const Tick finish = now + d.node(v).wcet;
      res.trace.cores[core].push_back({d.dag_id(), node_id, k, core, now, finish});
      if (finish > deadline) {
        const DeadlineMiss miss{d.dag_id(), node_id, k, deadline, finish};
        if (!res.first_miss || std::tie(miss.finish, miss.deadline) < std::tie(res.first_miss->finish, res.first_miss->deadline))
          res.first_miss = miss;
      }
      SimEvent ev;
      ev.time = finish;
      ev.kind = SimEvent::Kind::node_finish;
      ev.dag_pos = i;
      ev.node_id = node_id;
      ev.node = v;
      ev.job = k;
      ev.core = core;
      events.push(ev);
    }
  }

  res.trace.normalize();
  res.success = !res.first_miss.has_value();
  return res;
}

}  // namespace dagsched
