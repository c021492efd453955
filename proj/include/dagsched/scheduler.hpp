#pragma once

// Offline semi-partitioned scheduling of periodic DAG task sets.
//
// Each DAG is scheduled backwards from its exit nodes (stretching every job
// towards its deadline), compacted onto as few cores as possible, repeated
// over the hyperperiod and finally compacted across DAGs. The result is a
// static schedule table covering one hyperperiod.

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <stdexcept>
#include <tuple>
#include <variant>
#include <vector>

#include "dagsched/analysis.hpp"
#include "dagsched/model.hpp"

namespace dagsched {

struct Slot {
  Tick start = 0;
  Tick finish = 0;
  std::size_t core = 0;
};

// Mutable state of one backward scheduling run.
struct PrimaryState {
  std::vector<Tick> fm;                     // start of the earliest placed entry per core, D if empty
  std::vector<std::optional<Slot>> placed;  // per node
  std::vector<Tick> dlft;                   // pinned to the finish once a node is placed
};

struct PlacementStep {
  std::size_t node = 0;  // index into the DAG
  std::size_t core = 0;
  Tick alpha = 0;
  Tick start = 0;
  Tick finish = 0;
};

struct PrimaryResult {
  ScheduleMap map;  // job 0 only
  std::vector<PlacementStep> steps;
};

class DagInfeasible : public std::runtime_error {
 public:
  DagInfeasible(DagId dag, NodeId node)
      : std::runtime_error("dag " + std::to_string(dag) + " is infeasible: node " + std::to_string(node) +
                           " cannot start at or after its EST"),
        dag_id(dag),
        node_id(node) {}

  DagId dag_id;
  NodeId node_id;
};

// Latest finish of `v` given its placed children. Exit nodes get their LFT.
inline Tick dlft(const DagSpec& dag, const DagAnalysis& an, std::size_t v, const PrimaryState& st) {
  const auto& node = dag.node(v);
  if (node.is_exit()) return an.windows.lft[v];
  Tick out = std::numeric_limits<Tick>::max();
  for (auto c : node.children) {
    if (!st.placed[c]) throw std::logic_error("dlft: child not yet placed");
    out = std::min(out, st.dlft[c] - dag.node(c).wcet);
  }
  return out;
}

// Earliest legal start of every node given the current placement: a placed
// parent contributes its actual finish, an unplaced one its own DEST + wcet.
inline std::vector<Tick> dest_all(const DagSpec& dag, std::span<const std::optional<Slot>> placed, Tick release = 0) {
  std::vector<Tick> out(dag.size(), release);
  for (auto v : dag.topo_order()) {
    for (auto p : dag.node(v).parents) {
      const Tick ready = placed[p] ? placed[p]->finish : out[p] + dag.node(p).wcet;
      out[v] = std::max(out[v], ready);
    }
  }
  return out;
}

inline Tick dest(const DagSpec& dag, std::size_t v, std::span<const std::optional<Slot>> placed, Tick release = 0) {
  return dest_all(dag, placed, release).at(v);
}

// Rank key of a node in the k-th periodic copy.
inline Tick effective_prior_plus(const DagSpec& dag, const DagAnalysis& an, std::size_t v, std::size_t job) {
  return an.prior_plus[v] + static_cast<Tick>(job) * dag.total_work();
}

// Backward list scheduling of one period of `dag`. Nodes are taken in rank
// order from a ready queue seeded with the exit nodes; a node becomes ready
// once all of its children are placed. Each node goes to the core that lets it
// finish latest, alpha = min(DLFT, FM(core)); a fresh core is opened when no
// existing core lets it start at or after its EST.
inline PrimaryResult primary_schedule(const DagSpec& dag, const DagAnalysis& an, std::size_t start_cores,
                                      std::ostream* trace = nullptr) {
  const std::size_t n = dag.size();
  const Tick D = dag.deadline();
  PrimaryResult res;
  PrimaryState st;
  st.fm.assign(std::max<std::size_t>(1, start_cores), D);
  st.placed.assign(n, std::nullopt);
  st.dlft.assign(n, 0);

  std::vector<std::size_t> pending(n);
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;  // by rank_pos
  for (std::size_t v = 0; v < n; ++v) {
    pending[v] = dag.node(v).children.size();
    if (pending[v] == 0) ready.push(an.rank_pos[v]);
  }

  while (!ready.empty()) {
    const std::size_t v = an.order[ready.top()];
    ready.pop();
    const Tick wcet = dag.node(v).wcet;
    const Tick latest = dlft(dag, an, v, st);

    std::size_t core = 0;
    Tick alpha = std::min(latest, st.fm[0]);
    for (std::size_t c = 1; c < st.fm.size(); ++c) {
      const Tick a = std::min(latest, st.fm[c]);
      if (a > alpha) {
        alpha = a;
        core = c;
      }
    }
    if (alpha - wcet < an.windows.est[v]) {
      if (alpha == latest || latest - wcet < an.windows.est[v]) throw DagInfeasible(dag.dag_id(), dag.node(v).node_id);
      st.fm.push_back(D);
      core = st.fm.size() - 1;
      alpha = latest;
    }

    const Slot slot{alpha - wcet, alpha, core};
    st.placed[v] = slot;
    st.dlft[v] = slot.finish;
    st.fm[core] = slot.start;
    res.steps.push_back({v, core, alpha, slot.start, slot.finish});
    res.map.place({dag.dag_id(), dag.node(v).node_id, 0, core, slot.start, slot.finish});
    if (trace) {
      *trace << "place dag " << dag.dag_id() << " node " << dag.node(v).node_id << " core " << core << " alpha "
             << alpha << " start " << slot.start << " finish " << slot.finish << "\n";
    }

    for (auto p : dag.node(v).parents)
      if (--pending[p] == 0) ready.push(an.rank_pos[p]);
  }
  res.map.cores.resize(std::max(res.map.cores.size(), st.fm.size()));
  res.map.normalize();
  return res;
}

namespace detail {

struct CompactItem {
  std::size_t dag_pos = 0;
  std::size_t node = 0;
  std::size_t job = 0;
  ScheduleEntry entry;
  Tick wcet = 0;
  Tick release = 0;
  Tick deadline = 0;
  Tick key = 0;  // effective prior+
  std::vector<std::size_t> parents;
  std::vector<std::size_t> children;
};

class Compactor {
 public:
  Compactor(const ScheduleMap& in, const TaskSet& ts, std::span<const DagAnalysis> analyses) {
    lanes_.resize(in.cores.size());
    horizon_ = ts.hyperperiod;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> lookup;
    for (std::size_t c = 0; c < in.cores.size(); ++c) {
      for (const auto& e : in.cores[c]) {
        const auto& d = ts.dag(e.dag_id);
        const auto pos = static_cast<std::size_t>(e.dag_id - 1);
        CompactItem it;
        it.dag_pos = pos;
        it.node = d.index_of(e.node_id).value();
        it.job = e.job;
        it.entry = e;
        it.entry.core = c;
        it.wcet = e.finish - e.start;
        it.release = static_cast<Tick>(e.job) * d.period();
        it.deadline = it.release + d.deadline();
        it.key = effective_prior_plus(d, analyses[pos], it.node, e.job);
        lookup[{pos, e.job, it.node}] = items_.size();
        lanes_[c].push_back(items_.size());
        items_.push_back(std::move(it));
      }
    }
    for (auto& it : items_) {
      const auto& node = ts.dags[it.dag_pos].node(it.node);
      for (auto p : node.parents)
        if (auto f = lookup.find({it.dag_pos, it.job, p}); f != lookup.end()) it.parents.push_back(f->second);
      for (auto ch : node.children)
        if (auto f = lookup.find({it.dag_pos, it.job, ch}); f != lookup.end()) it.children.push_back(f->second);
    }
    for (auto& lane : lanes_) sort_lane(lane);
  }

  // Repeats gap-filling passes over cores [first, last] until nothing moves.
  void run(std::size_t first, std::size_t last) {
    if (lanes_.empty()) return;
    last = std::min(last, lanes_.size() - 1);
    while (pass(first, last)) {
    }
  }

  ScheduleMap result() const {
    ScheduleMap out;
    out.cores.resize(lanes_.size());
    for (std::size_t c = 0; c < lanes_.size(); ++c)
      for (auto id : lanes_[c]) out.cores[c].push_back(items_[id].entry);
    out.drop_empty_cores();
    return out;
  }

 private:
  Tick dest(const CompactItem& it) const {
    Tick t = it.release;
    for (auto p : it.parents) t = std::max(t, items_[p].entry.finish);
    return t;
  }

  Tick latest_finish(const CompactItem& it) const {
    Tick t = it.deadline;
    for (auto ch : it.children) t = std::min(t, items_[ch].entry.start);
    return t;
  }

  void sort_lane(std::vector<std::size_t>& lane) const {
    std::sort(lane.begin(), lane.end(), [this](std::size_t a, std::size_t b) {
      return items_[a].entry.start < items_[b].entry.start;
    });
  }

  struct Choice {
    std::size_t core;
    std::size_t index;  // within its lane
    Tick start;
  };

  // Best mover for the gap [gap_start, gap_end) among entries on cores
  // (core, last]: lowest effective prior+, then earliest DEST + wcet, then
  // smallest penalty (chosen start - gap start).
  std::optional<Choice> find_mover(std::size_t core, std::size_t last, Tick gap_start, Tick gap_end) const {
    std::optional<Choice> best;
    std::tuple<Tick, Tick, Tick, std::size_t, std::size_t, NodeId> best_key{};
    for (std::size_t c = core + 1; c <= last; ++c) {
      for (std::size_t i = 0; i < lanes_[c].size(); ++i) {
        const auto& it = items_[lanes_[c][i]];
        if (it.wcet > gap_end - gap_start) continue;
        const Tick d = dest(it);
        const Tick s = std::max(d, gap_start);
        if (s + it.wcet > gap_end || s + it.wcet > latest_finish(it)) continue;
        const auto key = std::make_tuple(it.key, d + it.wcet, s - gap_start, it.dag_pos, it.job, it.entry.node_id);
        if (!best || key < best_key) {
          best = Choice{c, i, s};
          best_key = key;
        }
      }
    }
    return best;
  }

  bool pass(std::size_t first, std::size_t last) {
    bool changed = false;
    for (std::size_t c = first; c <= last; ++c) {
      auto& lane = lanes_[c];
      for (std::size_t i = 0; i < lane.size(); ++i) {
        auto& temp = items_[lane[i]];
        const Tick gap_start = i == 0 ? 0 : items_[lane[i - 1]].entry.finish;
        const Tick gap_end = temp.entry.start;
        if (gap_end <= gap_start) continue;

        if (auto mv = find_mover(c, last, gap_start, gap_end)) {
          auto& src = lanes_[mv->core];
          const std::size_t id = src[mv->index];
          src.erase(src.begin() + static_cast<std::ptrdiff_t>(mv->index));
          auto& e = items_[id].entry;
          e.start = mv->start;
          e.finish = mv->start + items_[id].wcet;
          e.core = c;
          lane.insert(lane.begin() + static_cast<std::ptrdiff_t>(i), id);
          ++i;  // skip over temp; its shrunken gap is revisited next pass
          changed = true;
          continue;
        }

        // Only worth opening room if something could still migrate here.
        bool others = false;
        for (std::size_t h = c + 1; h <= last && !others; ++h) others = !lanes_[h].empty();
        if (!others) continue;
        const Tick s = std::max(dest(temp), gap_start);
        if (s < temp.entry.start) {
          temp.entry.start = s;
          temp.entry.finish = s + temp.wcet;
          changed = true;
        }
      }
      // Trailing gap after the last entry; nothing to shift here.
      while (!lane.empty()) {
        const Tick gap_start = items_[lane.back()].entry.finish;
        if (gap_start >= horizon_) break;
        const auto mv = find_mover(c, last, gap_start, horizon_);
        if (!mv) break;
        auto& src = lanes_[mv->core];
        const std::size_t id = src[mv->index];
        src.erase(src.begin() + static_cast<std::ptrdiff_t>(mv->index));
        auto& e = items_[id].entry;
        e.start = mv->start;
        e.finish = mv->start + items_[id].wcet;
        e.core = c;
        lane.push_back(id);
        changed = true;
      }
    }
    return changed;
  }

  std::vector<CompactItem> items_;
  std::vector<std::vector<std::size_t>> lanes_;
  Tick horizon_ = 0;  // item ids sorted by start
};

}  // namespace detail

// Gap-filling compaction over cores [first_core, last_core]. Entries only
// migrate towards lower core indices; empty cores are dropped afterwards.
// `analyses[i]` belongs to `ts.dags[i]`.
inline ScheduleMap compact(const ScheduleMap& mp, const TaskSet& ts, std::span<const DagAnalysis> analyses,
                           std::size_t first_core, std::size_t last_core) {
  detail::Compactor engine(mp, ts, analyses);
  engine.run(first_core, last_core);
  return engine.result();
}

inline ScheduleMap compact(const ScheduleMap& mp, const TaskSet& ts, std::span<const DagAnalysis> analyses) {
  return compact(mp, ts, analyses, 0, mp.num_cores() == 0 ? 0 : mp.num_cores() - 1);
}

// Repeats a one-period map over the hyperperiod: copy k gets job index k and
// is shifted by k * D.
inline ScheduleMap extend(const ScheduleMap& primary, const DagSpec& dag, Tick hyperperiod) {
  if (hyperperiod % dag.deadline() != 0)
    throw std::logic_error("extend: hyperperiod not divisible by the deadline of dag " + std::to_string(dag.dag_id()));
  const auto copies = static_cast<std::size_t>(hyperperiod / dag.deadline());
  ScheduleMap out;
  out.cores.resize(primary.cores.size());
  for (std::size_t k = 0; k < copies; ++k) {
    const Tick shift = static_cast<Tick>(k) * dag.deadline();
    for (std::size_t c = 0; c < primary.cores.size(); ++c) {
      for (auto e : primary.cores[c]) {
        e.job = k;
        e.core = c;
        e.start += shift;
        e.finish += shift;
        out.cores[c].push_back(e);
      }
    }
  }
  out.normalize();
  return out;
}

enum class FailureReason { not_enough_cores, dag_infeasible };

inline std::string_view to_string(FailureReason r) {
  return r == FailureReason::not_enough_cores ? "not_enough_cores" : "dag_infeasible";
}

struct ScheduleStats {
  std::size_t cores_used = 0;
  std::vector<Tick> busy;  // per core

  Tick total_busy() const {
    Tick t = 0;
    for (auto b : busy) t += b;
    return t;
  }
};

inline ScheduleStats stats_of(const ScheduleMap& mp) {
  ScheduleStats s;
  s.cores_used = mp.used_cores();
  for (std::size_t c = 0; c < mp.num_cores(); ++c) s.busy.push_back(mp.busy_ticks(c));
  return s;
}

struct ScheduleSuccess {
  ScheduleMap map;
  ScheduleStats stats;
};

struct ScheduleFailure {
  FailureReason reason = FailureReason::not_enough_cores;
  std::size_t cores_needed = 0;  // not_enough_cores
  DagId dag_id = 0;              // dag_infeasible
  NodeId node_id = 0;            // dag_infeasible
};

struct ScheduleResult {
  std::variant<ScheduleSuccess, ScheduleFailure> outcome;

  bool ok() const noexcept { return std::holds_alternative<ScheduleSuccess>(outcome); }
  const ScheduleSuccess& success() const { return std::get<ScheduleSuccess>(outcome); }
  const ScheduleFailure& failure() const { return std::get<ScheduleFailure>(outcome); }
};

// Intermediate maps of the pipeline, independent of the available core count.
struct SchedulePlan {
  std::vector<std::size_t> dag_order;  // positions into ts.dags, heaviest utilization first
  ScheduleMap extended;                // per-DAG compacted and extended maps, side by side
  ScheduleMap compacted;               // after the cross-DAG pass
};

// Positions of ts.dags by descending C/T; ties by ascending dag id.
inline std::vector<std::size_t> utilization_order(const TaskSet& ts) {
  std::vector<std::size_t> order(ts.dags.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& da = ts.dags[a];
    const auto& db = ts.dags[b];
    return static_cast<__int128>(da.total_work()) * db.period() > static_cast<__int128>(db.total_work()) * da.period();
  });
  return order;
}

inline std::variant<SchedulePlan, ScheduleFailure> plan_taskset(const TaskSet& ts, std::ostream* trace = nullptr) {
  std::vector<DagAnalysis> analyses;
  analyses.reserve(ts.dags.size());
  for (const auto& d : ts.dags) analyses.push_back(analyze(d));

  SchedulePlan plan;
  plan.dag_order = utilization_order(ts);
  for (auto pos : plan.dag_order) {
    const auto& dag = ts.dags[pos];
    if (dag.empty()) continue;
    PrimaryResult primary;
    try {
      primary = primary_schedule(dag, analyses[pos], analyses[pos].min_cores, trace);
    } catch (const DagInfeasible& e) {
      return ScheduleFailure{FailureReason::dag_infeasible, 0, e.dag_id, e.node_id};
    }
    const auto local = compact(primary.map, ts, analyses);
    const auto ext = extend(local, dag, ts.hyperperiod);
    const std::size_t base = plan.extended.cores.size();
    for (std::size_t c = 0; c < ext.cores.size(); ++c) {
      plan.extended.cores.push_back(ext.cores[c]);
      for (auto& e : plan.extended.cores.back()) e.core = base + c;
    }
  }
  plan.compacted = compact(plan.extended, ts, analyses);
  return plan;
}

// Accept iff the compacted hyperperiod map fits on m cores.
inline ScheduleResult schedule_taskset(const TaskSet& ts, std::size_t m, std::ostream* trace = nullptr) {
  if (m < 1) throw std::invalid_argument("schedule_taskset: m must be >= 1");
  auto planned = plan_taskset(ts, trace);
  if (auto* f = std::get_if<ScheduleFailure>(&planned)) return {*f};
  auto& plan = std::get<SchedulePlan>(planned);
  const std::size_t used = plan.compacted.used_cores();
  if (used > m) return {ScheduleFailure{FailureReason::not_enough_cores, used, 0, 0}};
  if (!validate_schedule(plan.compacted, ts).ok())
    throw std::logic_error("schedule_taskset: produced an invalid schedule");
  ScheduleSuccess s{std::move(plan.compacted), {}};
  s.stats = stats_of(s.map);
  return {std::move(s)};
}

}  // namespace dagsched
