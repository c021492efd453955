#pragma once

// Task-set and schedule-map domain types, document I/O, hyperperiod
// arithmetic and the schedule validator.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace dagsched {

// Integer ticks. Signed so that a latest start computed below an EST (or
// below zero) is representable and can be rejected.
using Tick = std::int64_t;
using DagId = std::int64_t;
using NodeId = std::int64_t;

class ModelError : public std::runtime_error {
 public:
  enum class Kind { parse, cycle, bad_wcet, bad_period, dangling_edge, duplicate_id, bad_dag_ids };

  ModelError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct TaskNode {
  DagId dag_id = 0;
  NodeId node_id = 0;
  Tick wcet = 1;
  std::vector<std::size_t> parents;   // indices into DagSpec::nodes
  std::vector<std::size_t> children;  // indices into DagSpec::nodes

  bool is_entry() const noexcept { return parents.empty(); }
  bool is_exit() const noexcept { return children.empty(); }
};

// One periodic DAG with an implicit deadline. Construct through `make`, which
// validates the graph and derives total work and critical-path length.
class DagSpec {
 public:
  struct NodeDesc {
    NodeId id;
    Tick wcet;
  };

  DagSpec() = default;

  static DagSpec make(DagId dag_id, Tick period, const std::vector<NodeDesc>& nodes,
                      const std::vector<std::pair<NodeId, NodeId>>& edges);

  DagId dag_id() const noexcept { return dag_id_; }
  Tick period() const noexcept { return period_; }
  Tick deadline() const noexcept { return period_; }
  Tick total_work() const noexcept { return total_work_; }
  Tick cp_length() const noexcept { return cp_length_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  const std::vector<TaskNode>& nodes() const noexcept { return nodes_; }
  const TaskNode& node(std::size_t index) const { return nodes_.at(index); }

  // Index of the node with the given id, if any.
  std::optional<std::size_t> index_of(NodeId id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  // Node indices in a topological order (parents before children).
  const std::vector<std::size_t>& topo_order() const noexcept { return topo_; }

  // Edges as (src id, dst id) pairs, sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& n : nodes_)
      for (auto c : n.children) out.emplace_back(n.node_id, nodes_[c].node_id);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  DagId dag_id_ = 0;
  Tick period_ = 1;
  Tick total_work_ = 0;
  Tick cp_length_ = 0;
  std::vector<TaskNode> nodes_;
  std::map<NodeId, std::size_t> by_id_;
  std::vector<std::size_t> topo_;
};

// Least common multiple of all periods. Throws std::overflow_error rather
// than wrapping; an empty list yields 1.
inline Tick hyperperiod(const std::vector<Tick>& periods) {
  Tick acc = 1;
  for (Tick p : periods) {
    if (p < 1) throw std::invalid_argument("hyperperiod: period must be >= 1");
    const Tick g = std::gcd(acc, p);
    Tick out = 0;
    if (__builtin_mul_overflow(acc / g, p, &out))
      throw std::overflow_error("hyperperiod: LCM exceeds the tick range");
    acc = out;
  }
  return acc;
}

struct TaskSet {
  std::vector<DagSpec> dags;  // dags[i].dag_id() == i + 1
  Tick hyperperiod = 1;

  static TaskSet make(std::vector<DagSpec> dags);

  const DagSpec& dag(DagId id) const { return dags.at(static_cast<std::size_t>(id - 1)); }
  std::size_t jobs_of(const DagSpec& d) const { return static_cast<std::size_t>(hyperperiod / d.period()); }
};

struct ScheduleEntry {
  DagId dag_id = 0;
  NodeId node_id = 0;
  std::size_t job = 0;
  std::size_t core = 0;
  Tick start = 0;
  Tick finish = 0;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

// Per-core lists of entries. The lane index is authoritative for the core;
// `ScheduleEntry::core` is kept in sync by `place` and `normalize`.
struct ScheduleMap {
  std::vector<std::vector<ScheduleEntry>> cores;

  std::size_t num_cores() const noexcept { return cores.size(); }

  std::size_t used_cores() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(cores.begin(), cores.end(), [](const auto& lane) { return !lane.empty(); }));
  }

  std::size_t entry_count() const noexcept {
    std::size_t n = 0;
    for (const auto& lane : cores) n += lane.size();
    return n;
  }

  void place(ScheduleEntry e) {
    if (e.core >= cores.size()) cores.resize(e.core + 1);
    cores[e.core].push_back(e);
  }

  // Sort every lane by start time and refresh core fields.
  void normalize() {
    for (std::size_t c = 0; c < cores.size(); ++c) {
      for (auto& e : cores[c]) e.core = c;
      std::sort(cores[c].begin(), cores[c].end(), [](const ScheduleEntry& a, const ScheduleEntry& b) {
        return std::tie(a.start, a.finish, a.dag_id, a.job, a.node_id) <
               std::tie(b.start, b.finish, b.dag_id, b.job, b.node_id);
      });
    }
  }

  // Remove empty lanes, renumbering the rest in order.
  void drop_empty_cores() {
    std::erase_if(cores, [](const auto& lane) { return lane.empty(); });
    normalize();
  }

  Tick busy_ticks(std::size_t core) const {
    Tick t = 0;
    for (const auto& e : cores.at(core)) t += e.finish - e.start;
    return t;
  }

  friend bool operator==(const ScheduleMap&, const ScheduleMap&) = default;
};

struct Violation {
  enum class Kind { overlap, precedence, deadline, release, duration, missing_job, unknown_node };
  Kind kind;
  std::string locus;
};

inline std::string_view to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::overlap: return "overlap";
    case Violation::Kind::precedence: return "precedence";
    case Violation::Kind::deadline: return "deadline";
    case Violation::Kind::release: return "release";
    case Violation::Kind::duration: return "duration";
    case Violation::Kind::missing_job: return "missing_job";
    case Violation::Kind::unknown_node: return "unknown_node";
  }
  return "?";
}

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }

  std::size_t count(Violation::Kind k) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [k](const Violation& v) { return v.kind == k; }));
  }
};

// ---------------------------------------------------------------------------
// DagSpec / TaskSet construction

namespace detail {

inline std::string node_locus(DagId dag, NodeId node) {
  return "dag " + std::to_string(dag) + " node " + std::to_string(node);
}

inline std::string entry_locus(const ScheduleEntry& e) {
  std::ostringstream os;
  os << "dag " << e.dag_id << " node " << e.node_id << " job " << e.job << " on core " << e.core << " ["
     << e.start << "," << e.finish << ")";
  return os.str();
}

}  // namespace detail

inline DagSpec DagSpec::make(DagId dag_id, Tick period, const std::vector<NodeDesc>& nodes,
                             const std::vector<std::pair<NodeId, NodeId>>& edges) {
  const std::string where = "dag " + std::to_string(dag_id);
  if (period < 1)
    throw ModelError(ModelError::Kind::bad_period, where + ": period " + std::to_string(period) + " < 1");

  DagSpec d;
  d.dag_id_ = dag_id;
  d.period_ = period;
  d.nodes_.reserve(nodes.size());
  for (const auto& nd : nodes) {
    if (nd.wcet < 1)
      throw ModelError(ModelError::Kind::bad_wcet,
                       detail::node_locus(dag_id, nd.id) + ": wcet " + std::to_string(nd.wcet) + " < 1");
    if (!d.by_id_.emplace(nd.id, d.nodes_.size()).second)
      throw ModelError(ModelError::Kind::duplicate_id, detail::node_locus(dag_id, nd.id) + ": duplicate node id");
    TaskNode tn;
    tn.dag_id = dag_id;
    tn.node_id = nd.id;
    tn.wcet = nd.wcet;
    d.nodes_.push_back(std::move(tn));
    d.total_work_ += nd.wcet;
  }

  for (const auto& [src, dst] : edges) {
    auto s = d.index_of(src);
    auto t = d.index_of(dst);
    if (!s || !t) {
      throw ModelError(ModelError::Kind::dangling_edge,
                       where + ": edge " + std::to_string(src) + " -> " + std::to_string(dst) +
                           " references unknown node " + std::to_string(!s ? src : dst));
    }
    auto& ch = d.nodes_[*s].children;
    if (std::find(ch.begin(), ch.end(), *t) != ch.end()) continue;  // duplicate edge
    ch.push_back(*t);
    d.nodes_[*t].parents.push_back(*s);
  }
  for (auto& n : d.nodes_) {
    std::sort(n.parents.begin(), n.parents.end());
    std::sort(n.children.begin(), n.children.end());
  }

  // Iterative DFS: detects a back edge and records reverse postorder.
  const std::size_t n = d.nodes_.size();
  enum : char { white, grey, black };
  std::vector<char> color(n, white);
  std::vector<std::size_t> post;
  post.reserve(n);
  for (std::size_t root = 0; root < n; ++root) {
    if (color[root] != white) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    color[root] = grey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& ch = d.nodes_[v].children;
      if (next < ch.size()) {
        const std::size_t c = ch[next++];
        if (color[c] == grey) {
          throw ModelError(ModelError::Kind::cycle, where + ": cycle detected at back edge " +
                                                        std::to_string(d.nodes_[v].node_id) + " -> " +
                                                        std::to_string(d.nodes_[c].node_id));
        }
        if (color[c] == white) {
          color[c] = grey;
          stack.emplace_back(c, 0);
        }
      } else {
        color[v] = black;
        post.push_back(v);
        stack.pop_back();
      }
    }
  }
  d.topo_.assign(post.rbegin(), post.rend());

  std::vector<Tick> finish(n, 0);
  for (auto v : d.topo_) {
    Tick ready = 0;
    for (auto p : d.nodes_[v].parents) ready = std::max(ready, finish[p]);
    finish[v] = ready + d.nodes_[v].wcet;
    d.cp_length_ = std::max(d.cp_length_, finish[v]);
  }
  return d;
}

inline TaskSet TaskSet::make(std::vector<DagSpec> dags) {
  std::sort(dags.begin(), dags.end(), [](const DagSpec& a, const DagSpec& b) { return a.dag_id() < b.dag_id(); });
  std::vector<Tick> periods;
  for (std::size_t i = 0; i < dags.size(); ++i) {
    if (dags[i].dag_id() != static_cast<DagId>(i + 1)) {
      throw ModelError(ModelError::Kind::bad_dag_ids,
                       "dag ids must be dense 1..n; found " + std::to_string(dags[i].dag_id()) + " at position " +
                           std::to_string(i + 1));
    }
    periods.push_back(dags[i].period());
  }
  TaskSet ts;
  ts.hyperperiod = dagsched::hyperperiod(periods);
  ts.dags = std::move(dags);
  return ts;
}

// ---------------------------------------------------------------------------
// Documents

namespace detail {

template <class T>
T get_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ModelError(ModelError::Kind::parse, where + ": missing field \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ModelError(ModelError::Kind::parse, where + ": field \"" + key + "\" has the wrong type");
  }
}

inline nlohmann::json parse_json(std::string_view text, const char* what) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(ModelError::Kind::parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline TaskSet taskset_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("dags") || !doc["dags"].is_array())
    throw ModelError(ModelError::Kind::parse, "task set: top level must be an object with a \"dags\" array");
  std::vector<DagSpec> dags;
  std::size_t pos = 0;
  for (const auto& jd : doc["dags"]) {
    const std::string where = "dags[" + std::to_string(pos++) + "]";
    const auto id = detail::get_field<DagId>(jd, "id", where);
    const auto period = detail::get_field<Tick>(jd, "period", where);
    std::vector<DagSpec::NodeDesc> nodes;
    for (const auto& jn : detail::get_field<nlohmann::json>(jd, "nodes", where)) {
      const std::string nwhere = "dag " + std::to_string(id) + " nodes";
      nodes.push_back({detail::get_field<NodeId>(jn, "id", nwhere), detail::get_field<Tick>(jn, "wcet", nwhere)});
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    if (jd.contains("edges")) {
      for (const auto& je : jd["edges"]) {
        if (!je.is_array() || je.size() != 2 || !je[0].is_number_integer() || !je[1].is_number_integer())
          throw ModelError(ModelError::Kind::parse, "dag " + std::to_string(id) + ": edge must be [src, dst]");
        edges.emplace_back(je[0].get<NodeId>(), je[1].get<NodeId>());
      }
    }
    dags.push_back(DagSpec::make(id, period, nodes, edges));
  }
  return TaskSet::make(std::move(dags));
}

inline TaskSet load_taskset(std::string_view text) {
  return taskset_from_json(detail::parse_json(text, "task set"));
}

inline nlohmann::ordered_json taskset_to_json(const TaskSet& ts) {
  nlohmann::ordered_json dags = nlohmann::ordered_json::array();
  for (const auto& d : ts.dags) {
    nlohmann::ordered_json jd;
    jd["id"] = d.dag_id();
    jd["period"] = d.period();
    jd["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : d.nodes()) jd["nodes"].push_back({{"id", n.node_id}, {"wcet", n.wcet}});
    jd["edges"] = nlohmann::ordered_json::array();
    for (const auto& [s, t] : d.edges()) jd["edges"].push_back({s, t});
    dags.push_back(std::move(jd));
  }
  nlohmann::ordered_json doc;
  doc["dags"] = std::move(dags);
  return doc;
}

inline std::string dump_taskset(const TaskSet& ts) { return taskset_to_json(ts).dump(2) + "\n"; }

// One entry per line, lanes in core order, entries by start.
inline std::string dump_schedule(const ScheduleMap& mp) {
  ScheduleMap sorted = mp;
  sorted.normalize();
  std::string out = "{\n  \"num_cores\": " + std::to_string(sorted.num_cores()) + ",\n  \"entries\": [";
  bool first = true;
  for (const auto& lane : sorted.cores) {
    for (const auto& e : lane) {
      nlohmann::ordered_json je;
      je["dag"] = e.dag_id;
      je["node"] = e.node_id;
      je["job"] = e.job;
      je["core"] = e.core;
      je["start"] = e.start;
      je["finish"] = e.finish;
      out += first ? "\n    " : ",\n    ";
      out += je.dump();
      first = false;
    }
  }
  out += first ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

inline ScheduleMap load_schedule(std::string_view text) {
  const auto doc = detail::parse_json(text, "schedule");
  ScheduleMap mp;
  const auto cores = detail::get_field<std::size_t>(doc, "num_cores", "schedule");
  mp.cores.resize(cores);
  std::size_t pos = 0;
  for (const auto& je : detail::get_field<nlohmann::json>(doc, "entries", "schedule")) {
    const std::string where = "entries[" + std::to_string(pos++) + "]";
    ScheduleEntry e;
    e.dag_id = detail::get_field<DagId>(je, "dag", where);
    e.node_id = detail::get_field<NodeId>(je, "node", where);
    e.job = detail::get_field<std::size_t>(je, "job", where);
    e.core = detail::get_field<std::size_t>(je, "core", where);
    e.start = detail::get_field<Tick>(je, "start", where);
    e.finish = detail::get_field<Tick>(je, "finish", where);
    if (e.core >= cores)
      throw ModelError(ModelError::Kind::parse, where + ": core " + std::to_string(e.core) + " >= num_cores");
    mp.place(e);
  }
  mp.normalize();
  return mp;
}

// ---------------------------------------------------------------------------
// Validation

// Checks a map against the task set over one hyperperiod. All violations are
// collected. A job scheduled more than once is reported as missing_job.
inline ValidationReport validate_schedule(const ScheduleMap& mp, const TaskSet& ts) {
  using K = Violation::Kind;
  ValidationReport rep;
  auto add = [&rep](K k, std::string locus) { rep.violations.push_back({k, std::move(locus)}); };

  // (dag, job, node index) -> entry
  std::map<std::tuple<DagId, std::size_t, std::size_t>, std::vector<const ScheduleEntry*>> seen;

  for (std::size_t c = 0; c < mp.cores.size(); ++c) {
    std::vector<const ScheduleEntry*> lane;
    for (const auto& e : mp.cores[c]) lane.push_back(&e);
    std::sort(lane.begin(), lane.end(), [](auto* a, auto* b) {
      return std::tie(a->start, a->finish, a->dag_id, a->job, a->node_id) <
             std::tie(b->start, b->finish, b->dag_id, b->job, b->node_id);
    });
    // Sorted by start, any overlap shows up against the furthest-reaching predecessor.
    const ScheduleEntry* reach = nullptr;
    for (auto* e : lane) {
      if (reach && e->start < reach->finish && e->start < e->finish)
        add(K::overlap, detail::entry_locus(*reach) + " overlaps " + detail::entry_locus(*e));
      if (!reach || e->finish > reach->finish) reach = e;
    }

    for (auto* e : lane) {
      if (e->dag_id < 1 || e->dag_id > static_cast<DagId>(ts.dags.size())) {
        add(K::unknown_node, detail::entry_locus(*e) + ": no such dag");
        continue;
      }
      const auto& d = ts.dag(e->dag_id);
      const auto idx = d.index_of(e->node_id);
      if (!idx) {
        add(K::unknown_node, detail::entry_locus(*e) + ": no such node");
        continue;
      }
      if (e->job >= ts.jobs_of(d)) {
        add(K::unknown_node, detail::entry_locus(*e) + ": job index beyond the hyperperiod");
        continue;
      }
      const Tick release = static_cast<Tick>(e->job) * d.period();
      if (e->finish - e->start != d.node(*idx).wcet) {
        add(K::duration, detail::entry_locus(*e) + ": duration " + std::to_string(e->finish - e->start) +
                             " != wcet " + std::to_string(d.node(*idx).wcet));
      }
      if (e->start < release)
        add(K::release, detail::entry_locus(*e) + ": starts before release " + std::to_string(release));
      if (e->finish > release + d.deadline()) {
        add(K::deadline, detail::entry_locus(*e) + ": finishes after deadline " +
                             std::to_string(release + d.deadline()));
      }
      seen[{e->dag_id, e->job, *idx}].push_back(e);
    }
  }

  for (const auto& d : ts.dags) {
    for (std::size_t k = 0; k < ts.jobs_of(d); ++k) {
      for (std::size_t v = 0; v < d.size(); ++v) {
        auto it = seen.find({d.dag_id(), k, v});
        const std::string locus =
            detail::node_locus(d.dag_id(), d.node(v).node_id) + " job " + std::to_string(k);
        if (it == seen.end()) {
          add(K::missing_job, locus + ": not scheduled");
          continue;
        }
        if (it->second.size() > 1)
          add(K::missing_job, locus + ": scheduled " + std::to_string(it->second.size()) + " times");
        for (auto c : d.node(v).children) {
          auto jt = seen.find({d.dag_id(), k, c});
          if (jt == seen.end()) continue;
          for (auto* pe : it->second) {
            for (auto* ce : jt->second) {
              if (pe->finish > ce->start) {
                add(K::precedence, detail::entry_locus(*pe) + " finishes after child " +
                                       detail::entry_locus(*ce) + " starts");
              }
            }
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace dagsched
