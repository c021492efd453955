#pragma once

// Random DAG collections and the success-rate / utilization experiment that
// compares the semi-partitioned scheduler against non-preemptive global EDF.

#include <charconv>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagsched/baseline.hpp"
#include "dagsched/model.hpp"
#include "dagsched/scheduler.hpp"

namespace dagsched {

struct TickRange {
  Tick lo = 1;
  Tick hi = 1;
};

struct GenConfig {
  std::size_t collections = 200;
  std::size_t dags_per_collection = 5;
  double edge_prob = 0.6;
  TickRange nodes_per_dag{5, 15};
  TickRange wcet_range{1, 10};
  std::vector<Tick> period_menu{10, 20, 40, 50, 100};
  std::uint64_t seed = 0;
  std::size_t max_retries = 100000;

  void check() const {
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw std::invalid_argument("GenConfig: edge_prob outside [0,1]");
    if (nodes_per_dag.lo < 1 || nodes_per_dag.lo > nodes_per_dag.hi)
      throw std::invalid_argument("GenConfig: nodes_per_dag must be a nonempty range of positive counts");
    if (wcet_range.lo < 1 || wcet_range.lo > wcet_range.hi)
      throw std::invalid_argument("GenConfig: wcet_range must be a nonempty range of positive ticks");
    if (period_menu.empty()) throw std::invalid_argument("GenConfig: period_menu is empty");
    for (auto p : period_menu)
      if (p < 1) throw std::invalid_argument("GenConfig: period_menu values must be >= 1");
  }
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json config_to_json(const GenConfig& c) {
  nlohmann::ordered_json j;
  j["collections"] = c.collections;
  j["dags_per_collection"] = c.dags_per_collection;
  j["edge_prob"] = c.edge_prob;
  j["nodes_per_dag"] = {c.nodes_per_dag.lo, c.nodes_per_dag.hi};
  j["wcet_range"] = {c.wcet_range.lo, c.wcet_range.hi};
  j["period_menu"] = c.period_menu;
  j["seed"] = c.seed;
  j["max_retries"] = c.max_retries;
  return j;
}

// Missing fields keep their defaults.
inline GenConfig config_from_json(const nlohmann::json& j) {
  GenConfig c;
  auto range = [](const nlohmann::json& v, const char* name) {
    if (!v.is_array() || v.size() != 2) throw std::invalid_argument(std::string("config: ") + name + " must be [lo, hi]");
    return TickRange{v[0].get<Tick>(), v[1].get<Tick>()};
  };
  try {
    if (j.contains("collections")) c.collections = j["collections"].get<std::size_t>();
    if (j.contains("dags_per_collection")) c.dags_per_collection = j["dags_per_collection"].get<std::size_t>();
    if (j.contains("edge_prob")) c.edge_prob = j["edge_prob"].get<double>();
    if (j.contains("nodes_per_dag")) c.nodes_per_dag = range(j["nodes_per_dag"], "nodes_per_dag");
    if (j.contains("wcet_range")) c.wcet_range = range(j["wcet_range"], "wcet_range");
    if (j.contains("period_menu")) c.period_menu = j["period_menu"].get<std::vector<Tick>>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_retries")) c.max_retries = j["max_retries"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.check();
  return c;
}

inline GenConfig load_config(std::string_view text) {
  try {
    return config_from_json(nlohmann::json::parse(text.begin(), text.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

// splitmix64 finalizer; derives independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto step = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return step(step(step(seed) ^ a) ^ b);
}

using Rng = std::mt19937_64;

// Draws one DAG: forward edges i -> j (i < j) with probability p, so the
// graph is acyclic by construction. Redrawn while the critical path exceeds
// the period. `retries`, when given, accumulates the number of redraws.
inline DagSpec generate_dag(const GenConfig& cfg, Rng& rng, DagId dag_id, std::size_t* retries = nullptr) {
  cfg.check();
  std::uniform_int_distribution<Tick> count(cfg.nodes_per_dag.lo, cfg.nodes_per_dag.hi);
  std::uniform_int_distribution<Tick> wcet(cfg.wcet_range.lo, cfg.wcet_range.hi);
  std::uniform_int_distribution<std::size_t> period(0, cfg.period_menu.size() - 1);
  std::bernoulli_distribution edge(cfg.edge_prob);

  for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    const Tick n = count(rng);
    std::vector<DagSpec::NodeDesc> nodes;
    for (Tick i = 1; i <= n; ++i) nodes.push_back({i, wcet(rng)});
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (Tick i = 1; i <= n; ++i)
      for (Tick j = i + 1; j <= n; ++j)
        if (edge(rng)) edges.emplace_back(i, j);
    const Tick T = cfg.period_menu[period(rng)];
    auto dag = DagSpec::make(dag_id, T, nodes, edges);
    if (dag.cp_length() <= dag.period()) return dag;
    if (retries) ++*retries;
  }
  throw GenerationError("generate_dag: no DAG with cp_length <= period after " + std::to_string(cfg.max_retries) +
                        " retries (seed " + std::to_string(cfg.seed) + ", edge_prob " +
                        std::to_string(cfg.edge_prob) + ")");
}

inline std::uint64_t collection_seed(const GenConfig& cfg, std::size_t collection) {
  return mix_seed(cfg.seed, collection);
}

inline TaskSet generate_collection(const GenConfig& cfg, std::size_t collection, std::size_t* retries = nullptr) {
  std::vector<DagSpec> dags;
  for (std::size_t i = 0; i < cfg.dags_per_collection; ++i) {
    Rng rng(mix_seed(collection_seed(cfg, collection), i));
    dags.push_back(generate_dag(cfg, rng, static_cast<DagId>(i + 1), retries));
  }
  return TaskSet::make(std::move(dags));
}

struct ReportRow {
  std::size_t collection = 0;
  std::size_t m = 0;
  std::string algorithm;  // "proposed" or "gedf_np"
  bool success = false;
  std::size_t cores_used = 0;
  double utilization = 0.0;  // busy / (cores_used * hyperperiod); 0 when unsuccessful
  Tick hyperperiod = 0;
  std::uint64_t seed = 0;  // collection stream seed, for replay

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct CoreSummary {
  std::size_t m = 0;
  double proposed_success_rate = 0.0;
  double baseline_success_rate = 0.0;
  double proposed_utilization = 0.0;
  double baseline_utilization = 0.0;

  friend bool operator==(const CoreSummary&, const CoreSummary&) = default;
};

struct ExperimentReport {
  GenConfig config;
  std::vector<std::size_t> core_counts;
  std::size_t regenerations = 0;
  std::vector<CoreSummary> summary;
  std::vector<ReportRow> rows;
};

class ExperimentAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rates and mean utilization (over successful collections) from raw rows.
inline std::vector<CoreSummary> summarize(const std::vector<ReportRow>& rows, const std::vector<std::size_t>& core_counts,
                                          std::size_t collections) {
  std::vector<CoreSummary> out;
  for (auto m : core_counts) {
    CoreSummary s;
    s.m = m;
    std::size_t ok_p = 0, ok_b = 0;
    double util_p = 0.0, util_b = 0.0;
    for (const auto& r : rows) {
      if (r.m != m || !r.success) continue;
      if (r.algorithm == "proposed") {
        ++ok_p;
        util_p += r.utilization;
      } else {
        ++ok_b;
        util_b += r.utilization;
      }
    }
    const double n = static_cast<double>(collections);
    s.proposed_success_rate = collections ? static_cast<double>(ok_p) / n : 0.0;
    s.baseline_success_rate = collections ? static_cast<double>(ok_b) / n : 0.0;
    s.proposed_utilization = ok_p ? util_p / static_cast<double>(ok_p) : 0.0;
    s.baseline_utilization = ok_b ? util_b / static_cast<double>(ok_b) : 0.0;
    out.push_back(s);
  }
  return out;
}

inline double utilization(const ScheduleMap& mp, Tick hyperperiod) {
  const auto used = mp.used_cores();
  if (used == 0) return 0.0;
  Tick busy = 0;
  for (std::size_t c = 0; c < mp.num_cores(); ++c) busy += mp.busy_ticks(c);
  return static_cast<double>(busy) / (static_cast<double>(used) * static_cast<double>(hyperperiod));
}

// Optional observer for every validated successful schedule.
struct ScheduleSink {
  virtual ~ScheduleSink() = default;
  virtual void on_taskset(std::size_t collection, const TaskSet& ts) = 0;
  virtual void on_schedule(std::size_t collection, std::size_t m, const std::string& algorithm,
                           const ScheduleMap& mp) = 0;
};

inline ExperimentReport run_experiment(const GenConfig& cfg, const std::vector<std::size_t>& core_counts,
                                       ScheduleSink* sink = nullptr) {
  cfg.check();
  ExperimentReport rep;
  rep.config = cfg;
  rep.core_counts = core_counts;

  auto abort_if_invalid = [&](const ScheduleMap& mp, const TaskSet& ts, std::size_t c, std::size_t m, const char* alg) {
    const auto v = validate_schedule(mp, ts);
    if (!v.ok()) {
      throw ExperimentAborted(std::string("validator rejected a ") + alg + " schedule: collection " +
                              std::to_string(c) + ", m " + std::to_string(m) + ", seed " +
                              std::to_string(cfg.seed) + ": " + v.violations.front().locus);
    }
  };

  for (std::size_t c = 0; c < cfg.collections; ++c) {
    const auto ts = generate_collection(cfg, c, &rep.regenerations);
    const auto seed = collection_seed(cfg, c);
    if (sink) sink->on_taskset(c, ts);

    // The proposed pipeline does not depend on m until the final core-count check.
    const auto planned = plan_taskset(ts);
    const auto* plan = std::get_if<SchedulePlan>(&planned);

    for (auto m : core_counts) {
      ReportRow p{c, m, "proposed", false, 0, 0.0, ts.hyperperiod, seed};
      if (plan) {
        p.cores_used = plan->compacted.used_cores();
        p.success = p.cores_used <= m;
        if (p.success) {
          abort_if_invalid(plan->compacted, ts, c, m, "proposed");
          p.utilization = utilization(plan->compacted, ts.hyperperiod);
          if (sink) sink->on_schedule(c, m, p.algorithm, plan->compacted);
        }
      }
      rep.rows.push_back(p);

      const auto sim = gedf_np_simulate(ts, m);
      ReportRow b{c, m, "gedf_np", sim.success, sim.trace.used_cores(), 0.0, ts.hyperperiod, seed};
      if (b.success) {
        abort_if_invalid(sim.trace, ts, c, m, "gedf_np");
        b.utilization = utilization(sim.trace, ts.hyperperiod);
        if (sink) sink->on_schedule(c, m, b.algorithm, sim.trace);
      }
      rep.rows.push_back(b);
    }
  }
  rep.summary = summarize(rep.rows, core_counts, cfg.collections);
  return rep;
}

// ---------------------------------------------------------------------------
// Report documents

namespace detail {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("report: bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline constexpr const char* kReportHeader = "collection,m,algorithm,success,cores_used,utilization,hyperperiod,seed";

inline std::string export_table(const ExperimentReport& rep) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rep.rows) {
    out += std::to_string(r.collection) + "," + std::to_string(r.m) + "," + r.algorithm + "," + (r.success ? "1" : "0") +
           "," + std::to_string(r.cores_used) + "," + detail::format_double(r.utilization) + "," +
           std::to_string(r.hyperperiod) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

inline std::string export_summary(const ExperimentReport& rep) {
  nlohmann::ordered_json j;
  j["utilization_definition"] =
      "busy ticks / (used cores * hyperperiod), averaged over the collections the algorithm scheduled";
  j["config"] = config_to_json(rep.config);
  j["core_counts"] = rep.core_counts;
  j["regenerations"] = rep.regenerations;
  j["summary"] = nlohmann::ordered_json::array();
  for (const auto& s : rep.summary) {
    nlohmann::ordered_json e;
    e["m"] = s.m;
    // Stored as strings so the values survive a round trip bit for bit.
    e["proposed_success_rate"] = detail::format_double(s.proposed_success_rate);
    e["baseline_success_rate"] = detail::format_double(s.baseline_success_rate);
    e["proposed_utilization"] = detail::format_double(s.proposed_utilization);
    e["baseline_utilization"] = detail::format_double(s.baseline_utilization);
    j["summary"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

inline ExperimentReport import_report(std::string_view table, std::string_view summary) {
  ExperimentReport rep;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(summary.begin(), summary.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("report summary: ") + e.what());
  }
  rep.config = config_from_json(j.at("config"));
  rep.core_counts = j.at("core_counts").get<std::vector<std::size_t>>();
  rep.regenerations = j.at("regenerations").get<std::size_t>();
  for (const auto& e : j.at("summary")) {
    CoreSummary s;
    s.m = e.at("m").get<std::size_t>();
    s.proposed_success_rate = detail::parse_double(e.at("proposed_success_rate").get<std::string>());
    s.baseline_success_rate = detail::parse_double(e.at("baseline_success_rate").get<std::string>());
    s.proposed_utilization = detail::parse_double(e.at("proposed_utilization").get<std::string>());
    s.baseline_utilization = detail::parse_double(e.at("baseline_utilization").get<std::string>());
    rep.summary.push_back(s);
  }

  std::istringstream in{std::string(table)};
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw std::invalid_argument("report table: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw std::invalid_argument("report table: expected 8 columns in '" + line + "'");
    ReportRow r;
    r.collection = std::stoull(f[0]);
    r.m = std::stoull(f[1]);
    r.algorithm = f[2];
    r.success = f[3] == "1";
    r.cores_used = std::stoull(f[4]);
    r.utilization = detail::parse_double(f[5]);
    r.hyperperiod = std::stoll(f[6]);
    r.seed = std::stoull(f[7]);
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

}  // namespace dagsched
