// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when a
// correctness criterion fails; the comparative trend line is reported only.

#include <chrono>
#include <iostream>
#include <random>

#include "dagsched/bench.hpp"
#include "support.hpp"
#include "trace_checks.hpp"

using namespace dagsched;
namespace t = dagsched::testing;
using Clock = std::chrono::steady_clock;

namespace {

int hard_failures = 0;

void report(int id, bool ok, const std::string& detail, bool counts = true) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << "\n";
  if (!ok && counts) ++hard_failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<std::tuple<DagId, NodeId, std::size_t, Tick>> multiset(const ScheduleMap& mp) {
  std::vector<std::tuple<DagId, NodeId, std::size_t, Tick>> out;
  for (const auto& lane : mp.cores)
    for (const auto& e : lane) out.emplace_back(e.dag_id, e.node_id, e.job, e.finish - e.start);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DagAnalysis> analyses(const TaskSet& ts) {
  std::vector<DagAnalysis> an;
  for (const auto& d : ts.dags) an.push_back(analyze(d));
  return an;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Criteria 1 and 4 share the generated instances.
void soundness_and_compaction() {
  const auto t0 = Clock::now();
  std::size_t sets = 0, successes = 0, bad_validation = 0, bad_compaction = 0;
  for (double p : {0.2, 0.6, 0.9}) {
    GenConfig cfg;
    cfg.edge_prob = p;
    cfg.seed = 1000 + static_cast<std::uint64_t>(p * 10);
    cfg.dags_per_collection = 4;
    for (std::size_t c = 0; c < 170; ++c) {
      const auto ts = generate_collection(cfg, c);
      ++sets;
      for (std::size_t m : {1, 2, 4, 8}) {
        const auto res = schedule_taskset(ts, m);
        if (!res.ok()) continue;
        ++successes;
        if (!validate_schedule(res.success().map, ts).ok()) ++bad_validation;
      }
      const auto planned = plan_taskset(ts);
      const auto* plan = std::get_if<SchedulePlan>(&planned);
      if (!plan) continue;
      const auto an = analyses(ts);
      bool ok = plan->compacted.used_cores() <= plan->extended.used_cores() &&
                multiset(plan->compacted) == multiset(plan->extended) &&
                compact(plan->compacted, ts, an) == plan->compacted;
      for (std::size_t i = 0; i < ts.dags.size() && ok; ++i) {
        const auto primary = primary_schedule(ts.dags[i], an[i], an[i].min_cores).map;
        const auto once = compact(primary, ts, an);
        ok = once.used_cores() <= primary.used_cores() && multiset(once) == multiset(primary) &&
             compact(once, ts, an) == once;
      }
      if (!ok) ++bad_compaction;
    }
  }
  const double secs = seconds_since(t0);
  report(1, sets >= 500 && bad_validation == 0 && secs < 120,
         std::to_string(sets) + " task sets, " + std::to_string(successes) + " successes over m in {1,2,4,8}, " +
             std::to_string(bad_validation) + " rejected by the validator, " + fmt(secs) + " s");
  report(4, bad_compaction == 0,
         std::to_string(bad_compaction) + " instances violating core count / entry multiset / idempotence");
}

void oracles() {
  std::mt19937_64 rng(2024);
  std::size_t bad = 0;
  const double ps[] = {0.2, 0.5, 0.8};
  for (int i = 0; i < 200; ++i) {
    const auto d = t::random_dag(rng, 12, ps[i % 3], 200);
    const auto o = t::path_oracle(d);
    const auto w = est_lft(d);
    const auto cp = critical_path(d);
    std::vector<NodeId> cp_ids;
    for (auto v : cp.nodes) cp_ids.push_back(d.node(v).node_id);
    if (prior_plus(d) != t::prior_plus_oracle(d) || w.est != o.est || w.lft != o.lft || cp.length != o.cp ||
        cp_ids != o.cp_ids)
      ++bad;
  }
  report(2, bad == 0, "200 random DAGs (<= 12 nodes), " + std::to_string(bad) + " disagreements with brute force");
}

bool same_slot(const ScheduleMap& mp, NodeId node, std::size_t core, Tick s, Tick f) {
  const auto* e = t::find_entry(mp, 1, node, 0);
  return e && e->core == core && e->start == s && e->finish == f;
}

void worked_examples() {
  const auto d = t::diamond();
  const auto an = analyze(d);
  bool ok = prior_plus(d) == std::vector<Tick>{1, 4, 3, 7};
  std::vector<NodeId> order;
  for (auto v : an.order) order.push_back(d.node(v).node_id);
  ok = ok && order == std::vector<NodeId>{4, 2, 3, 1};
  const auto primary = primary_schedule(d, an, an.min_cores).map;
  ok = ok && primary.num_cores() == 2 && same_slot(primary, 1, 0, 3, 4) && same_slot(primary, 2, 0, 4, 7) &&
       same_slot(primary, 4, 0, 7, 8) && same_slot(primary, 3, 1, 5, 7);
  const std::vector<DagAnalysis> v{an};
  const auto packed = compact(primary, t::one(d), v);
  ok = ok && packed.num_cores() == 1 && same_slot(packed, 1, 0, 0, 1) && same_slot(packed, 3, 0, 1, 3) &&
       same_slot(packed, 2, 0, 4, 7) && same_slot(packed, 4, 0, 7, 8);
  const auto chain = t::chain_ab();
  const auto cm = primary_schedule(chain, analyze(chain), 1).map;
  ok = ok && same_slot(cm, 2, 0, 8, 10) && same_slot(cm, 1, 0, 6, 8);
  report(3, ok, "diamond prior+/rank/primary/compacted maps and chain A->B primary map");
}

void extension() {
  std::vector<DagSpec> v;
  v.push_back(t::single(3, 20, 1));
  v.push_back(t::single(2, 10, 2));
  const auto ts = TaskSet::make(std::move(v));
  const auto planned = plan_taskset(ts);
  bool ok = ts.hyperperiod == 20 && std::holds_alternative<SchedulePlan>(planned);
  if (ok) {
    const auto& ext = std::get<SchedulePlan>(planned).extended;
    std::vector<const ScheduleEntry*> copies;
    for (const auto& lane : ext.cores)
      for (const auto& e : lane)
        if (e.dag_id == 2) copies.push_back(&e);
    std::sort(copies.begin(), copies.end(), [](auto* a, auto* b) { return a->job < b->job; });
    ok = copies.size() == 2 && copies[0]->job == 0 && copies[1]->job == 1 &&
         copies[1]->start - copies[0]->start == 10 && copies[1]->finish - copies[0]->finish == 10;
    const auto res = schedule_taskset(ts, 2);
    ok = ok && res.ok() && validate_schedule(res.success().map, ts).ok();
  }
  report(5, ok, "periods {20,10}: hyperperiod 20, the 10-period DAG has 2 copies offset by 10");
}

void baseline() {
  std::mt19937_64 rng(77);
  std::size_t instances = 0, bad = 0;
  for (int i = 0; i < 300; ++i) {
    const auto ts = t::random_taskset(rng, 4, 10, 0.4, {10, 20, 40});
    for (std::size_t m : {1, 2, 4}) {
      const auto sim = gedf_np_simulate(ts, m);
      ++instances;
      if (t::work_conservation_violations(sim.trace, ts, m) || t::edf_order_violations(sim.trace, ts)) ++bad;
      if (sim.success != validate_schedule(sim.trace, ts).ok()) ++bad;
    }
  }
  std::vector<DagSpec> v;
  v.push_back(t::single(3, 4, 1));
  v.push_back(t::single(3, 4, 2));
  const auto two = TaskSet::make(std::move(v));
  const bool example = !gedf_np_simulate(two, 1).success && gedf_np_simulate(two, 2).success;
  report(6, bad == 0 && example,
         std::to_string(instances) + " traces, " + std::to_string(bad) +
             " with work-conservation / EDF-order / verdict faults; wcet-3/T-4 pair " +
             (example ? "fails at m=1 and succeeds at m=2" : "has the wrong verdicts"));
}

void trend() {
  const auto t0 = Clock::now();
  const GenConfig cfg;
  const auto rep = run_experiment(cfg, {4, 8, 16});
  const double secs = seconds_since(t0);
  bool monotone = true, dominates = true;
  std::string rates;
  for (std::size_t i = 0; i < rep.summary.size(); ++i) {
    const auto& s = rep.summary[i];
    rates += " m=" + std::to_string(s.m) + " " + fmt(s.proposed_success_rate) + " vs " + fmt(s.baseline_success_rate);
    dominates = dominates && s.proposed_success_rate >= s.baseline_success_rate;
    if (i > 0) {
      const auto& p = rep.summary[i - 1];
      monotone = monotone && s.proposed_success_rate >= p.proposed_success_rate &&
                 s.baseline_success_rate >= p.baseline_success_rate;
    }
  }
  report(7, monotone && secs < 300, "defaults, both success rates nondecreasing in m, " + fmt(secs) + " s");
  report(7, dominates, "proposed >= GEDF-NP success rate at every m (proposed vs gedf_np):" + rates +
                           (dominates ? "" : " [measured shortfall, reported only]"),
         false);
}

void determinism() {
  GenConfig cfg;
  cfg.collections = 40;
  cfg.seed = 8;
  const auto a = run_experiment(cfg, {4, 8, 16});
  const auto b = run_experiment(cfg, {4, 8, 16});
  bool ok = export_table(a) == export_table(b) && export_summary(a) == export_summary(b);
  for (std::size_t c = 0; c < 10 && ok; ++c) {
    const auto ts = generate_collection(cfg, c);
    const auto x = schedule_taskset(ts, 16), y = schedule_taskset(ts, 16);
    ok = x.ok() == y.ok() && (!x.ok() || dump_schedule(x.success().map) == dump_schedule(y.success().map));
  }
  report(8, ok, "repeated bench reports and schedule documents are byte-identical");
}

}  // namespace

int main() {
  soundness_and_compaction();
  oracles();
  worked_examples();
  extension();
  baseline();
  trend();
  determinism();
  std::cout << "SKIP criterion 9: figure-dependent node weights are not legible in the available copy; "
               "the check is omitted rather than synthesized\n";
  return hard_failures == 0 ? 0 : 1;
}
