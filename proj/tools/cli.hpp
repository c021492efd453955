#pragma once

// Command-line front end. Documents go to stdout (or --out); diagnostics and
// human summaries go to the error stream. Exit status: 0 success, 1
// unschedulable or invalid, 2 usage or input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dagsched/analysis.hpp"
#include "dagsched/baseline.hpp"
#include "dagsched/bench.hpp"
#include "dagsched/gantt.hpp"
#include "dagsched/model.hpp"
#include "dagsched/scheduler.hpp"

namespace dagsched::cli {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    write_file(path, text);
}

inline std::string analyze_document(const TaskSet& ts) {
  nlohmann::ordered_json doc;
  doc["dags"] = nlohmann::ordered_json::array();
  for (const auto& d : ts.dags) {
    const auto an = analyze(d);
    nlohmann::ordered_json jd;
    jd["id"] = d.dag_id();
    jd["period"] = d.period();
    jd["total_work"] = d.total_work();
    jd["cp_length"] = d.cp_length();
    jd["critical_path"] = nlohmann::ordered_json::array();
    for (auto v : an.cp.nodes) jd["critical_path"].push_back(d.node(v).node_id);
    jd["min_cores"] = an.min_cores;
    jd["rank"] = nlohmann::ordered_json::array();
    for (auto v : an.order) jd["rank"].push_back(d.node(v).node_id);
    jd["nodes"] = nlohmann::ordered_json::array();
    for (std::size_t v = 0; v < d.size(); ++v) {
      const auto na = an.node(v);
      jd["nodes"].push_back({{"id", d.node(v).node_id},
                             {"wcet", d.node(v).wcet},
                             {"prior_plus", na.prior_plus},
                             {"est", na.est},
                             {"lft", na.lft},
                             {"rank", na.rank_pos}});
    }
    jd["clusters"] = nlohmann::ordered_json::array();
    for (const auto& c : an.clusters) {
      nlohmann::ordered_json jc;
      jc["critical_path"] = c.is_cp;
      jc["members"] = nlohmann::ordered_json::array();
      for (auto v : c.members) jc["members"].push_back(d.node(v).node_id);
      jc["density"] = {c.density.num, c.density.den};
      jd["clusters"].push_back(std::move(jc));
    }
    doc["dags"].push_back(std::move(jd));
  }
  return doc.dump(2) + "\n";
}

// Writes the task set of every collection and every validated schedule.
class PersistSink : public ScheduleSink {
 public:
  explicit PersistSink(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void on_taskset(std::size_t c, const TaskSet& ts) override {
    write_file(dir_ / ("c" + std::to_string(c) + "_taskset.json"), dump_taskset(ts));
  }

  void on_schedule(std::size_t c, std::size_t m, const std::string& alg, const ScheduleMap& mp) override {
    write_file(dir_ / ("c" + std::to_string(c) + "_m" + std::to_string(m) + "_" + alg + ".json"), dump_schedule(mp));
  }

 private:
  std::filesystem::path dir_;
};

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Offline semi-partitioned scheduler for periodic DAG task sets", "dagsched"};
  app.require_subcommand(1);

  std::string in_path, out_path, schedule_path, config_path;
  std::size_t cores = 0;
  std::vector<std::size_t> core_list;
  std::uint64_t seed = 0;
  bool trace = false, persist = false;
  std::size_t collection = 0;

  auto* analyze_cmd = app.add_subcommand("analyze", "per-node prior+/EST/LFT/rank table");
  analyze_cmd->add_option("--in", in_path, "task-set document")->required();
  analyze_cmd->add_option("--out", out_path, "output file (default stdout)");

  auto* schedule_cmd = app.add_subcommand("schedule", "build a hyperperiod schedule map");
  schedule_cmd->add_option("--in", in_path, "task-set document")->required();
  schedule_cmd->add_option("--cores", cores, "available cores")->required()->check(CLI::PositiveNumber);
  schedule_cmd->add_option("--out", out_path, "schedule document (default stdout)");
  schedule_cmd->add_flag("--trace", trace, "log every placement to stderr");

  auto* simulate_cmd = app.add_subcommand("simulate", "non-preemptive global EDF simulation");
  simulate_cmd->add_option("--in", in_path, "task-set document")->required();
  simulate_cmd->add_option("--cores", cores, "available cores")->required()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--out", out_path, "trace document (default stdout)");

  auto* validate_cmd = app.add_subcommand("validate", "check a schedule document against a task set");
  validate_cmd->add_option("--in", in_path, "task-set document")->required();
  validate_cmd->add_option("--schedule", schedule_path, "schedule document")->required();

  auto* gen_cmd = app.add_subcommand("gen", "generate one random collection");
  gen_cmd->add_option("--seed", seed, "random seed")->required();
  gen_cmd->add_option("--config", config_path, "generator config");
  gen_cmd->add_option("--collection", collection, "collection index");
  gen_cmd->add_option("--out", out_path, "task-set document (default stdout)");

  auto* bench_cmd = app.add_subcommand("bench", "success-rate / utilization experiment");
  bench_cmd->add_option("--seed", seed, "random seed")->required();
  bench_cmd->add_option("--config", config_path, "generator config");
  bench_cmd->add_option("--cores", core_list, "comma-separated core counts")->required()->delimiter(',');
  bench_cmd->add_option("--out", out_path, "output directory")->required();
  bench_cmd->add_flag("--persist", persist, "also write every task set and validated schedule");

  auto* render_cmd = app.add_subcommand("render", "SVG Gantt chart of a schedule");
  render_cmd->add_option("--in", in_path, "task-set document")->required();
  render_cmd->add_option("--schedule", schedule_path, "schedule document")->required();
  render_cmd->add_option("--out", out_path, "SVG file (default stdout)");

  std::vector<std::string> argv_store{"dagsched"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "dagsched: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*analyze_cmd) {
      emit(out_path, analyze_document(load_taskset(read_file(in_path))), out);
      return 0;
    }
    if (*schedule_cmd) {
      const auto ts = load_taskset(read_file(in_path));
      const auto res = schedule_taskset(ts, cores, trace ? &err : nullptr);
      if (!res.ok()) {
        const auto& f = res.failure();
        err << "failed: " << to_string(f.reason);
        if (f.reason == FailureReason::not_enough_cores)
          err << " (" << f.cores_needed << " cores needed, " << cores << " available)";
        else
          err << " (dag " << f.dag_id << " node " << f.node_id << ")";
        err << "\n";
        return 1;
      }
      const auto& s = res.success();
      emit(out_path, dump_schedule(s.map), out);
      err << "success: " << s.stats.cores_used << (s.stats.cores_used == 1 ? " core" : " cores") << " used, utilization "
          << utilization(s.map, ts.hyperperiod) << "\n";
      return 0;
    }
    if (*simulate_cmd) {
      const auto ts = load_taskset(read_file(in_path));
      const auto sim = gedf_np_simulate(ts, cores);
      emit(out_path, dump_schedule(sim.trace), out);
      if (sim.success) {
        err << "schedulable: all deadlines met on " << cores << " cores\n";
        return 0;
      }
      const auto& m = *sim.first_miss;
      err << "deadline miss: dag " << m.dag_id << " node " << m.node_id << " job " << m.job << " finishes at "
          << m.finish << " > deadline " << m.deadline << "\n";
      return 1;
    }
    if (*validate_cmd) {
      const auto ts = load_taskset(read_file(in_path));
      const auto mp = load_schedule(read_file(schedule_path));
      const auto rep = validate_schedule(mp, ts);
      for (const auto& v : rep.violations) out << to_string(v.kind) << ": " << v.locus << "\n";
      if (rep.ok()) {
        err << "valid\n";
        return 0;
      }
      err << rep.violations.size() << " violation(s)\n";
      return 1;
    }
    if (*gen_cmd) {
      auto cfg = config_path.empty() ? GenConfig{} : load_config(read_file(config_path));
      cfg.seed = seed;
      emit(out_path, dump_taskset(generate_collection(cfg, collection)), out);
      return 0;
    }
    if (*bench_cmd) {
      auto cfg = config_path.empty() ? GenConfig{} : load_config(read_file(config_path));
      cfg.seed = seed;
      const std::filesystem::path dir(out_path);
      std::filesystem::create_directories(dir);
      std::unique_ptr<PersistSink> sink;
      if (persist) sink = std::make_unique<PersistSink>(dir / "schedules");
      const auto rep = run_experiment(cfg, core_list, sink.get());
      write_file(dir / "report.csv", export_table(rep));
      write_file(dir / "summary.json", export_summary(rep));
      for (const auto& s : rep.summary) {
        err << "m=" << s.m << " proposed " << s.proposed_success_rate << " (util " << s.proposed_utilization
            << ") gedf_np " << s.baseline_success_rate << " (util " << s.baseline_utilization << ")\n";
      }
      return 0;
    }
    if (*render_cmd) {
      const auto ts = load_taskset(read_file(in_path));
      const auto mp = load_schedule(read_file(schedule_path));
      emit(out_path, render_gantt(mp, ts), out);
      return 0;
    }
  } catch (const ExperimentAborted& e) {
    err << "dagsched: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "dagsched: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace dagsched::cli
