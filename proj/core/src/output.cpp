#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "json.hpp"
#include "pwbandit/harness.hpp"

namespace pwb {

namespace {

// Arms are written 1-based; NaN is written as an empty field.
std::string num(double v) { return std::isnan(v) ? std::string{} : fmt::format("{:.10g}", v); }

const char* kind_name(EventKind k) { return k == EventKind::Detection ? "detection" : "false_alarm"; }

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json check_json(const AssumptionCheck& c) {
  auto j = nlohmann::json{{"passed", c.passed}, {"violations", nlohmann::json::array()}};
  for (const auto& v : c.violations) {
    nlohmann::json row{{"changepoint", v.changepoint}, {"value", finite_or_null(v.value)}};
    row["arm"] = v.arm ? nlohmann::json(*v.arm + 1) : nlohmann::json(nullptr);
    j["violations"].push_back(std::move(row));
  }
  return j;
}

}  // namespace

void write_traces_csv(std::ostream& out, const ExperimentResult& result) {
  fmt::print(out, "replication,policy,t,arm,reward,inst_regret,cum_regret,restart\n");
  for (const auto& run : result.runs) {
    for (std::size_t s = 0; s < run.steps(); ++s) {
      fmt::print(out, "{},{},{},{},{},{},{},{}\n", run.replication, run.policy_name, s + 1, run.arms[s] + 1,
                 num(run.rewards[s]), num(run.inst_regret[s]), num(run.cum_regret[s]), int{run.restart[s]});
    }
  }
}

void write_events_csv(std::ostream& out, const Metrics& metrics) {
  fmt::print(out, "replication,policy,time,arm,split,kind,true_cp\n");
  for (const auto& run : metrics.runs) {
    for (const auto& e : run.events) {
      fmt::print(out, "{},{},{},{},{},{},{}\n", e.replication, e.policy, e.time, e.arm + 1, e.split, kind_name(e.kind),
                 e.true_cp ? std::to_string(*e.true_cp) : std::string{});
    }
  }
}

void write_summary_csv(std::ostream& out, const Metrics& metrics) {
  fmt::print(out, "policy,mean_final_regret,std,detections,misses,false_alarms,mean_delay,scan_calls,wall_ms,failed\n");
  for (const auto& s : metrics.policies) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{}\n", s.policy, num(s.mean_final_regret), num(s.std_final_regret),
               s.detections, s.misses, s.false_alarms, num(s.mean_delay), num(s.mean_scan_calls), num(s.mean_wall_ms),
               s.failed);
  }
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  fmt::print(out, "policy,horizon,max_phase,median_wall_ms,mean_scan_calls,mean_split_evals,runs\n");
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{},{}\n", r.policy, r.horizon,
               r.max_phase >= 0 ? std::to_string(r.max_phase) : std::string{}, num(r.median_wall_ms),
               num(r.mean_scan_calls), num(r.mean_split_evals), r.runs.size());
  }
}

void write_eta_sweep_csv(std::ostream& out, std::span<const EtaSweepRow> rows) {
  fmt::print(out, "eta,segment_length,policy,mean_success_rate,std_success_rate,failed\n");
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{}\n", num(r.eta), r.segment_length, r.policy, num(r.mean_success_rate),
               num(r.std_success_rate), r.failed);
  }
}

std::string bounds_json(const Environment& env, const BoundReport& b, const AssumptionReport& a) {
  using nlohmann::json;
  json j;
  j["arms"] = env.arm_count();
  j["horizon"] = env.horizon();
  j["changepoints"] = env.changepoints();
  j["delta"] = b.gaps.delta;
  j["gap_floor"] = b.gaps.floor;
  j["optimality_gaps"] = b.gaps.opt_gap;

  json cps = json::array();
  for (std::size_t g = 0; g < b.gaps.changepoints.size(); ++g) {
    const auto& c = b.gaps.changepoints[g];
    json row{{"time", c.time},           {"window", c.window},       {"threshold", c.threshold},
             {"chg_gap", c.chg_gap},     {"delta_optimal", c.delta_optimal},
             {"undetectable", c.undetectable}, {"below_floor", c.below_floor}};
    if (g < b.hardness.size()) {
      const auto& h = b.hardness[g];
      row["hardness"] = {{"h1", finite_or_null(h.h1)},
                         {"h2", finite_or_null(h.h2)},
                         {"optimality_sum", finite_or_null(h.optimality_sum)},
                         {"changepoint_sum", finite_or_null(h.changepoint_sum)},
                         {"sandwich_holds", h.sandwich_holds}};
    }
    cps.push_back(std::move(row));
  }
  j["changepoint_gaps"] = std::move(cps);

  const auto& t1 = b.ucbl_cpd;
  j["ucbl_cpd"] = {{"a", t1.a},         {"b", t1.b},         {"c", t1.c}, {"d", t1.d},
                   {"c_alt", t1.c_alt}, {"total", t1.total}, {"eta_ok", t1.eta_ok}};
  const auto& t2 = b.impcpd;
  j["impcpd"] = {{"a", t2.a},   {"b", t2.b},   {"c", t2.c},
                 {"d", t2.d},   {"e", t2.e},   {"c1", t2.c1},
                 {"c1_cubed", t2.c1_cubed}, {"a_with_c1_cubed", t2.a_with_c1_cubed},
                 {"total", t2.total},       {"eta_ok", t2.eta_ok}};
  const auto& c1 = b.gap_independent;
  j["gap_independent"] = {{"ucbl_leading", c1.ucbl_leading},
                          {"impcpd_leading", c1.impcpd_leading},
                          {"impcpd_constant", c1.impcpd_constant},
                          {"impcpd_constant_c1_cubed", c1.impcpd_constant_c1_cubed}};
  j["lower_bound"] = {{"gap_dependent", finite_or_null(b.lower_bound.gap_dependent)},
                      {"gap_independent", b.lower_bound.gap_independent}};

  json flags = json::array();
  for (const auto& f : b.small_gaps) {
    flags.push_back({{"segment", f.segment}, {"arm", f.arm + 1},
                     {"kind", f.changepoint_gap ? "changepoint" : "optimality"}, {"gap", f.gap}});
  }
  j["small_gaps"] = std::move(flags);

  json margins = json::array();
  for (const auto& m : a.margins) {
    margins.push_back({{"changepoint", m.changepoint}, {"delay_bound", finite_or_null(m.delay_bound)},
                       {"budget", m.budget}});
  }
  j["assumptions"] = {{"global_changes", check_json(a.global)},
                      {"separated", check_json(a.separated)},
                      {"isolated", check_json(a.isolated)},
                      {"margins", std::move(margins)}};
  return j.dump(2);
}

}  // namespace pwb
